"""Closed-form success probabilities and resource counts for the nested protocol."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

from .quantum import ConfigurationError, cos_sin


class _Reach(enum.Enum):
    UNREACHABLE = "Unreachable"

    def __repr__(self) -> str:
        return "UNREACHABLE"

    def __bool__(self) -> bool:
        return False


UNREACHABLE = _Reach.UNREACHABLE


def _positive(name: str, v) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ConfigurationError(f"{name} must be a positive integer, got {v!r}")
    return v


def _unit(name: str, v, open_interval: bool = False) -> float:
    v = float(v)
    ok = 0.0 < v < 1.0 if open_interval else 0.0 <= v <= 1.0
    if not ok:
        bounds = "(0, 1)" if open_interval else "[0, 1]"
        raise ConfigurationError(f"{name} must lie in {bounds}, got {v!r}")
    return v


def lambda0(M: int) -> float:
    """Bit-0 success probability cos^(2M)(pi/2M)."""
    M = _positive("M", M)
    c, _ = cos_sin(math.pi / (2 * M))
    if c <= 0.0:
        return 0.0
    return math.exp(2 * M * math.log(c))


def lambda1(M: int, N: int) -> float:
    """Bit-1 success probability prod_m [1 - sin^2(m pi/2M) sin^2(pi/2N)]^N."""
    M = _positive("M", M)
    N = _positive("N", N)
    _, s_inner = cos_sin(math.pi / (2 * N))
    s2 = s_inner * s_inner
    log_p = 0.0
    for m in range(1, M + 1):
        _, s = cos_sin(m * math.pi / (2 * M))
        factor = 1.0 - s * s * s2
        if factor <= 0.0:
            return 0.0
        log_p += N * math.log1p(-s * s * s2)
    return math.exp(log_p)


def lambda_avg(M: int, N: int, q: float) -> float:
    q = _unit("q", q)
    return q * lambda0(M) + (1.0 - q) * lambda1(M, N)


def _meets(x: int, log_fail: float, log_target: float) -> bool:
    # 1 - (1-lam)^x >= P  <=>  x*log(1-lam) <= log(1-P)
    return x * log_fail <= log_target


def min_trials(lam: float, P: float):
    """Smallest x with 1 - (1 - lam)^x >= P, or UNREACHABLE when lam == 0."""
    lam = _unit("lambda", lam)
    P = _unit("P", P, open_interval=True)
    if lam == 0.0:
        return UNREACHABLE
    if lam == 1.0:
        return 1
    log_fail, log_target = math.log1p(-lam), math.log1p(-P)
    x = max(1, math.ceil(log_target / log_fail))
    while not _meets(x, log_fail, log_target):
        x += 1
    while x > 1 and _meets(x - 1, log_fail, log_target):
        x -= 1
    return x


def feasible(M: int, N: int, q: float) -> bool:
    """Every bit value the source actually emits has a nonzero success probability."""
    q = _unit("q", q)
    if q > 0.0 and lambda0(M) == 0.0:
        return False
    if q < 1.0 and lambda1(M, N) == 0.0:
        return False
    return True


def zeta(M: int, N: int, q: float, P: float):
    """Channel-cycle cost M*N*x for reaching success probability P."""
    if not feasible(M, N, q):
        return UNREACHABLE
    x = min_trials(lambda_avg(M, N, q), P)
    if x is UNREACHABLE:
        return UNREACHABLE
    return M * N * x


def derived_resources(zeta_min: int, P: float, T_c: float = 1.0) -> tuple[int, float, float]:
    """(eta_min, T_min, delta_max) from the optimal cost."""
    if zeta_min is UNREACHABLE or zeta_min < 1:
        raise ConfigurationError(f"zeta_min must be a positive integer, got {zeta_min!r}")
    eta_min = 2 * zeta_min
    return eta_min, zeta_min * T_c, P / eta_min


@dataclass(frozen=True)
class AnalyticPoint:
    M: int
    N: int
    q: float
    lambda0: float
    lambda1: float
    lam: float
    eta: int
    T_over_Tc: int
    delta: float
    P: float | None = None
    T_c: float | None = None
    x: object = None  # int, UNREACHABLE, or None when P is not given
    zeta: object = None

    @property
    def reachable(self) -> bool:
        return self.zeta is not None and self.zeta is not UNREACHABLE

    @property
    def T(self) -> float | None:
        return None if self.T_c is None else self.T_over_Tc * self.T_c

    def as_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        for k in ("x", "zeta"):
            if d[k] is UNREACHABLE:
                d[k] = UNREACHABLE.value
        if self.T_c is not None:
            d["T"] = self.T
        return d


def analytic_point(M: int, N: int, q: float, P: float | None = None, T_c: float | None = None) -> AnalyticPoint:
    l0, l1 = lambda0(M), lambda1(M, N)
    q = _unit("q", q)
    lam = q * l0 + (1.0 - q) * l1
    eta = 2 * M * N
    x = z = None
    if P is not None:
        P = _unit("P", P, open_interval=True)
        if feasible(M, N, q):
            x = min_trials(lam, P)
            z = UNREACHABLE if x is UNREACHABLE else M * N * x
        else:
            x = z = UNREACHABLE
    if T_c is not None and not (math.isfinite(T_c) and T_c >= 0.0):
        raise ConfigurationError(f"T_c must be a finite non-negative time, got {T_c!r}")
    return AnalyticPoint(M, N, q, l0, l1, lam, eta, M * N, lam / eta, P, T_c, x, z)
