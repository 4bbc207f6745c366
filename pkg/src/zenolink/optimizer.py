"""Exhaustive (M, N) search, parameter sweeps and bit-string cost planning."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .analytic import (
    _positive,
    _unit,
    analytic_point,
    feasible,
    lambda0,
    lambda1,
    lambda_avg,
    min_trials,
)
from .quantum import ConfigurationError

DEFAULT_M_MAX = 25
DEFAULT_N_MAX = 25


class InfeasibleError(Exception):
    """No parameter choice can reach the requested success probability."""


class EmptyFeasibleSet(InfeasibleError):
    """Every grid cell is unreachable."""


@dataclass(frozen=True)
class GridSpec:
    q: float
    P: float
    M_max: int = DEFAULT_M_MAX
    N_max: int = DEFAULT_N_MAX
    T_c: float | None = None

    def __post_init__(self):
        _positive("M_max", self.M_max)
        _positive("N_max", self.N_max)
        object.__setattr__(self, "q", _unit("q", self.q))
        object.__setattr__(self, "P", _unit("P", self.P, open_interval=True))


def tie_key(M: int, N: int, zeta: int) -> tuple[int, int, int]:
    return (zeta, M * N, M)


@dataclass(frozen=True)
class OptimizationResult:
    q: float
    P: float
    zeta_min: int
    M_star: int
    N_star: int
    x_star: int
    eta_min: int
    T_min_over_Tc: int
    delta_max: float
    ties: tuple = ()
    grid: tuple = field(default=(), repr=False)
    T_c: float | None = None

    @property
    def T_min(self) -> float | None:
        return None if self.T_c is None else self.T_min_over_Tc * self.T_c

    def summary(self) -> dict:
        d = {
            "q": self.q,
            "P": self.P,
            "zeta_min": self.zeta_min,
            "M_star": self.M_star,
            "N_star": self.N_star,
            "x": self.x_star,
            "eta_min": self.eta_min,
            "T_min_over_Tc": self.T_min_over_Tc,
            "delta_max": self.delta_max,
        }
        if self.T_c is not None:
            d["T_c"] = self.T_c
            d["T_min"] = self.T_min
        return d

    def as_dict(self, with_grid: bool = True) -> dict:
        d = self.summary()
        d["ties"] = [list(t) for t in self.ties]
        if with_grid:
            d["grid"] = [p.as_dict() for p in self.grid]
        return d


def optimize(spec: GridSpec) -> OptimizationResult:
    grid = [
        analytic_point(M, N, spec.q, spec.P, spec.T_c)
        for M in range(1, spec.M_max + 1)
        for N in range(1, spec.N_max + 1)
    ]
    cells = [p for p in grid if p.reachable]
    if not cells:
        raise EmptyFeasibleSet(
            f"no (M, N) with M <= {spec.M_max}, N <= {spec.N_max} reaches P={spec.P} for q={spec.q}"
        )
    best = min(cells, key=lambda p: tie_key(p.M, p.N, p.zeta))
    ties = sorted(
        ((p.M, p.N) for p in cells if p.zeta == best.zeta),
        key=lambda mn: tie_key(mn[0], mn[1], best.zeta),
    )
    zeta_min = best.zeta
    return OptimizationResult(
        q=spec.q,
        P=spec.P,
        zeta_min=zeta_min,
        M_star=best.M,
        N_star=best.N,
        x_star=best.x,
        eta_min=2 * zeta_min,
        T_min_over_Tc=zeta_min,
        delta_max=spec.P / (2 * zeta_min),
        ties=tuple(ties),
        grid=tuple(grid),
        T_c=spec.T_c,
    )


def transmission_rate(M: int, N: int, q: float) -> float:
    return lambda_avg(M, N, q) / (2 * M * N)


def argmax_rate(q: float, N: int, M_max: int) -> int:
    """M maximizing the success rate per channel use at fixed N; ties go to smaller M.

    Values of M at which some emitted bit value can never succeed are skipped
    unless nothing else is available.
    """
    _positive("N", N)
    _positive("M_max", M_max)
    candidates = [M for M in range(1, M_max + 1) if feasible(M, N, q)] or list(range(1, M_max + 1))
    best, best_rate = candidates[0], transmission_rate(candidates[0], N, q)
    for M in candidates[1:]:
        rate = transmission_rate(M, N, q)
        if rate > best_rate:
            best, best_rate = M, rate
    return best


@dataclass(frozen=True)
class NRow:
    N: int
    lam: float
    delta: float
    T_over_Tc: int

    COLUMNS = ("N", "lambda", "delta", "T_over_Tc")

    def as_row(self) -> dict:
        return dict(zip(self.COLUMNS, (self.N, self.lam, self.delta, self.T_over_Tc)))


@dataclass(frozen=True)
class QRow:
    q: float
    M_star: int
    N_star: int
    x: int
    zeta_min: int

    COLUMNS = ("q", "M_star", "N_star", "x", "zeta_min")

    def as_row(self) -> dict:
        return dict(zip(self.COLUMNS, (self.q, self.M_star, self.N_star, self.x, self.zeta_min)))


def sweep_N(q: float, M: int, N_values: Sequence[int]) -> list[NRow]:
    if not N_values:
        raise ConfigurationError("N range is empty")
    rows = []
    for N in N_values:
        p = analytic_point(M, N, q)
        rows.append(NRow(N, p.lam, p.delta, p.T_over_Tc))
    return rows


def sweep_q(P: float, q_values: Sequence[float], M_max: int = DEFAULT_M_MAX, N_max: int = DEFAULT_N_MAX) -> list[QRow]:
    if not q_values:
        raise ConfigurationError("q range is empty")
    rows = []
    for q in q_values:
        r = optimize(GridSpec(q, P, M_max, N_max))
        rows.append(QRow(r.q, r.M_star, r.N_star, r.x_star, r.zeta_min))
    return rows


@dataclass(frozen=True)
class BitCost:
    bit: int
    lam: float
    x: int
    expected_trials: float
    worst_channel_uses: int
    expected_channel_uses: float
    worst_time: float
    expected_time: float


@dataclass(frozen=True)
class BitPlan:
    M: int
    N: int
    P: float
    T_c: float
    bits: tuple[BitCost, ...]
    requires_modified_variant: bool = True

    @property
    def worst_trials(self) -> int:
        return sum(b.x for b in self.bits)

    @property
    def expected_trials(self) -> float:
        return sum(b.expected_trials for b in self.bits)

    @property
    def worst_channel_uses(self) -> int:
        return sum(b.worst_channel_uses for b in self.bits)

    @property
    def expected_channel_uses(self) -> float:
        return sum(b.expected_channel_uses for b in self.bits)

    @property
    def worst_time(self) -> float:
        return sum(b.worst_time for b in self.bits)

    @property
    def expected_time(self) -> float:
        return sum(b.expected_time for b in self.bits)

    def totals(self) -> dict:
        return {
            "worst_trials": self.worst_trials,
            "expected_trials": self.expected_trials,
            "worst_channel_uses": self.worst_channel_uses,
            "expected_channel_uses": self.expected_channel_uses,
            "worst_time": self.worst_time,
            "expected_time": self.expected_time,
        }


def plan_bitstring(bits: Sequence[int] | str, P: float, M: int, N: int, T_c: float = 1.0) -> BitPlan:
    """Per-bit trial counts, channel uses and time for sending ``bits``.

    Uses the known per-bit success probability rather than the source average.
    Alice only learns of bit-0 erasures in the modified wave function, so the
    schedule assumes it.
    """
    if isinstance(bits, str):
        if set(bits) - {"0", "1"}:
            raise ConfigurationError(f"bit string may only contain 0 and 1, got {bits!r}")
        bits = [int(c) for c in bits]
    if any(b not in (0, 1) for b in bits):
        raise ConfigurationError("bits must be 0 or 1")
    P = _unit("P", P, open_interval=True)
    if not (math.isfinite(T_c) and T_c >= 0.0):
        raise ConfigurationError(f"T_c must be a finite non-negative time, got {T_c!r}")
    lam = {0: lambda0(M), 1: lambda1(M, N)}
    dead = [b for b, v in lam.items() if v == 0.0]
    if dead:
        raise InfeasibleError(f"(M={M}, N={N}) can never deliver bit value(s) {dead}")
    uses_per_trial = 2 * M * N
    time_per_trial = M * N * T_c
    per_bit = {}
    for b, v in lam.items():
        x = min_trials(v, P)
        per_bit[b] = BitCost(
            b,
            v,
            x,
            1.0 / v,
            uses_per_trial * x,
            uses_per_trial / v,
            time_per_trial * x,
            time_per_trial / v,
        )
    return BitPlan(M, N, P, T_c, tuple(per_bit[b] for b in bits))
