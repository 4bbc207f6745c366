"""Small-dimension photon path states, beam-splitter rotations and shutter measurements.

Paths are indexed 0..d-1 with d in {2, 3}. States may be sub-normalized: the
squared norm of a state that went through a deterministic shutter projection is
the probability that the photon is still alive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-12
_SNAP = 1e-15


class ConfigurationError(ValueError):
    """Invalid construction parameters (dimension, block, angle, counts)."""


class ContractViolation(ValueError):
    """An operation was called outside its precondition."""


def _frozen(values, dtype=np.complex128) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PathState:
    amps: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amps)
        if amps.ndim != 1 or amps.shape[0] not in (2, 3):
            raise ConfigurationError(f"path state must have 2 or 3 amplitudes, got shape {amps.shape}")
        if not np.all(np.isfinite(amps)):
            raise ContractViolation("non-finite amplitude")
        n2 = float(np.vdot(amps, amps).real)
        if n2 > 1.0 + NORM_TOL:
            raise ContractViolation(f"norm^2 {n2!r} exceeds 1")
        object.__setattr__(self, "amps", amps)

    @classmethod
    def basis(cls, d: int, k: int = 0) -> PathState:
        if d not in (2, 3) or not 0 <= k < d:
            raise ConfigurationError(f"no basis path {k} in dimension {d}")
        v = np.zeros(d, dtype=np.complex128)
        v[k] = 1.0
        return cls(v)

    @property
    def dim(self) -> int:
        return self.amps.shape[0]

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def probabilities(self) -> np.ndarray:
        """Per-path |amplitude|^2 (not renormalized)."""
        return np.abs(self.amps) ** 2

    def allclose(self, other: PathState, atol: float = 1e-12) -> bool:
        return self.dim == other.dim and bool(np.allclose(self.amps, other.amps, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        body = ", ".join(f"{a.real:.6g}" if abs(a.imag) < 1e-15 else f"{a:.6g}" for a in self.amps)
        return f"PathState({body})"


@dataclass(frozen=True, eq=False)
class Unitary:
    matrix: np.ndarray
    angle: float
    block: tuple[int, int]

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other: Unitary) -> Unitary:
        # product keeps the block only when both factors share it
        if self.dim != other.dim:
            raise ContractViolation("dimension mismatch")
        same = self.block == other.block
        return Unitary(
            _frozen(self.matrix @ other.matrix),
            self.angle + other.angle if same else math.nan,
            self.block if same else (-1, -1),
        )


@dataclass(frozen=True)
class MeasurementRecord:
    blocked_path: int
    absorbed: bool
    pre_norm2: float
    post_norm2: float


def cos_sin(theta: float) -> tuple[float, float]:
    """cos and sin with values within 1e-15 of zero snapped to exactly zero.

    Makes the quarter turn (theta = pi/2 for M or N = 1) an exact path swap.
    """
    c, s = math.cos(theta), math.sin(theta)
    if abs(c) < _SNAP:
        c = 0.0
    if abs(s) < _SNAP:
        s = 0.0
    return c, s


def make_rotation(theta: float, d: int = 2, block: tuple[int, int] = (0, 1)) -> Unitary:
    """Real rotation by ``theta`` on the two paths in ``block``, identity elsewhere."""
    if d not in (2, 3):
        raise ConfigurationError(f"dimension must be 2 or 3, got {d}")
    i, j = block
    if i == j or not (0 <= i < d and 0 <= j < d):
        raise ConfigurationError(f"invalid block {block} for dimension {d}")
    if not math.isfinite(theta):
        raise ConfigurationError("rotation angle must be finite")
    c, s = cos_sin(theta)
    m = np.eye(d, dtype=np.complex128)
    m[i, i] = c
    m[i, j] = -s
    m[j, i] = s
    m[j, j] = c
    return Unitary(_frozen(m), float(theta), (i, j))


def _check_count(name: str, k: int) -> int:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
        raise ConfigurationError(f"{name} must be a positive integer, got {k!r}")
    return int(k)


def chain_splitter(N: int) -> Unitary:
    """Beam splitter of the single N-element chain (2 paths, angle pi/2N)."""
    N = _check_count("N", N)
    return make_rotation(math.pi / (2 * N), 2, (0, 1))


def outer_splitter(M: int) -> Unitary:
    """Outer-cycle splitter: rotates paths 0,1 by pi/2M, path 2 untouched."""
    M = _check_count("M", M)
    return make_rotation(math.pi / (2 * M), 3, (0, 1))


def inner_splitter(N: int) -> Unitary:
    """Inner-cycle splitter: rotates paths 1,2 by pi/2N, path 0 untouched."""
    N = _check_count("N", N)
    return make_rotation(math.pi / (2 * N), 3, (1, 2))


def apply(U: Unitary, s: PathState) -> PathState:
    if U.dim != s.dim:
        raise ContractViolation(f"unitary of dimension {U.dim} applied to state of dimension {s.dim}")
    out = U.matrix @ s.amps
    # rounding can push a unit-norm state a hair above 1
    n2 = float(np.vdot(out, out).real)
    if n2 > 1.0:
        out = out / math.sqrt(n2)
    return PathState(out)


def project_out(s: PathState, blocked: int) -> tuple[PathState, float]:
    """Zero the blocked path without renormalizing.

    Returns the surviving (sub-normalized) state and the conditional
    absorption probability |amp_blocked|^2 / norm^2.
    """
    if not 0 <= blocked < s.dim:
        raise ContractViolation(f"blocked path {blocked} out of range for dimension {s.dim}")
    pre = s.norm2
    hit = float(abs(s.amps[blocked]) ** 2)
    out = s.amps.copy()
    out[blocked] = 0.0
    p = hit / pre if pre > 0.0 else 0.0
    return PathState(out), min(p, 1.0)


def _survivor(s: PathState, blocked: int) -> tuple[float, PathState | None]:
    """Absorption probability and the renormalized post-survival state."""
    pre = s.norm2
    p = min(float(abs(s.amps[blocked]) ** 2) / pre, 1.0)
    out = s.amps.copy()
    out[blocked] = 0.0
    rest = float(np.vdot(out, out).real)
    if rest <= 0.0:
        return p, None
    return p, PathState(out / math.sqrt(rest))


def sample_shutter(s: PathState, blocked: int, rng: np.random.Generator) -> tuple[MeasurementRecord, PathState]:
    """Sample one shutter interrogation, drawing exactly one uniform from ``rng``."""
    if not 0 <= blocked < s.dim:
        raise ContractViolation(f"blocked path {blocked} out of range for dimension {s.dim}")
    pre = s.norm2
    if pre <= 0.0:
        raise ContractViolation("cannot sample a shutter on a zero-norm state")
    p, survived = _survivor(s, blocked)
    if rng.random() < p or survived is None:
        zero = PathState(np.zeros(s.dim))
        return MeasurementRecord(blocked, True, pre, 0.0), zero
    return MeasurementRecord(blocked, False, pre, survived.norm2), survived
