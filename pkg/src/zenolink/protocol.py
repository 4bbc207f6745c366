"""Semi-counterfactual and nested (chained Zeno) protocol runs.

Both protocols are compiled into a flat program of splitter and shutter steps.
The exact engine walks the program once with Kraus projections; the Monte
Carlo engine walks it with sampled shutter interrogations. Detectors are
path-indexed (D0 = photon leaves on path 0, D1 = path 1); which detector means
which bit lives in ``DECODE``.
"""

from __future__ import annotations

import enum
import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .quantum import (
    ConfigurationError,
    PathState,
    Unitary,
    _survivor,
    apply,
    chain_splitter,
    inner_splitter,
    outer_splitter,
    project_out,
    sample_shutter,
)

UNDERFLOW_NORM2 = 1e-300
THREADS_ENV = "ZENOLINK_THREADS"


class Kind(str, enum.Enum):
    SEMI = "semi"
    NESTED = "nested"


class Variant(str, enum.Enum):
    ORIGINAL = "original"
    MODIFIED = "modified"


class Label(str, enum.Enum):
    D0 = "D0"
    D1 = "D1"
    ABSORBED = "AbsorbedByShutter"
    CHANNEL = "ChannelDetector"


class Erasure(str, enum.Enum):
    NONE = "none"
    BOB_ONLY = "bob_only"
    BOTH = "both"


@dataclass(frozen=True)
class TerminalEvent:
    label: Label
    erasure_known_by: Erasure = Erasure.NONE

    def __post_init__(self):
        if self.label in (Label.D0, Label.D1) and self.erasure_known_by is not Erasure.NONE:
            raise ConfigurationError("detector clicks carry no erasure knowledge")

    @property
    def is_detection(self) -> bool:
        return self.label in (Label.D0, Label.D1)

    def __str__(self) -> str:
        return self.label.value


D0 = TerminalEvent(Label.D0)
D1 = TerminalEvent(Label.D1)
ABSORBED = TerminalEvent(Label.ABSORBED, Erasure.BOTH)
CHANNEL_BOB_ONLY = TerminalEvent(Label.CHANNEL, Erasure.BOB_ONLY)

# detector label -> decoded bit, per protocol wiring
DECODE = {
    Kind.SEMI: {Label.D1: 0, Label.D0: 1},
    Kind.NESTED: {Label.D0: 0, Label.D1: 1},
}


def decode(kind: Kind, label: Label) -> int | None:
    return DECODE[Kind(kind)].get(Label(label))


@dataclass(frozen=True)
class ProtocolParams:
    kind: Kind
    N: int
    bit: int
    M: int = 1
    variant: Variant = Variant.ORIGINAL

    def __post_init__(self):
        try:
            kind = Kind(self.kind)
            variant = Variant(self.variant)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
        for name in ("M", "N"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {v!r}")
        if self.bit not in (0, 1):
            raise ConfigurationError(f"bit must be 0 or 1, got {self.bit!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "variant", variant)
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "bit", int(self.bit))
        if kind is Kind.SEMI:
            object.__setattr__(self, "M", 1)
            object.__setattr__(self, "variant", Variant.ORIGINAL)
        else:
            object.__setattr__(self, "M", int(self.M))

    @classmethod
    def semi(cls, N: int, bit: int) -> ProtocolParams:
        return cls(Kind.SEMI, N, bit)

    @classmethod
    def nested(cls, M: int, N: int, bit: int, variant: Variant | str = Variant.ORIGINAL) -> ProtocolParams:
        return cls(Kind.NESTED, N, bit, M, Variant(variant))

    @property
    def correct_detector(self) -> TerminalEvent:
        wanted = next(lbl for lbl, b in DECODE[self.kind].items() if b == self.bit)
        return D0 if wanted is Label.D0 else D1

    @property
    def wrong_detector(self) -> TerminalEvent:
        return D1 if self.correct_detector is D0 else D0

    @property
    def expected_f(self) -> int:
        """Shutter interrogations along a successful trajectory."""
        if self.kind is Kind.SEMI:
            return self.N if self.bit == 1 else 0
        return self.M * self.N if self.bit == 1 else self.M

    def as_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "M": self.M,
            "N": self.N,
            "bit": self.bit,
            "variant": self.variant.value,
        }


# -- program compilation -------------------------------------------------------


@dataclass(frozen=True)
class _Shutter:
    blocked: int
    event: TerminalEvent


@dataclass(frozen=True)
class _Program:
    dim: int
    steps: tuple  # of Unitary | _Shutter
    traverses_channel: bool  # photon crosses the channel on every run (semi, bit 0)
    events: tuple  # every terminal event this program can produce

    @property
    def n_shutters(self) -> int:
        return sum(isinstance(s, _Shutter) for s in self.steps)


def _fuse(ops: list[Unitary]) -> Unitary:
    out = ops[0]
    for U in ops[1:]:
        out = U @ out
    return out


@lru_cache(maxsize=4096)
def _compile(params: ProtocolParams) -> _Program:
    N, M = params.N, params.M
    if params.kind is Kind.SEMI:
        U = chain_splitter(N)
        if params.bit == 1:
            shutter = _Shutter(1, ABSORBED)
            return _Program(2, (U, shutter) * N, False, (D0, D1, ABSORBED))
        return _Program(2, (_fuse([U] * N),), True, (D0, D1))

    UO, UI = outer_splitter(M), inner_splitter(N)
    if params.bit == 1:
        shutter = _Shutter(2, ABSORBED)
        cycle = (UO,) + (UI, shutter) * N
        return _Program(3, cycle * M, False, (D0, D1, ABSORBED))
    erasure = ABSORBED if params.variant is Variant.MODIFIED else CHANNEL_BOB_ONLY
    cycle = (_fuse([UO] + [UI] * N), _Shutter(2, erasure))
    return _Program(3, cycle * M, False, (D0, D1, erasure))


def _detector_cdf(state: PathState) -> np.ndarray:
    p = state.probabilities()
    return np.cumsum(p) / p.sum()


def _detector_from(u: float, cdf: np.ndarray) -> TerminalEvent:
    k = int(np.searchsorted(cdf, u, side="right"))
    k = min(k, len(cdf) - 1)
    if k == 0:
        return D0
    if k == 1:
        return D1
    raise RuntimeError("photon left on a path with no detector")


# -- exact engine --------------------------------------------------------------


@dataclass(frozen=True)
class OutcomeDistribution:
    params: ProtocolParams
    probs: dict  # TerminalEvent -> probability
    f_success: int
    channel_presence_on_success: bool

    def prob(self, event: TerminalEvent | Label | str) -> float:
        if isinstance(event, TerminalEvent):
            return self.probs.get(event, 0.0)
        label = Label(event)
        return sum(p for e, p in self.probs.items() if e.label is label)

    @property
    def success(self) -> float:
        return self.prob(self.params.correct_detector)

    @property
    def bit_error(self) -> float:
        return self.prob(self.params.wrong_detector)

    @property
    def erasure(self) -> float:
        return sum(p for e, p in self.probs.items() if not e.is_detection)

    @property
    def survival(self) -> float:
        return self.prob(D0) + self.prob(D1)

    @property
    def channel_probability(self) -> float:
        """Probability that the photon is found in the transmission channel."""
        if _compile(self.params).traverses_channel:
            return 1.0
        return self.erasure

    def as_dict(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "probs": {
                e.label.value: {"p": p, "erasure_known_by": e.erasure_known_by.value}
                for e, p in self.probs.items()
            },
            "f_success": self.f_success,
            "channel_presence_on_success": self.channel_presence_on_success,
        }


def run_exact(params: ProtocolParams) -> OutcomeDistribution:
    prog = _compile(params)
    probs = {e: 0.0 for e in prog.events}
    state = PathState.basis(prog.dim, 0)
    for step in prog.steps:
        if isinstance(step, Unitary):
            state = apply(step, state)
            continue
        pre = state.norm2
        state, p = project_out(state, step.blocked)
        probs[step.event] += p * pre
        if state.norm2 < UNDERFLOW_NORM2:
            probs[step.event] += state.norm2
            state = PathState(np.zeros(prog.dim))
            break
    final = state.probabilities()
    probs[D0] += float(final[0])
    probs[D1] += float(final[1])
    return OutcomeDistribution(
        params,
        probs,
        params.expected_f,
        prog.traverses_channel,
    )


def run_semi_exact(N: int, bit: int) -> OutcomeDistribution:
    return run_exact(ProtocolParams.semi(N, bit))


def run_nested_exact(M: int, N: int, bit: int, variant: Variant | str = Variant.ORIGINAL) -> OutcomeDistribution:
    return run_exact(ProtocolParams.nested(M, N, bit, variant))


# -- Monte Carlo ---------------------------------------------------------------


def _check_seed(name: str, v: int) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or not 0 <= v < 2**64:
        raise ConfigurationError(f"{name} must be an integer in [0, 2**64), got {v!r}")
    return int(v)


def trial_stream(master_seed: int, trial_index: int) -> np.random.Generator:
    """Counter-based stream: Philox keyed by the master seed, trial index in the counter."""
    master_seed = _check_seed("master_seed", master_seed)
    trial_index = _check_seed("trial_index", trial_index)
    return np.random.Generator(np.random.Philox(key=master_seed, counter=[0, 0, trial_index, 0]))


class _StreamCursor:
    """Reuses one Philox instance, repositioning it at each trial's counter block.

    Produces exactly the draws of ``trial_stream(master_seed, i)``.
    """

    def __init__(self, master_seed: int):
        self._bitgen = np.random.Philox(key=_check_seed("master_seed", master_seed))
        self._key = self._bitgen.state["state"]["key"].copy()
        self.gen = np.random.Generator(self._bitgen)

    def at(self, trial_index: int) -> np.random.Generator:
        self._bitgen.state = {
            "bit_generator": "Philox",
            "state": {"counter": np.array([0, 0, trial_index, 0], dtype=np.uint64), "key": self._key},
            "buffer": np.zeros(4, dtype=np.uint64),
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }
        return self.gen


@dataclass(frozen=True)
class TrialOutcome:
    event: TerminalEvent
    f: int
    channel_visits: int
    seed_index: int


def run_trial_mc(params: ProtocolParams, master_seed: int, trial_index: int) -> TrialOutcome:
    """One photon through the protocol, every shutter interrogation sampled."""
    prog = _compile(params)
    rng = trial_stream(master_seed, trial_index)
    state = PathState.basis(prog.dim, 0)
    f = 0
    for step in prog.steps:
        if isinstance(step, Unitary):
            state = apply(step, state)
            continue
        rec, state = sample_shutter(state, step.blocked, rng)
        f += 1
        if rec.absorbed:
            return TrialOutcome(step.event, f, 1, trial_index)
    event = _detector_from(rng.random(), _detector_cdf(state))
    return TrialOutcome(event, f, int(prog.traverses_channel), trial_index)


@dataclass(frozen=True)
class _Schedule:
    """Conditional shutter hit probabilities along the surviving branch."""

    hit_p: np.ndarray
    hit_events: tuple
    cdf: np.ndarray
    traverses_channel: bool


@lru_cache(maxsize=256)
def _schedule(params: ProtocolParams) -> _Schedule:
    # same arithmetic as run_trial_mc, so both paths see identical thresholds
    prog = _compile(params)
    state = PathState.basis(prog.dim, 0)
    ps, events = [], []
    alive = True
    for step in prog.steps:
        if isinstance(step, Unitary):
            if alive:
                state = apply(step, state)
            continue
        if not alive:
            ps.append(1.0)
            events.append(step.event)
            continue
        p, nxt = _survivor(state, step.blocked)
        if nxt is None:
            p, alive = 1.0, False
        else:
            state = nxt
        ps.append(p)
        events.append(step.event)
    cdf = _detector_cdf(state) if alive else np.array([1.0, 1.0])
    return _Schedule(np.array(ps), tuple(events), cdf, prog.traverses_channel)


def _fast_trial(sched: _Schedule, u: np.ndarray) -> tuple[TerminalEvent, int, int]:
    n = len(sched.hit_p)
    if n:
        hits = u[:n] < sched.hit_p
        k = int(hits.argmax())
        if hits[k]:
            return sched.hit_events[k], k + 1, 1
    return _detector_from(float(u[n]), sched.cdf), n, int(sched.traverses_channel)


@dataclass
class EnsembleStats:
    params: ProtocolParams
    master_seed: int
    trials: int = 0
    counts: Counter = field(default_factory=Counter)  # TerminalEvent -> count
    f_hist: Counter = field(default_factory=Counter)
    f_hist_success: Counter = field(default_factory=Counter)
    channel_found: int = 0
    successes: int = 0
    success_channel_visits: int = 0

    def add(self, outcome: TrialOutcome) -> None:
        self._add(outcome.event, outcome.f, outcome.channel_visits)

    def _add(self, event: TerminalEvent, f: int, visits: int) -> None:
        self.trials += 1
        self.counts[event] += 1
        self.f_hist[f] += 1
        if visits:
            self.channel_found += 1
        if event == self.params.correct_detector:
            self.successes += 1
            self.f_hist_success[f] += 1
            if visits:
                self.success_channel_visits += 1

    def merge(self, other: EnsembleStats) -> EnsembleStats:
        if other.params != self.params or other.master_seed != self.master_seed:
            raise ConfigurationError("can only merge ensembles of the same params and seed")
        return EnsembleStats(
            self.params,
            self.master_seed,
            self.trials + other.trials,
            self.counts + other.counts,
            self.f_hist + other.f_hist,
            self.f_hist_success + other.f_hist_success,
            self.channel_found + other.channel_found,
            self.successes + other.successes,
            self.success_channel_visits + other.success_channel_visits,
        )

    def frequency(self, event: TerminalEvent) -> float:
        return self.counts.get(event, 0) / self.trials

    def stderr(self, event: TerminalEvent) -> float:
        p = self.frequency(event)
        return math.sqrt(p * (1.0 - p) / self.trials)

    @property
    def epsilon_hat(self) -> float:
        return self.channel_found / self.trials

    def comparison(self, exact: OutcomeDistribution | None = None) -> list[dict]:
        """Per-event exact vs empirical rows, plus a ``channel_found`` row."""
        exact = exact or run_exact(self.params)
        rows = []
        pairs = [(str(e), e.erasure_known_by.value, exact.prob(e), self.frequency(e)) for e in exact.probs]
        pairs.append(("channel_found", "", exact.channel_probability, self.epsilon_hat))
        for name, knows, p, freq in pairs:
            sigma = math.sqrt(max(p * (1.0 - p), 0.0) / self.trials)
            if sigma > 0.0:
                z = (freq - p) / sigma
            else:
                z = 0.0 if abs(freq - p) < 1e-12 else math.inf
            rows.append(
                {
                    "event": name,
                    "erasure_known_by": knows,
                    "exact": p,
                    "empirical": freq,
                    "stderr": math.sqrt(freq * (1.0 - freq) / self.trials),
                    "z": z,
                }
            )
        return rows


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(n, 1)


def _run_chunk(params: ProtocolParams, master_seed: int, start: int, stop: int) -> EnsembleStats:
    sched = _schedule(params)
    n = len(sched.hit_p) + 1
    cursor = _StreamCursor(master_seed)
    stats = EnsembleStats(params, master_seed)
    for i in range(start, stop):
        u = cursor.at(i).random(n)
        stats._add(*_fast_trial(sched, u))
    return stats


def run_ensemble(
    params: ProtocolParams,
    trials: int,
    master_seed: int,
    threads: int | None = None,
    first_index: int = 0,
) -> EnsembleStats:
    """Aggregate trials ``first_index .. first_index + trials - 1``.

    Trial i draws from ``trial_stream(master_seed, i)`` exactly as
    ``run_trial_mc`` does, so results do not depend on chunking or threads.
    """
    if isinstance(trials, bool) or not isinstance(trials, (int, np.integer)) or trials < 1:
        raise ConfigurationError(f"trials must be a positive integer, got {trials!r}")
    master_seed = _check_seed("master_seed", master_seed)
    threads = default_threads() if threads is None else max(int(threads), 1)
    stop = first_index + int(trials)
    if threads == 1:
        return _run_chunk(params, master_seed, first_index, stop)
    bounds = np.linspace(first_index, stop, threads + 1).astype(int)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda ab: _run_chunk(params, master_seed, ab[0], ab[1]), zip(bounds[:-1], bounds[1:])))
    out = EnsembleStats(params, master_seed)
    for part in parts:
        out = out.merge(part)
    return out
