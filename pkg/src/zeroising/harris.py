"""Event-driven simulation of the zero-temperature majority dynamics.

Each vertex carries a rate-1 Poisson clock; at a ring the spin flips with
probability 1 (it disagrees with a strict majority of neighbours), 1/2 (tie),
or 0.  All randomness comes from a counter-based keyed stream: the draw for
(vertex, ring index, stream tag) is a pure function of the seed, which makes
runs replayable and lets the coupled modes manipulate individual draws.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels as K
from .plane_graph import GraphError, Window

RATE_VALUES = (0.0, 0.5, 1.0)


class EventRecord(NamedTuple):
    time: float
    vertex: int
    uniform: float
    rate: float
    delta_H: int
    flipped: bool


@dataclass
class EventLog:
    """Columnar event log; rate codes 0, 1, 2 stand for rates 0, 1/2, 1."""
    times: np.ndarray
    vertices: np.ndarray
    uniforms: np.ndarray
    rate_codes: np.ndarray
    delta_h: np.ndarray
    flipped: np.ndarray

    def __len__(self):
        return len(self.times)

    def __getitem__(self, i: int) -> EventRecord:
        return EventRecord(float(self.times[i]), int(self.vertices[i]),
                           float(self.uniforms[i]),
                           RATE_VALUES[self.rate_codes[i]],
                           int(self.delta_h[i]), bool(self.flipped[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def rates(self) -> np.ndarray:
        return np.asarray(RATE_VALUES, dtype=np.float64)[self.rate_codes]

    def to_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("time,vertex,uniform,rate,delta_H,flipped\n")
            rates = self.rates()
            for i in range(len(self)):
                fh.write(f"{self.times[i]!r},{int(self.vertices[i])},"
                         f"{self.uniforms[i]!r},{rates[i]!r},"
                         f"{int(self.delta_h[i])},{int(self.flipped[i])}\n")


@dataclass
class SpinConfiguration:
    spins: np.ndarray          # int8, entries +1 / -1
    time_stamp: float = 0.0

    def __post_init__(self):
        self.spins = np.asarray(self.spins, dtype=np.int8)
        if not np.all(np.abs(self.spins) == 1):
            raise GraphError("spins must be +1 or -1")

    def copy(self) -> "SpinConfiguration":
        return SpinConfiguration(self.spins.copy(), self.time_stamp)

    def __le__(self, other: "SpinConfiguration") -> bool:
        return bool(np.all(self.spins <= other.spins))


@dataclass(frozen=True)
class HarrisSchedule:
    """Deterministic random streams keyed by (seed, vertex, index, tag).

    Tags: "clock" for Exp(1) inter-arrivals, "coin" for tie-break uniforms,
    "init" for the initial configuration; the resampling construction uses a
    separate clock/init pair.  Identical keys always reproduce identical
    draws, and distinct keys are independent by construction.
    """
    seed: int

    TAG_CLOCK = K.TAG_CLOCK
    TAG_COIN = K.TAG_COIN
    TAG_INIT = K.TAG_INIT
    TAG_CLOCK2 = K.TAG_CLOCK2
    TAG_INIT2 = K.TAG_INIT2

    def uniform(self, v: int, n: int, tag: int) -> float:
        return K.py_keyed_uniform(self.seed, v, n, tag)

    def exp_interarrival(self, v: int, k: int) -> float:
        return -math.log(1.0 - self.uniform(v, k, K.TAG_CLOCK))

    def ring_times(self, v: int, horizon: float) -> list[float]:
        out, t, k = [], 0.0, 0
        while True:
            t += self.exp_interarrival(v, k)
            if t > horizon:
                return out
            out.append(t)
            k += 1

    def _seed64(self) -> np.uint64:
        return np.uint64(self.seed & K.MASK64)


# ---------------------------------------------------------------------------
# rates
# ---------------------------------------------------------------------------

def delta_H(w: Window, sigma: SpinConfiguration, v: int) -> int:
    """Energy change of flipping v: 2 * sigma(v) * sum of neighbour spins,
    with the window's boundary rule supplying missing neighbours."""
    s = sigma.spins
    acc = sum(int(s[u]) for u in w.neighbors(v))
    if w.boundary.kind == "fixed":
        acc += w.phantom_count(v) * w.boundary.value
    return 2 * int(s[v]) * acc


def flip_rate(w: Window, sigma: SpinConfiguration, v: int) -> float:
    dh = delta_H(w, sigma, v)
    if dh > 0:
        return 0.0
    if dh == 0:
        return 0.5
    return 1.0


def sample_initial(w: Window, p: float, schedule: HarrisSchedule) -> SpinConfiguration:
    """Independent spins, +1 with probability p, from the init stream."""
    if not 0.0 <= p <= 1.0:
        raise GraphError("p must lie in [0, 1]")
    spins = np.empty(w.n, dtype=np.int8)
    for v in range(w.n):
        spins[v] = 1 if schedule.uniform(v, 0, K.TAG_INIT) < p else -1
    return SpinConfiguration(spins, 0.0)


def _capacity(n: int, horizon: float) -> int:
    mean = n * horizon
    return int(mean + 6.0 * math.sqrt(mean + 1.0) + 64)


def _kernel_inputs(w: Window):
    indptr, indices = w.csr()
    return indptr, indices, w.phantom_field()


# ---------------------------------------------------------------------------
# run modes
# ---------------------------------------------------------------------------

def run(w: Window, sigma0: SpinConfiguration, schedule: HarrisSchedule,
        horizon: float,
        listeners: Sequence[Callable[[EventRecord, np.ndarray], None]] = ()
        ) -> tuple[SpinConfiguration, EventLog]:
    """Process rings in global time order up to the horizon.

    Listeners are called synchronously after every event with the record and
    the current spin array (a view; treat it as read-only).
    """
    if horizon <= 0:
        raise GraphError("horizon must be > 0")
    indptr, indices, phantom = _kernel_inputs(w)
    spins = sigma0.spins.copy()
    cap = _capacity(w.n, horizon)
    while True:
        work = spins.copy()
        res = K.run_kernel(indptr, indices, phantom, work,
                           schedule._seed64(), horizon, cap)
        if res[0] >= 0:
            break
        cap *= 2
    count = res[0]
    log = EventLog(*(a[:count].copy() for a in res[1:]))
    if listeners:
        replay = spins.copy()
        for rec in log:
            if rec.flipped:
                replay[rec.vertex] = -replay[rec.vertex]
            for fn in listeners:
                fn(rec, replay)
    return SpinConfiguration(work, horizon), log


class OrderingViolation(AssertionError):
    """The order-preserving coupling failed; carries the offending records."""

    def __init__(self, message: str, lower: EventRecord, upper: EventRecord):
        super().__init__(message)
        self.lower = lower
        self.upper = upper


@dataclass
class CoupledResult:
    final_low: SpinConfiguration
    final_high: SpinConfiguration
    times: np.ndarray
    vertices: np.ndarray
    uniforms: np.ndarray
    log_low: EventLog
    log_high: EventLog

    def __len__(self):
        return len(self.times)


def run_coupled(w: Window, sigma0: SpinConfiguration, sigma0_high: SpinConfiguration,
                schedule: HarrisSchedule, horizon: float) -> CoupledResult:
    """Drive two ordered replicas with the same clocks; the upper replica
    mirrors the uniform (1-u) exactly at disagreement rings.

    Raises OrderingViolation if the pointwise order ever breaks (it cannot,
    for these rates; the check is a falsifier, not a safeguard).
    """
    if not sigma0 <= sigma0_high:
        raise GraphError("run_coupled needs sigma0 <= sigma0_high pointwise")
    if horizon <= 0:
        raise GraphError("horizon must be > 0")
    indptr, indices, phantom = _kernel_inputs(w)
    cap = _capacity(w.n, horizon)
    while True:
        s1 = sigma0.spins.copy()
        s2 = sigma0_high.spins.copy()
        res = K.run_coupled_kernel(indptr, indices, phantom, s1, s2,
                                   schedule._seed64(), horizon, cap)
        if res[0] >= 0:
            break
        cap *= 2
    count, violation = res[0], res[1]
    times, verts, unis, rc1, dh1, fl1, rc2, dh2, fl2 = (a[:count].copy()
                                                        for a in res[2:])
    log1 = EventLog(times, verts, unis, rc1, dh1, fl1)
    log2 = EventLog(times, verts, unis, rc2, dh2, fl2)
    if violation >= 0:
        raise OrderingViolation(
            f"coupling order violated at event {violation} "
            f"(t={times[violation]}, vertex={verts[violation]})",
            log1[violation], log2[violation])
    return CoupledResult(SpinConfiguration(s1, horizon),
                         SpinConfiguration(s2, horizon),
                         times, verts, unis, log1, log2)


@dataclass
class ResampleResult:
    """Outcome of the resampled-spin companion construction."""
    final_base: SpinConfiguration
    final_companion: SpinConfiguration
    log_base: EventLog
    log_companion: EventLog
    kinds: np.ndarray             # 0 shared ring, 1 base-only, 2 companion-only
    resampled_plus: bool          # companion initial spin at v is +1
    fresh_rings_before_tbar: int  # companion clock rings in [0, tbar]
    coupled: bool                 # both of the above conditions hold
    base_held_plus: bool          # base spin at v stays +1 on [tbar, horizon]
    companion_held_plus: bool     # companion spin at v stays +1 on [0, horizon]

    @property
    def joint_event(self) -> bool:
        """All three defining events: resampled +1, quiet fresh clock, and
        the base spin holding +1 from tbar to the horizon."""
        return self.coupled and self.base_held_plus


def run_fixation_resample(w: Window, sigma0: SpinConfiguration,
                          schedule: HarrisSchedule, v: int, tbar: float,
                          horizon: float, p: Optional[float] = None
                          ) -> ResampleResult:
    """Companion process with the spin at v resampled at time zero and a
    fresh clock at v on [0, tbar].

    p is the density used to resample the spin at v; when omitted it falls
    back to the empirical +1 density of sigma0.  When the resampled spin is
    +1 and the fresh clock is silent before tbar, the companion is coupled to
    the base by the order-preserving rule and the run asserts
    base <= companion after every event.
    """
    if not 0 <= tbar < horizon:
        raise GraphError("need 0 <= tbar < horizon")
    if not 0 <= v < w.n:
        raise GraphError(f"unknown vertex id {v}")
    if p is None:
        p = float((sigma0.spins == 1).mean())
    indptr, indices, phantom = _kernel_inputs(w)
    resampled_plus = schedule.uniform(v, 0, K.TAG_INIT2) < p
    fresh = int(K.count_clock2_rings(schedule._seed64(), v, tbar))
    coupled = resampled_plus and fresh == 0

    s2_init = sigma0.spins.copy()
    s2_init[v] = 1 if resampled_plus else -1

    cap = _capacity(w.n, horizon) + int(4 * tbar + 64)
    while True:
        s1 = sigma0.spins.copy()
        s2 = s2_init.copy()
        res = K.run_resample_kernel(indptr, indices, phantom, s1, s2,
                                    schedule._seed64(), v, tbar, horizon,
                                    coupled, cap)
        if res[0] >= 0:
            break
        cap *= 2
    count, violation = res[0], res[1]
    (times, verts, kinds, unis, rc1, dh1, fl1, rc2, dh2, fl2) = (
        a[:count].copy() for a in res[2:])
    log1 = EventLog(times, verts, unis, rc1, dh1, fl1)
    log2 = EventLog(times, verts, unis, rc2, dh2, fl2)
    if violation >= 0:
        raise OrderingViolation(
            f"resample coupling order violated at event {violation} "
            f"(t={times[violation]}, vertex={verts[violation]})",
            log1[violation], log2[violation])

    base_mask = (verts == v) & (kinds != 2) & fl1
    base_flip_times = times[base_mask]
    flips_to_tbar = int((base_flip_times <= tbar).sum())
    spin_at_tbar = int(sigma0.spins[v]) * (1 if flips_to_tbar % 2 == 0 else -1)
    held = bool(spin_at_tbar == 1 and not np.any(base_flip_times > tbar))

    comp_mask = (verts == v) & (kinds != 1) & fl2
    companion_held = bool(s2_init[v] == 1 and not comp_mask.any())

    return ResampleResult(SpinConfiguration(s1, horizon),
                          SpinConfiguration(s2, horizon),
                          log1, log2, kinds, resampled_plus, fresh, coupled,
                          held, companion_held)


# ---------------------------------------------------------------------------
# replay verification (independent oracle over the log)
# ---------------------------------------------------------------------------

def verify_log(w: Window, sigma0: SpinConfiguration, log: EventLog,
               schedule: Optional[HarrisSchedule] = None) -> None:
    """Replay a log in pure Python and re-derive every field.

    Checks, per event: the rate code against the recomputed energy change,
    the flip decision against uniform < rate, and (when a schedule is given)
    the uniform itself against the keyed stream.  Raises AssertionError on
    the first mismatch.
    """
    spins = sigma0.spins.copy()
    ring_count = {}
    for i, rec in enumerate(log):
        v = rec.vertex
        acc = sum(int(spins[u]) for u in w.neighbors(v))
        if w.boundary.kind == "fixed":
            acc += w.phantom_count(v) * w.boundary.value
        dh = 2 * int(spins[v]) * acc
        if dh != rec.delta_H:
            raise AssertionError(f"event {i}: delta_H {rec.delta_H} != replay {dh}")
        rate = 0.0 if dh > 0 else (0.5 if dh == 0 else 1.0)
        if rate != rec.rate:
            raise AssertionError(f"event {i}: rate {rec.rate} != replay {rate}")
        if rec.flipped != (rec.uniform < rate):
            raise AssertionError(f"event {i}: flip decision inconsistent")
        if schedule is not None:
            n = ring_count.get(v, 0)
            u = schedule.uniform(v, n, K.TAG_COIN)
            if u != rec.uniform:
                raise AssertionError(f"event {i}: uniform mismatch")
            ring_count[v] = n + 1
        if rec.flipped:
            spins[v] = -spins[v]
