"""Numba event-loop kernels and the keyed counter-based random stream.

Every random draw is a pure function of (seed, vertex, ring index, stream
tag), so replays, coupled replicas and clock surgery all see bit-identical
randomness without any sequential generator state.  The event loops keep one
pending ring per vertex in an indexed binary heap ordered by (time, vertex).
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

U = np.uint64

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
C_VERTEX = 0xD1342543DE82EF95
C_INDEX = 0xAF251AF3B0F025B5
C_TAG = 0xB564EF22EC7AECE5

TAG_CLOCK = 1    # per-vertex Poisson inter-arrival times
TAG_COIN = 2     # per-ring tie-break uniforms
TAG_INIT = 3     # initial-configuration uniforms
TAG_CLOCK2 = 4   # replacement clock for the resampling construction
TAG_INIT2 = 5    # resampled initial spin

INV_2_53 = 1.0 / float(1 << 53)

_G = U(GAMMA)
_CV = U(C_VERTEX)
_CN = U(C_INDEX)
_CT = U(C_TAG)
_ONE = U(1)


@njit(inline="always", cache=True)
def _mix(z):
    z = (z ^ (z >> U(30))) * U(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> U(27))) * U(0x94D049BB133111EB)
    return z ^ (z >> U(31))


@njit(inline="always", cache=True)
def keyed_bits(seed, v, n, tag):
    z = _mix(seed ^ _G)
    z = _mix(z ^ ((U(v) + _ONE) * _CV))
    z = _mix(z ^ ((U(n) + _ONE) * _CN))
    z = _mix(z ^ ((U(tag) + _ONE) * _CT))
    return z


@njit(inline="always", cache=True)
def keyed_uniform(seed, v, n, tag):
    return float(keyed_bits(seed, v, n, tag) >> U(11)) * INV_2_53


@njit(inline="always", cache=True)
def exp_interarrival(seed, v, k):
    # inverse CDF of Exp(1); u in [0,1) keeps the log argument positive
    return -math.log(1.0 - keyed_uniform(seed, v, k, TAG_CLOCK))


def py_keyed_bits(seed: int, v: int, n: int, tag: int) -> int:
    """Pure-Python mirror of keyed_bits, used as the replay oracle."""
    def mix(z):
        z ^= z >> 30
        z = (z * 0xBF58476D1CE4E5B9) & MASK64
        z ^= z >> 27
        z = (z * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    z = mix((seed & MASK64) ^ GAMMA)
    z = mix(z ^ (((v + 1) * C_VERTEX) & MASK64))
    z = mix(z ^ (((n + 1) * C_INDEX) & MASK64))
    z = mix(z ^ (((tag + 1) * C_TAG) & MASK64))
    return z


def py_keyed_uniform(seed: int, v: int, n: int, tag: int) -> float:
    return (py_keyed_bits(seed, v, n, tag) >> 11) * INV_2_53


# ---------------------------------------------------------------------------
# indexed binary heap on (time, vertex); one entry per vertex
# ---------------------------------------------------------------------------

@njit(inline="always", cache=True)
def _less(ht, hv, i, j):
    if ht[i] != ht[j]:
        return ht[i] < ht[j]
    return hv[i] < hv[j]


@njit(cache=True)
def _heapify(ht, hv):
    n = len(ht)
    for start in range(n // 2 - 1, -1, -1):
        _sift_down(ht, hv, start, n)


@njit(inline="always", cache=True)
def _sift_down(ht, hv, i, n):
    t, v = ht[i], hv[i]
    while True:
        c = 2 * i + 1
        if c >= n:
            break
        if c + 1 < n and _less(ht, hv, c + 1, c):
            c += 1
        if ht[c] < t or (ht[c] == t and hv[c] < v):
            ht[i], hv[i] = ht[c], hv[c]
            i = c
        else:
            break
    ht[i], hv[i] = t, v


@njit(inline="always", cache=True)
def _replace_top(ht, hv, t, v):
    ht[0], hv[0] = t, v
    _sift_down(ht, hv, 0, len(ht))


@njit(inline="always", cache=True)
def _local_field(spins, indptr, indices, phantom, v):
    acc = phantom[v]
    for k in range(indptr[v], indptr[v + 1]):
        acc += spins[indices[k]]
    return acc


# ---------------------------------------------------------------------------
# single-replica event loop
# ---------------------------------------------------------------------------

@njit(cache=True)
def run_kernel(indptr, indices, phantom, spins, seed, horizon, cap):
    """Advance the configuration to the horizon, logging every ring.

    Returns (count, times, vertices, uniforms, rate_codes, delta_h, flipped);
    count == -1 signals that cap was too small (caller reruns with more).
    Rate codes: 0 -> rate 0, 1 -> rate 1/2, 2 -> rate 1.
    """
    n = len(spins)
    ht = np.empty(n, dtype=np.float64)
    hv = np.empty(n, dtype=np.int64)
    ring = np.zeros(n, dtype=np.uint64)
    for v in range(n):
        ht[v] = exp_interarrival(seed, v, U(0))
        hv[v] = v
    _heapify(ht, hv)

    times = np.empty(cap, dtype=np.float64)
    verts = np.empty(cap, dtype=np.int64)
    unis = np.empty(cap, dtype=np.float64)
    rcodes = np.empty(cap, dtype=np.int8)
    dhs = np.empty(cap, dtype=np.int64)
    flips = np.empty(cap, dtype=np.bool_)
    count = 0
    while True:
        t = ht[0]
        v = hv[0]
        if t > horizon:
            break
        if count == cap:
            return -1, times, verts, unis, rcodes, dhs, flips
        nv = ring[v]
        u = keyed_uniform(seed, v, nv, TAG_COIN)
        s = spins[v]
        dh = 2 * s * _local_field(spins, indptr, indices, phantom, v)
        if dh > 0:
            rate = 0.0
            rc = 0
        elif dh == 0:
            rate = 0.5
            rc = 1
        else:
            rate = 1.0
            rc = 2
        fl = u < rate
        if fl:
            spins[v] = -s
        times[count] = t
        verts[count] = v
        unis[count] = u
        rcodes[count] = rc
        dhs[count] = dh
        flips[count] = fl
        count += 1
        ring[v] = nv + U(1)
        _replace_top(ht, hv, t + exp_interarrival(seed, v, ring[v]), v)
    return count, times, verts, unis, rcodes, dhs, flips


# ---------------------------------------------------------------------------
# coupled pair driven by shared clocks (order-preserving coupling)
# ---------------------------------------------------------------------------

@njit(cache=True)
def run_coupled_kernel(indptr, indices, phantom, s1, s2, seed, horizon, cap):
    """Two replicas, identical Poisson clocks; the upper replica's uniform is
    mirrored (1-u) exactly when the replicas disagree at the ringing vertex.

    Returns (count, violation_index, times, vertices, uniforms,
    rc1, dh1, fl1, rc2, dh2, fl2).
    """
    n = len(s1)
    ht = np.empty(n, dtype=np.float64)
    hv = np.empty(n, dtype=np.int64)
    ring = np.zeros(n, dtype=np.uint64)
    for v in range(n):
        ht[v] = exp_interarrival(seed, v, U(0))
        hv[v] = v
    _heapify(ht, hv)

    times = np.empty(cap, dtype=np.float64)
    verts = np.empty(cap, dtype=np.int64)
    unis = np.empty(cap, dtype=np.float64)
    rc1 = np.empty(cap, dtype=np.int8)
    dh1 = np.empty(cap, dtype=np.int64)
    fl1 = np.empty(cap, dtype=np.bool_)
    rc2 = np.empty(cap, dtype=np.int8)
    dh2 = np.empty(cap, dtype=np.int64)
    fl2 = np.empty(cap, dtype=np.bool_)
    count = 0
    violation = -1
    while True:
        t = ht[0]
        v = hv[0]
        if t > horizon:
            break
        if count == cap:
            return -1, violation, times, verts, unis, rc1, dh1, fl1, rc2, dh2, fl2
        nv = ring[v]
        u = keyed_uniform(seed, v, nv, TAG_COIN)
        agree = s1[v] == s2[v]
        u2 = u if agree else 1.0 - u

        a = s1[v]
        d1 = 2 * a * _local_field(s1, indptr, indices, phantom, v)
        if d1 > 0:
            r1, c1 = 0.0, 0
        elif d1 == 0:
            r1, c1 = 0.5, 1
        else:
            r1, c1 = 1.0, 2
        f1 = u < r1
        if f1:
            s1[v] = -a

        b = s2[v]
        d2 = 2 * b * _local_field(s2, indptr, indices, phantom, v)
        if d2 > 0:
            r2, c2 = 0.0, 0
        elif d2 == 0:
            r2, c2 = 0.5, 1
        else:
            r2, c2 = 1.0, 2
        f2 = u2 < r2
        if f2:
            s2[v] = -b

        times[count] = t
        verts[count] = v
        unis[count] = u
        rc1[count] = c1
        dh1[count] = d1
        fl1[count] = f1
        rc2[count] = c2
        dh2[count] = d2
        fl2[count] = f2
        count += 1
        if s1[v] > s2[v] and violation < 0:
            violation = count - 1
            break
        ring[v] = nv + U(1)
        _replace_top(ht, hv, t + exp_interarrival(seed, v, ring[v]), v)
    return count, violation, times, verts, unis, rc1, dh1, fl1, rc2, dh2, fl2


# ---------------------------------------------------------------------------
# resampled-spin construction: companion gets a fresh clock at w on [0, tbar]
# ---------------------------------------------------------------------------

@njit(cache=True)
def run_resample_kernel(indptr, indices, phantom, s1, s2, seed, w, tbar,
                        horizon, coupled, cap):
    """Base replica s1 and companion s2.

    The companion's clock at w is an independent stream on [0, tbar]
    (TAG_CLOCK2) and coincides with the base clock after tbar.  When
    ``coupled`` is true (the resampled spin is +1 and the fresh clock has no
    ring before tbar) uniforms follow the order-preserving rule and the
    kernel verifies s1 <= s2 at every event; otherwise the companion simply
    reuses the base draws by its own ring count.

    Event channels: kind 0 rings both replicas, kind 1 rings the base only
    (base w-clock at times <= tbar), kind 2 rings the companion only
    (fresh w-clock, always <= tbar).
    """
    n = len(s1)
    ht = np.empty(n + 1, dtype=np.float64)
    hv = np.empty(n + 1, dtype=np.int64)
    ring1 = np.zeros(n, dtype=np.uint64)   # base ring counts
    ring2 = np.zeros(n, dtype=np.uint64)   # companion ring counts
    ring2_clock = U(0)                     # draws consumed from TAG_CLOCK2
    for v in range(n):
        ht[v] = exp_interarrival(seed, v, U(0))
        hv[v] = v
    # slot n: companion-only channel for w (fresh clock on [0, tbar])
    t2 = exp_interarrival_2(seed, w, U(0))
    ht[n] = t2 if t2 <= tbar else np.inf
    hv[n] = n
    _heapify(ht, hv)

    times = np.empty(cap, dtype=np.float64)
    verts = np.empty(cap, dtype=np.int64)
    kinds = np.empty(cap, dtype=np.int8)
    unis = np.empty(cap, dtype=np.float64)
    rc1 = np.empty(cap, dtype=np.int8)
    dh1 = np.empty(cap, dtype=np.int64)
    fl1 = np.empty(cap, dtype=np.bool_)
    rc2 = np.empty(cap, dtype=np.int8)
    dh2 = np.empty(cap, dtype=np.int64)
    fl2 = np.empty(cap, dtype=np.bool_)
    count = 0
    violation = -1
    while True:
        t = ht[0]
        slot = hv[0]
        if t > horizon:
            break
        if count == cap:
            return (-1, violation, times, verts, kinds, unis,
                    rc1, dh1, fl1, rc2, dh2, fl2)
        if slot == n:
            v = w
            kind = 2  # companion-only
        else:
            v = slot
            if v == w and t <= tbar:
                kind = 1  # base-only
            else:
                kind = 0  # shared

        run1 = kind != 2
        run2 = kind != 1

        c1v = 0
        d1v = 0
        f1v = False
        c2v = 0
        d2v = 0
        f2v = False
        u = -1.0
        pre1 = s1[v]  # base spin before this event (agreement uses it)

        if run1:
            nv = ring1[v]
            u = keyed_uniform(seed, v, nv, TAG_COIN)
            a = s1[v]
            d1v = 2 * a * _local_field(s1, indptr, indices, phantom, v)
            if d1v > 0:
                r1, c1v = 0.0, 0
            elif d1v == 0:
                r1, c1v = 0.5, 1
            else:
                r1, c1v = 1.0, 2
            f1v = u < r1
            if f1v:
                s1[v] = -a
            ring1[v] = nv + U(1)

        if run2:
            if kind == 0 and coupled:
                u2 = u if s2[v] == pre1 else 1.0 - u
            else:
                # uncoupled, or companion-only ring: reuse the base stream
                # indexed by the companion's own ring count
                u2 = keyed_uniform(seed, v, ring2[v], TAG_COIN)
            b = s2[v]
            d2v = 2 * b * _local_field(s2, indptr, indices, phantom, v)
            if d2v > 0:
                r2, c2v = 0.0, 0
            elif d2v == 0:
                r2, c2v = 0.5, 1
            else:
                r2, c2v = 1.0, 2
            f2v = u2 < r2
            if f2v:
                s2[v] = -b
            ring2[v] = ring2[v] + U(1)
            if u < 0.0:
                u = u2

        times[count] = t
        verts[count] = v
        kinds[count] = kind
        unis[count] = u
        rc1[count] = c1v
        dh1[count] = d1v
        fl1[count] = f1v
        rc2[count] = c2v
        dh2[count] = d2v
        fl2[count] = f2v
        count += 1

        if coupled and s1[v] > s2[v] and violation < 0:
            violation = count - 1
            break

        if slot == n:
            ring2_clock += U(1)
            tn = t + exp_interarrival_2(seed, w, ring2_clock)
            _replace_top(ht, hv, tn if tn <= tbar else np.inf, slot)
        else:
            _replace_top(ht, hv, t + exp_interarrival(seed, v, ring1[v]), slot)
    return (count, violation, times, verts, kinds, unis,
            rc1, dh1, fl1, rc2, dh2, fl2)


@njit(inline="always", cache=True)
def exp_interarrival_2(seed, v, k):
    return -math.log(1.0 - keyed_uniform(seed, v, k, TAG_CLOCK2))


@njit(cache=True)
def count_clock2_rings(seed, w, tbar):
    """Number of fresh-clock rings in [0, tbar] (the companion's w-clock)."""
    t = 0.0
    k = U(0)
    m = 0
    while True:
        t += exp_interarrival_2(seed, w, k)
        if t > tbar:
            return m
        m += 1
        k += U(1)
