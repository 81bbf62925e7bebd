"""Counter-based deterministic random draws.

Every draw is a pure function of ``(seed, stream, timestamp, attempt)``:
there is no generator state to seed, advance, or share.  Workers can
therefore evaluate any subset of addresses in any order and always get
the same values, which is what makes synchronization-free parallel
generation and grow-the-dataset stability possible.

The mixing function is the SplitMix64 finalizer (public constants,
portable, simulation-grade statistical quality -- no cryptographic
claims).  A scalar pure-Python path and a vectorized numpy path are
both provided; they are bit-identical and tested against each other.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

# Stream purposes (8 bits).
PURPOSE_VALUE = 0
PURPOSE_SCHEDULE = 1
PURPOSE_DURATION = 2

# Classes (8 bits).
NORMAL = 0
ANOMALOUS = 1

# The 32-bit attempt field is split into a 16-bit retry counter (low)
# and a 16-bit sub-draw ordinal (high), so composite noise terms and
# callback accessors get independent draws per retry.
ATTEMPT_LIMIT = 1 << 16

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# numpy-typed copies so uint64 arrays never upcast.
_NP_GOLDEN = np.uint64(_GOLDEN)
_NP_MIX1 = np.uint64(_MIX1)
_NP_MIX2 = np.uint64(_MIX2)
_NP_30 = np.uint64(30)
_NP_27 = np.uint64(27)
_NP_31 = np.uint64(31)
_NP_11 = np.uint64(11)
_UNIT_SCALE = 2.0 ** -53


def pack_stream(purpose: int, cls: int, variable_index: int = 0) -> int:
    """Pack (purpose, class, variable index) into a 64-bit stream id.

    Layout: purpose in bits 56-63, class in bits 48-55, variable index
    in bits 32-47, low 32 bits reserved (zero).  Distinct triples map
    to distinct ids.
    """
    if not 0 <= purpose < 256:
        raise ValueError(f"purpose out of range: {purpose}")
    if not 0 <= cls < 256:
        raise ValueError(f"class out of range: {cls}")
    if not 0 <= variable_index < (1 << 16):
        raise ValueError(f"variable_index out of range: {variable_index}")
    return (purpose << 56) | (cls << 48) | (variable_index << 32)


def sub_attempt(attempt: int, sub: int) -> int:
    """Fold a sub-draw ordinal into the attempt field."""
    if not 0 <= attempt < ATTEMPT_LIMIT:
        raise ValueError(f"attempt out of range: {attempt}")
    if not 0 <= sub < ATTEMPT_LIMIT:
        raise ValueError(f"sub-draw ordinal out of range: {sub}")
    return (sub << 16) | attempt


def mix64(x: int) -> int:
    """SplitMix64 finalizer; all arithmetic modulo 2**64."""
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def draw_u64(seed: int, stream: int, t: int, attempt: int = 0) -> int:
    """Raw 64-bit draw at address (t, attempt) on the given stream."""
    counter = (t * 0x100000000 + attempt) & MASK64
    return mix64((mix64(seed ^ stream) + counter) & MASK64)


def draw_unit(seed: int, stream: int, t: int, attempt: int = 0) -> float:
    """Uniform draw in [0, 1) with 53 significant bits."""
    return (draw_u64(seed, stream, t, attempt) >> 11) * _UNIT_SCALE


def draw_range(
    seed: int,
    stream: int,
    t: int,
    lo: float,
    hi: float,
    discrete: bool,
    attempt: int = 0,
) -> float | int:
    """Uniform draw from [lo, hi].

    Continuous: ``lo + u * (hi - lo)``.  Discrete integers:
    ``lo + floor(u * (hi - lo + 1))`` clamped to ``hi``.
    """
    u = draw_unit(seed, stream, t, attempt)
    if discrete:
        lo_i, hi_i = int(lo), int(hi)
        return min(lo_i + int(u * (hi_i - lo_i + 1)), hi_i)
    return lo + u * (hi - lo)


def mix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized mix64 over a uint64 array; bit-identical to mix64."""
    z = x + _NP_GOLDEN
    z = (z ^ (z >> _NP_30)) * _NP_MIX1
    z = (z ^ (z >> _NP_27)) * _NP_MIX2
    return z ^ (z >> _NP_31)


def draw_u64_array(seed: int, stream: int, ts: np.ndarray, attempt: int = 0) -> np.ndarray:
    """Vectorized draw_u64 over an array of timestamps (shared attempt)."""
    base = np.uint64(mix64(seed ^ stream))
    counters = ts.astype(np.uint64) * np.uint64(0x100000000) + np.uint64(attempt)
    return mix64_array(base + counters)


def draw_unit_array(seed: int, stream: int, ts: np.ndarray, attempt: int = 0) -> np.ndarray:
    """Vectorized draw_unit; float64 values in [0, 1)."""
    bits = draw_u64_array(seed, stream, ts, attempt)
    return (bits >> _NP_11).astype(np.float64) * _UNIT_SCALE


def draw_range_array(
    seed: int,
    stream: int,
    ts: np.ndarray,
    lo: float,
    hi: float,
    discrete: bool,
    attempt: int = 0,
) -> np.ndarray:
    """Vectorized draw_range; int64 for discrete, float64 otherwise."""
    u = draw_unit_array(seed, stream, ts, attempt)
    if discrete:
        lo_i, hi_i = int(lo), int(hi)
        vals = lo_i + (u * float(hi_i - lo_i + 1)).astype(np.int64)
        return np.minimum(vals, hi_i)
    return lo + u * (hi - lo)
