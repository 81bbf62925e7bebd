import csv
import random
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anomgen import prng

GOLDEN = Path(__file__).parent / "data" / "prng_golden.csv"


def test_mix64_reference_value():
    # First output of the published algorithm for state 0.
    assert prng.mix64(0) == 0xE220A8397B1DCDAF


def test_mix64_pure():
    assert prng.mix64(12345) == prng.mix64(12345)


def test_mix64_uniformity_chi_square():
    from scipy.stats import chi2

    n = 1_000_000
    xs = np.arange(n, dtype=np.uint64)
    top53 = prng.mix64_array(xs) >> np.uint64(11)
    buckets = (top53 // np.uint64((1 << 53) // 100)).astype(np.int64)
    buckets = np.minimum(buckets, 99)
    counts = np.bincount(buckets, minlength=100)
    expected = n / 100
    stat = float(((counts - expected) ** 2 / expected).sum())
    assert stat < chi2.ppf(1 - 0.001, df=99)


def test_golden_vectors():
    with open(GOLDEN, newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 10
    for row in rows:
        got = prng.draw_u64(
            int(row["seed"]),
            int(row["stream"]),
            int(row["timestamp"]),
            int(row["attempt"]),
        )
        assert got == int(row["expected_u64_hex"], 16), row


def test_draw_u64_deterministic_and_address_sensitive():
    s = prng.pack_stream(prng.PURPOSE_VALUE, prng.NORMAL, 3)
    assert prng.draw_u64(9, s, 0) == prng.draw_u64(9, s, 0)
    assert prng.draw_u64(9, s, 0) != prng.draw_u64(9, s, 1)
    assert prng.draw_u64(9, s, 5, attempt=0) != prng.draw_u64(9, s, 5, attempt=1)


def test_draws_independent_of_request_order():
    s = prng.pack_stream(prng.PURPOSE_VALUE, prng.ANOMALOUS, 0)
    forward = [prng.draw_u64(7, s, t) for t in range(100)]
    backward = [prng.draw_u64(7, s, t) for t in reversed(range(100))]
    shuffled_ts = list(range(100))
    random.Random(0).shuffle(shuffled_ts)
    shuffled = {t: prng.draw_u64(7, s, t) for t in shuffled_ts}
    assert forward == list(reversed(backward))
    assert forward == [shuffled[t] for t in range(100)]


def test_unit_mapping_bounds():
    # The 53-bit mapping sends 0 to 0.0 and the all-ones word below 1.0.
    assert (0 >> 11) * 2.0**-53 == 0.0
    top = (((1 << 64) - 1) >> 11) * 2.0**-53
    assert top == (2**53 - 1) / 2**53
    assert top < 1.0


def test_draw_unit_empirical_mean():
    s = prng.pack_stream(prng.PURPOSE_VALUE, prng.NORMAL, 0)
    ts = np.arange(1_000_000, dtype=np.uint64)
    u = prng.draw_unit_array(123, s, ts)
    assert u.min() >= 0.0
    assert u.max() < 1.0
    assert 0.499 <= float(u.mean()) <= 0.501


def test_draw_range_degenerate():
    s = prng.pack_stream(prng.PURPOSE_VALUE, prng.NORMAL, 0)
    for t in range(20):
        assert prng.draw_range(1, s, t, 3.5, 3.5, discrete=False) == 3.5


def test_draw_range_discrete_binary():
    s = prng.pack_stream(prng.PURPOSE_VALUE, prng.ANOMALOUS, 0)
    vals = {prng.draw_range(1, s, t, 0, 1, discrete=True) for t in range(200)}
    assert vals == {0, 1}


def test_draw_range_continuous_empirical():
    s = prng.pack_stream(prng.PURPOSE_VALUE, prng.NORMAL, 1)
    ts = np.arange(100_000, dtype=np.uint64)
    v = prng.draw_range_array(77, s, ts, -1.0, 1.0, discrete=False)
    assert v.min() >= -1.0
    assert v.max() < 1.0
    assert -0.01 <= float(v.mean()) <= 0.01


@given(
    seed=st.integers(min_value=0, max_value=(1 << 64) - 1),
    purpose=st.integers(min_value=0, max_value=2),
    cls=st.sampled_from([prng.NORMAL, prng.ANOMALOUS]),
    var=st.integers(min_value=0, max_value=(1 << 16) - 1),
    t=st.integers(min_value=0, max_value=(1 << 48)),
    attempt=st.integers(min_value=0, max_value=(1 << 32) - 1),
)
@settings(max_examples=200)
def test_vector_path_matches_scalar(seed, purpose, cls, var, t, attempt):
    stream = prng.pack_stream(purpose, cls, var)
    ts = np.array([t, t + 1, t + 13], dtype=np.uint64)
    vec = prng.draw_u64_array(seed, stream, ts, attempt)
    ref = [prng.draw_u64(seed, stream, int(x), attempt) for x in ts]
    assert vec.tolist() == ref
    uv = prng.draw_unit_array(seed, stream, ts, attempt)
    ur = [prng.draw_unit(seed, stream, int(x), attempt) for x in ts]
    assert uv.tolist() == ur


@given(
    lo=st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
    width=st.floats(min_value=0.0, max_value=1e6, allow_nan=False),
    t=st.integers(min_value=0, max_value=10_000),
)
@settings(max_examples=100)
def test_draw_range_within_bounds(lo, width, t):
    hi = lo + width
    s = prng.pack_stream(prng.PURPOSE_VALUE, prng.NORMAL, 0)
    v = prng.draw_range(5, s, t, lo, hi, discrete=False)
    assert lo <= v <= hi


def test_pack_stream_injective_over_small_grid():
    seen = {}
    for purpose in range(3):
        for cls in (0, 1):
            for var in (0, 1, 2, 255, 65535):
                sid = prng.pack_stream(purpose, cls, var)
                assert sid not in seen
                seen[sid] = (purpose, cls, var)


def test_pack_stream_rejects_out_of_range():
    with pytest.raises(ValueError):
        prng.pack_stream(256, 0, 0)
    with pytest.raises(ValueError):
        prng.pack_stream(0, 0, 1 << 16)


def test_sub_attempt_packing():
    assert prng.sub_attempt(5, 0) == 5
    assert prng.sub_attempt(5, 1) == (1 << 16) | 5
    with pytest.raises(ValueError):
        prng.sub_attempt(prng.ATTEMPT_LIMIT, 0)
    with pytest.raises(ValueError):
        prng.sub_attempt(0, prng.ATTEMPT_LIMIT)
