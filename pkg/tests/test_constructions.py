import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rwslab import (
    InvalidParameterError,
    InvalidPreconditionError,
    NoDivergenceSequenceError,
    PlacementInfeasibleError,
    build_filter,
    cascade_evaluate,
)
from rwslab.constructions import (
    WITNESS_SIGN_STREAM,
    block_witness_process,
    coefficient_exceedances,
    dense_unbounded_field,
    divergence_scale_field,
    divergence_scales,
    divergent_subsequence,
    geometric_scale_ratio,
    nested_placement,
    sparse_loglog_field,
    sparse_loglog_rate,
    support_spacing,
    thin_to_feasible,
    two_sign_tree_field,
    unbounded_series_field,
)
from rwslab.fields import (
    PowerLogRate,
    check_criterion,
    envelope_from_rate,
    scale_envelope,
    uniform_decay_field,
    zero_field,
)
from rwslab.laws import draw_array, gaussian, heavy_tail, rademacher


# ---------------------------------------------------------------- oracles

def greedy_blocks_oracle(values, horizon):
    """Block-by-block greedy selection, written independently with plain
    Python sums: per block, candidates are the progressions keeping gaps
    non-decreasing, scored by their remaining total."""
    picked = []
    gap = 2
    while True:
        if picked:
            candidates = [picked[-1] + gap - 1, picked[-1] + gap]
        else:
            candidates = []
            for r in range(gap):
                firsts = [j for j in range(r, horizon + 1, gap) if values[j] > 0]
                if firsts:
                    candidates.append(firsts[0])
        candidates = [s for s in candidates if s <= horizon]
        if not candidates:
            return picked
        scored = sorted(
            (-math.fsum(values[s + gap * t] for t in range((horizon - s) // gap + 1)), s)
            for s in candidates)
        s = scored[0][1]
        total = 0.0
        while s <= horizon and total < 1.0:
            picked.append(s)
            total += values[s]
            s += gap
        if total < 1.0:
            return picked
        gap += 1


def window_fractions(table):
    step = Fraction(2) ** -table.positivity_interval.level
    return (table.positivity_interval.index * step,
            (table.positivity_interval.index + 1) * step)


def brute_leftmost(table, j, lo, hi):
    a, b = window_fractions(table)
    first = math.floor(lo * 2**j - a) - 2
    for k in range(first, first + table.support_length + 8):
        if (k + a) / 2**j >= lo and (k + b) / 2**j <= hi:
            return k
    return None


def assert_nesting(table, placement):
    a, b = window_fractions(table)
    target = (Fraction(1, 8), Fraction(3, 8))
    for j, k, (lo, hi) in zip(placement.scales, placement.positions,
                              placement.intervals):
        # stored window belongs to the stored (possibly wrapped) position
        unwrapped = lo * 2**j - a
        assert unwrapped.denominator == 1
        assert unwrapped % 2**j == k
        assert hi == lo + (b - a) / 2**j
        assert lo >= target[0] and hi <= target[1]
        assert brute_leftmost(table, j, *target) == unwrapped
        width = hi - lo
        target = (lo + width / 4, hi - width / 4)


# ------------------------------------------------------------ subsequence

def test_subsequence_harmonic_matches_oracle():
    env = envelope_from_rate(PowerLogRate(0.0, a=-1.0), 4096)
    got = divergent_subsequence(env)
    assert got == greedy_blocks_oracle(env.values, 4096)
    # first block is the single term 1/1, second walks 3, 6, ..., 33
    assert got[:13] == [1, 3, 6, 9, 12, 15, 18, 21, 24, 27, 30, 33, 36]


def test_subsequence_constant_envelope():
    env = envelope_from_rate(PowerLogRate(0.0), 64)
    got = divergent_subsequence(env)
    # unit mass per term: one-element blocks, gap growing each time
    assert got == [1, 3, 6, 10, 15, 21, 28, 36, 45, 55]
    gaps = np.diff(got)
    assert np.all(np.diff(gaps) >= 0) and gaps[-1] > gaps[0]


def test_subsequence_selected_sum_grows():
    short = envelope_from_rate(PowerLogRate(0.0, a=-1.0), 256)
    long = envelope_from_rate(PowerLogRate(0.0, a=-1.0), 8192)
    s_short = sum(short.values[j] for j in divergent_subsequence(short))
    s_long = sum(long.values[j] for j in divergent_subsequence(long))
    # harmonic blocks stretch exponentially, so growth per horizon
    # doubling is well under one unit but never stalls
    assert s_long > s_short + 0.5


def test_subsequence_preconditions():
    with pytest.raises(InvalidPreconditionError):
        divergent_subsequence(envelope_from_rate(PowerLogRate(s=1.0), 64))
    with pytest.raises(InvalidPreconditionError):
        divergent_subsequence(scale_envelope(uniform_decay_field(0.5, 10)))


@given(st.sampled_from([-1.0, -0.9, -0.5, 0.0]),
       st.sampled_from([-1.0, 0.0, 0.5]),
       st.integers(min_value=128, max_value=1024))
@settings(max_examples=40, deadline=None)
def test_subsequence_gap_properties(a, b, horizon):
    rate = PowerLogRate(0.0, a=a, b=b)
    env = envelope_from_rate(rate, horizon)
    if check_criterion(env, "l1").verdict != "fails":
        return
    got = divergent_subsequence(env)
    gaps = np.diff(got)
    assert np.all(np.diff(gaps) >= 0)
    assert gaps[-1] >= 3  # three blocks fit in every horizon above


# -------------------------------------------------------------- placement

def test_nested_placement_haar(haar_table):
    p = nested_placement(haar_table, [2, 4, 6, 8])
    assert p.positions[0] == 1
    assert p.intervals[0] == (Fraction(1, 4), Fraction(3, 8))
    assert p.positions[1] == 5
    assert_nesting(haar_table, p)
    lo, hi = p.intervals[-1]
    assert p.point() == float((lo + hi) / 2)


def test_nested_placement_db10(db10_table):
    root = next(j for j in range(2, 32)
                if brute_leftmost(db10_table, j, Fraction(1, 8), Fraction(3, 8)) is not None)
    # the level-6 positivity window makes translates step 2^-j across a
    # width-2^-(6+j) target, so nesting needs gaps past the window level
    p = nested_placement(db10_table, [root, root + 8, root + 16, root + 24])
    assert_nesting(db10_table, p)
    with pytest.raises(PlacementInfeasibleError):
        nested_placement(db10_table, [root, root + 2])


def test_nested_placement_gap_too_small(haar_table):
    with pytest.raises(PlacementInfeasibleError) as err:
        nested_placement(haar_table, [2, 3])
    assert err.value.n == 2
    assert "scale 3" in str(err.value)


def test_nested_placement_single_scale(haar_table):
    p = nested_placement(haar_table, [2])
    lo, hi = p.intervals[0]
    assert Fraction(1, 8) <= lo and hi <= Fraction(3, 8)


def test_nested_placement_validation(haar_table):
    for bad in ([], [4, 2], [-1, 3], [2.5, 4]):
        with pytest.raises(InvalidParameterError):
            nested_placement(haar_table, bad)


def test_thin_to_feasible(haar_table):
    assert thin_to_feasible(haar_table, [2, 3, 4, 6]) == [2, 4, 6]
    assert thin_to_feasible(haar_table, [2, 3]) == [2]
    kept = thin_to_feasible(haar_table, list(range(2, 20)))
    assert_nesting(haar_table, nested_placement(haar_table, kept))


# ------------------------------------------------------------ spike chain

def test_unbounded_series_field(haar_table):
    env = envelope_from_rate(PowerLogRate(0.0, a=-1.0), 8)
    p = nested_placement(haar_table, [2, 4, 6, 8])
    f = unbounded_series_field(env, p)
    assert np.array_equal(scale_envelope(f).values, env.values)
    for j, k in zip(p.scales, p.positions):
        assert f.levels[j][k] == env.values[j]
    # off scales park at the translate covering 3/4
    assert f.levels[5][24] == env.values[5]
    assert np.count_nonzero(f.levels[5]) == 1
    assert f.levels[3][6] == env.values[3]


def test_unbounded_series_zero_envelope(haar_table):
    env = scale_envelope(zero_field(8))
    f = unbounded_series_field(env, nested_placement(haar_table, [2, 4, 6]))
    assert all(np.all(lv == 0.0) for lv in f.levels)


def test_unbounded_series_scale_overflow(haar_table):
    env = envelope_from_rate(PowerLogRate(0.0, a=-1.0), 5)
    p = nested_placement(haar_table, [2, 4, 6])
    with pytest.raises(InvalidParameterError):
        unbounded_series_field(env, p)


def test_dense_unbounded_mass(haar_table):
    env = envelope_from_rate(PowerLogRate(0.0, a=-1.0), 8)
    p = nested_placement(haar_table, [2, 4, 6, 8])
    g = dense_unbounded_field(env, p)
    assert np.all(g.levels[2] == 0.0)  # nothing re-anchors the first scale
    for i in range(1, 4):
        j = p.scales[i]
        assert np.sum(g.levels[j]) == pytest.approx(env.values[j] * 2 ** (i - 1))
    again = dense_unbounded_field(env, p)
    assert all(np.array_equal(x, y) for x, y in zip(g.levels, again.levels))


# ------------------------------------------------------- divergence scales

def test_divergence_scale_field_heavy():
    f = divergence_scale_field(heavy_tail(1.0), 8)
    expected = {0: 1.0, 3: 0.25, 5: 1 / 9, 6: 1 / 16, 7: 1 / 25, 8: 1 / 36}
    for j in range(9):
        lv = f.levels[j]
        if j in expected:
            assert np.all(lv == expected[j])
        else:
            assert np.all(lv == 0.0)


def test_divergence_scale_field_partial_sums():
    f = divergence_scale_field(heavy_tail(1.0), 22)
    total = math.fsum(float(np.max(lv)) for lv in f.levels)
    n = len(divergence_scales(heavy_tail(1.0), 22))
    assert n == 20
    assert total == pytest.approx(math.fsum(1 / m**2 for m in range(1, 21)))
    assert abs(total - math.pi**2 / 6) < 1 / 20  # p-series tail bound


def test_divergence_scale_field_gaussian():
    f = divergence_scale_field(gaussian(), 10)
    assert np.all(f.levels[2] == 1.0)
    assert sum(np.count_nonzero(lv) for lv in f.levels) == 4
    assert divergence_scales(gaussian(), 50)[:2] == [(1, 2), (2, 50)]


def test_divergence_scale_field_bounded_law():
    with pytest.raises(NoDivergenceSequenceError):
        divergence_scale_field(rademacher(), 10)


def test_coefficient_exceedances_heavy():
    law = heavy_tail(1.0)
    for seed in range(20):
        events = coefficient_exceedances(law, 8, seed)
        # |draw| = u^{-1} > 1 almost surely, so n = 1 always logs
        assert events and events[0] == {"n": 1, "j": 0, "count": 1, "first_k": 0}
    full = coefficient_exceedances(law, 8, 7, stop_after=None)
    ns = [e["n"] for e in full]
    assert ns[0] == 1 and ns == sorted(set(ns))
    # recount one logged scale directly from the same stream
    n, j = full[-1]["n"], full[-1]["j"]
    chi = draw_array(law, 7, "coef", j, np.arange(2**j))
    assert full[-1]["count"] == int(np.sum(np.abs(chi) >= n**3))


def test_coefficient_exceedances_errors():
    with pytest.raises(NoDivergenceSequenceError):
        coefficient_exceedances(rademacher(), 8, 0)


# ----------------------------------------------------------- block witness

def test_block_witness_zero_field():
    rec = block_witness_process(zero_field(10), heavy_tail(1.0), seed=5)
    assert rec["law"] == "heavy_tail:1"
    for row in rec["per_scale"]:
        # |±1/n^2 + 0| meets the threshold exactly: every block witnesses
        assert row["witness_blocks"] == row["blocks"]
        assert row["blocks"] == 2 ** row["j"] // (2 * row["j"])
        assert row["product_exceedances"] >= row["chi_exceedances"]
    assert rec["scales_with_product_exceedance"] == len(rec["exceedance_ns"])


def test_block_witness_exact_cancellation():
    law = heavy_tail(1.0)
    f = zero_field(12)
    seed = 11
    for n, j in divergence_scales(law, 12, "strengthened"):
        signs = draw_array(rademacher(), seed, WITNESS_SIGN_STREAM, j, np.arange(2**j))
        f.levels[j][:] = -signs / float(n) ** 2
    rec = block_witness_process(f, law, seed)
    assert all(row["witness_blocks"] == 0 for row in rec["per_scale"])
    assert rec["scales_with_product_exceedance"] == 0


def test_block_witness_independent_adversary():
    law = heavy_tail(1.0)
    f = zero_field(12)
    for n, j in divergence_scales(law, 12, "strengthened"):
        signs = draw_array(rademacher(), 999, WITNESS_SIGN_STREAM, j, np.arange(2**j))
        f.levels[j][:] = -signs / float(n) ** 2
    rec = block_witness_process(f, law, seed=11)
    # per-k miss probability 1/2, per-block 2^{-2j}: scales with >= 64
    # blocks should be witness-saturated
    for row in rec["per_scale"]:
        if row["blocks"] >= 64:
            assert row["witness_blocks"] >= 0.95 * row["blocks"]


def test_block_witness_deterministic():
    f = uniform_decay_field(0.5, 10)
    a = block_witness_process(f, heavy_tail(1.0), seed=3)
    b = block_witness_process(f, heavy_tail(1.0), seed=3)
    assert a == b
    # at n = 1 any witness block yields a product |c| * |chi| >= 1
    assert a["scales_with_product_exceedance"] >= 1


def test_block_witness_bounded_law():
    with pytest.raises(NoDivergenceSequenceError):
        block_witness_process(zero_field(8), bounded_law := rademacher(), 0)
    del bounded_law


# ------------------------------------------------------------ signed tree

def tree_windows(table, field, kept):
    a, b = window_fractions(table)
    out = []
    for j in kept:
        ks = np.flatnonzero(field.levels[j])
        out.append([((k + a) / 2**j, (k + b) / 2**j) for k in ks])
    return out


def test_two_sign_tree_haar(haar_table):
    env = envelope_from_rate(PowerLogRate(0.0), 16)
    f = two_sign_tree_field(env, haar_table)
    counts = {j: int(np.count_nonzero(f.levels[j])) for j in range(17)
              if np.any(f.levels[j])}
    assert counts == {3: 1, 6: 2, 10: 4, 15: 8}
    for j in counts:
        assert np.max(f.levels[j]) == env.values[j]

    # interval oracle: each child window inside half of a parent's
    # positive or negative window, and one child per signed half
    kept = sorted(counts)
    neg = haar_table.negativity_interval
    neg_lo = Fraction(neg.index, 2**neg.level)
    neg_hi = Fraction(neg.index + 1, 2**neg.level)
    levels = tree_windows(haar_table, f, kept)
    root = levels[0][0]
    assert Fraction(1, 8) <= root[0] and root[1] <= Fraction(3, 8)
    for parent_j, parents, children in zip(kept, levels, levels[1:]):
        taken = set()
        for lo, hi in children:
            hit = None
            for idx, (plo, phi) in enumerate(parents):
                k = plo * 2**parent_j - window_fractions(haar_table)[0]
                for sign, (wlo, whi) in (("+", (plo, phi)),
                                         ("-", ((k + neg_lo) / 2**parent_j,
                                                (k + neg_hi) / 2**parent_j))):
                    width = whi - wlo
                    if wlo + width / 4 <= lo and hi <= whi - width / 4:
                        hit = (idx, sign)
            assert hit is not None
            assert hit not in taken
            taken.add(hit)
        assert len(taken) == 2 * len(parents)


def test_two_sign_tree_db10(db10_table):
    env = envelope_from_rate(PowerLogRate(0.0), 24)
    f = two_sign_tree_field(env, db10_table)
    counts = [int(np.count_nonzero(lv)) for lv in f.levels if np.any(lv)]
    assert counts[0] == 1
    assert all(b == 2 * a for a, b in zip(counts, counts[1:]))


def test_two_sign_tree_preconditions(haar_table):
    with pytest.raises(InvalidPreconditionError):
        two_sign_tree_field(envelope_from_rate(PowerLogRate(s=1.0), 16), haar_table)


# ----------------------------------------------------------- sparse scales

def test_geometric_scale_ratio_value():
    assert geometric_scale_ratio() == 5
    assert math.floor(2.0 / (0.6931471805599453 - 0.25)) == 4


def test_sparse_rate_verdicts():
    rate = sparse_loglog_rate()
    assert rate.supported_scales(625) == [5, 25, 125, 625]
    env = envelope_from_rate(rate, 625)
    assert check_criterion(env, "loglog").verdict == "holds"
    assert check_criterion(env, "sqrtj").verdict == "fails"
    assert check_criterion(env, "l1").verdict == "holds"


def test_support_spacing(haar_table, db10_table):
    assert support_spacing(haar_table) == 1
    assert support_spacing(db10_table) == 19
    assert support_spacing(cascade_evaluate(build_filter("daubechies", 2), 6)) == 3


def test_sparse_loglog_field_haar(haar_table):
    f = sparse_loglog_field(haar_table, 1)
    w = 5**-0.5 / (math.log(5) * math.log(math.log(5)))
    assert f.j_max == 5
    assert f.levels[5][0] == pytest.approx(w, rel=1e-15)
    assert np.all(f.levels[5] == f.levels[5][0])
    assert all(np.all(f.levels[j] == 0.0) for j in range(5))


def test_sparse_loglog_field_db10(db10_table):
    f = sparse_loglog_field(db10_table, 1)
    assert np.flatnonzero(f.levels[5]).tolist() == [0, 19]
    assert scale_envelope(f).values[5] == sparse_loglog_rate().value(5)


def test_sparse_loglog_field_two_scales(haar_table):
    f = sparse_loglog_field(haar_table, 2)
    rate = sparse_loglog_rate()
    env = scale_envelope(f)
    assert env.values[5] == rate.value(5)
    assert env.values[25] == rate.value(25)
    assert np.count_nonzero(env.values) == 2


def test_sparse_loglog_field_errors(haar_table):
    with pytest.raises(InvalidParameterError):
        sparse_loglog_field(haar_table, 3)
    with pytest.raises(InvalidParameterError):
        sparse_loglog_field(haar_table, 0)
    with pytest.raises(InvalidParameterError):
        sparse_loglog_field(haar_table, 1.5)
