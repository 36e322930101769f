"""Analysis quadrature, sup profiles, hmin and modulus fits.

Oracles:
  * Round trips run against fields whose coefficients are known exactly;
    for Haar both synthesis and the Riemann analysis are exact at grid
    resolution (step functions constant on grid cells), so recovery to
    1e-8 is a hard floor, not a tuned tolerance.
  * brute_coefficient recomputes one analysis coefficient as a plain
    Riemann sum through eval_periodized, independent of the kernel-slice
    accumulation in the module.
  * Nested-interval averages for the divergence witness are computed as
    exact grid means over dyadic slices.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from rwslab.constructions import (
    divergence_scale_field,
    nested_placement,
    unbounded_series_field,
)
from rwslab.errors import InsufficientDataError, InvalidParameterError
from rwslab.estimators import (
    ModulusFit,
    PowerLogModulus,
    SupGrowthProfile,
    analysis_field,
    empirical_scale_envelope,
    export_modulus_csv,
    export_profile_csv,
    hmin_estimate,
    modulus_ratio,
    regular_modulus_check,
    sup_growth,
)
from rwslab.fields import (
    CoefficientField,
    PowerLogRate,
    ScaleEnvelope,
    envelope_from_rate,
    scale_envelope,
    uniform_decay_field,
    zero_field,
)
from rwslab.laws import gaussian, heavy_tail, rademacher
from rwslab.synthesis import SamplePath, randomized_field, synthesize
from rwslab.wavelets import eval_periodized


def brute_coefficient(path_, table, j, k):
    """2^j * Riemann sum of path * psi_{j,k}, one lookup per grid point."""
    xs = np.arange(path_.values.size) * 2.0**-path_.resolution
    weights = eval_periodized(table, j, k, xs)
    return float(2.0**j * np.sum(path_.values * weights) * 2.0**-path_.resolution)


def grid_average(path_, lo: float, hi: float) -> float:
    """Mean of the path over [lo, hi); endpoints must sit on the grid."""
    size = path_.values.size
    a, b = lo * size, hi * size
    assert a == int(a) and b == int(b)
    return float(np.mean(path_.values[int(a) : int(b)]))


def random_field(j_max: int, rng) -> CoefficientField:
    levels = [rng.standard_normal(2**j) for j in range(j_max + 1)]
    return CoefficientField(j_max, float(rng.standard_normal()), levels)


# ------------------------------------------------------------- round trips

def test_round_trip_haar_exact(haar_table):
    f = random_field(8, np.random.default_rng(3))
    path = synthesize(f, haar_table, 8, 12)
    recovered = analysis_field(path, haar_table, 8)
    assert abs(recovered.coarse - f.coarse) <= 1e-8
    for j in range(9):
        assert float(np.max(np.abs(recovered.levels[j] - f.levels[j]))) <= 1e-8


def test_round_trip_db10_envelope(db10_table):
    f = uniform_decay_field(0.5, 8)
    path = synthesize(f, db10_table, 8, 12)
    env = empirical_scale_envelope(path, db10_table, 8)
    for j in range(7):  # j <= J - 2
        assert env.values[j] == pytest.approx(2.0 ** (-0.5 * j), rel=0.02)


def test_round_trip_db10_per_level(db10_table):
    f = random_field(6, np.random.default_rng(4))
    path = synthesize(f, db10_table, 6, 12)
    recovered = analysis_field(path, db10_table, 6)
    for j in range(7):
        err = float(np.max(np.abs(recovered.levels[j] - f.levels[j])))
        assert err <= 0.02 * float(np.max(np.abs(f.levels[j])))


def test_analysis_matches_brute_force(db10_table):
    f = random_field(4, np.random.default_rng(5))
    path = synthesize(f, db10_table, 4, 10)
    recovered = analysis_field(path, db10_table, 4)
    for j, k in ((0, 0), (2, 3), (4, 11)):
        assert recovered.levels[j][k] == pytest.approx(
            brute_coefficient(path, db10_table, j, k), abs=1e-12
        )


def test_constant_path_envelope(db10_table):
    path = SamplePath(
        10, np.full(1024, 3.7),
        {"field": "const", "law": "deterministic", "seed": None, "truncation": 0},
    )
    env = empirical_scale_envelope(path, db10_table, 6)
    assert float(np.max(env.values)) <= 1e-8


def test_single_coefficient_orthogonality(db10_table):
    f = zero_field(6)
    f.levels[3][2] = 5.0
    path = synthesize(f, db10_table, 6, 12)
    env = empirical_scale_envelope(path, db10_table, 6)
    assert env.values[3] == pytest.approx(5.0, abs=1e-4)
    others = [env.values[j] for j in range(7) if j != 3]
    assert max(others) <= 1e-4


def test_analysis_resolution_check(db10_table):
    path = synthesize(zero_field(4), db10_table, 4, 10)
    with pytest.raises(InvalidParameterError):
        empirical_scale_envelope(path, db10_table, 7)  # fewer than 4 spare levels


# -------------------------------------------------------------- sup growth

def test_sup_growth_matches_synthesize(haar_table):
    f = random_field(6, np.random.default_rng(6))
    profile = sup_growth(f, haar_table, None, None, [2, 4, 6], 3)
    assert profile.truncations == (2, 4, 6)
    for i, j_trunc in enumerate(profile.truncations):
        path = synthesize(f, haar_table, j_trunc, haar_table.r_psi)
        assert profile.global_sups[i] == float(np.max(np.abs(path.values)))
    assert profile.local_sups.shape == (3, 8)
    assert np.all(profile.local_sups <= profile.global_sups[:, None])
    assert np.array_equal(profile.local_sups.max(axis=1), profile.global_sups)


def test_sup_growth_randomized_determinism(haar_table):
    f = uniform_decay_field(0.7, 6)
    a = sup_growth(f, haar_table, gaussian(), 11, [3, 6], 2)
    b = sup_growth(f, haar_table, gaussian(), 11, [3, 6], 2)
    assert np.array_equal(a.global_sups, b.global_sups)
    assert np.array_equal(a.local_sups, b.local_sups)
    assert a.law == "gaussian" and a.seed == 11


def test_sup_growth_nested_interval_witness(haar_table):
    # Envelope 1/j concentrated on nested positivity windows: the average
    # over the l-th window after truncating at j_l equals the full
    # progression sum (the wavelet is exactly 1 there), so the local sup at
    # any depth covering that window dominates 0.8 * sum.
    env = envelope_from_rate(PowerLogRate(0.0, a=-1.0), 8)
    scales = [2, 4, 6]
    placement = nested_placement(haar_table, scales)
    f = unbounded_series_field(env, placement)
    profile = sup_growth(f, haar_table, None, None, scales, 3)
    point = placement.point()
    for l, j_trunc in enumerate(scales):
        expected = sum(1.0 / j for j in scales[: l + 1])
        path = synthesize(f, haar_table, j_trunc, haar_table.r_psi)
        lo, hi = placement.intervals[l]
        assert grid_average(path, float(lo), float(hi)) == pytest.approx(expected, abs=1e-9)
        cell = int(point * 8)
        assert profile.local_sups[l][cell] >= 0.8 * expected


def test_sup_growth_l1_stabilization(haar_table):
    rng = np.random.default_rng(8)
    f = zero_field(8)
    for j in range(9):
        f.levels[j][:] = 2.0**-j * rng.uniform(-1.0, 1.0, 2**j)
    profile = sup_growth(f, haar_table, rademacher(), 3, [6, 8], 0)
    tail = sum(2.0**-j for j in (7, 8))
    bound = haar_table.support_length * haar_table.sup_norm * tail
    assert abs(profile.global_sups[1] - profile.global_sups[0]) <= bound


def test_sup_growth_exceedance_witness(haar_table):
    # Gaussian draws on the heavy-tail divergence grid: only scale j_1 = 2
    # is both feasible and active, and there 2^2 draws of a unit threshold
    # fire often.  When the logged event exists the truncated sup is the
    # max |draw| itself (single active scale, disjoint translates).
    from rwslab.constructions import coefficient_exceedances

    f = divergence_scale_field(gaussian(), 8)
    hits = 0
    for seed in range(25):
        events = coefficient_exceedances(gaussian(), 8, seed)
        profile = sup_growth(f, haar_table, gaussian(), seed, [2], 0)
        if events:
            assert events[0]["n"] == 1 and events[0]["j"] == 2
            assert profile.global_sups[0] >= 1.0
            hits += 1
    assert hits >= 15  # per-seed chance is 1 - (1 - 0.3173)^4 ~ 0.78


def test_sup_growth_validation(haar_table):
    f = zero_field(4)
    with pytest.raises(InvalidParameterError):
        sup_growth(f, haar_table, None, None, [2, 5], 2)  # beyond j_max
    with pytest.raises(InvalidParameterError):
        sup_growth(f, haar_table, None, None, [], 2)
    with pytest.raises(InvalidParameterError):
        sup_growth(f, haar_table, None, None, [2, 4], -1)
    with pytest.raises(InvalidParameterError):
        sup_growth(f, haar_table, gaussian(), None, [2, 4], 2)  # law without seed


# -------------------------------------------------------------------- hmin

def test_hmin_exact_power():
    env = envelope_from_rate(PowerLogRate(0.3), 16)
    assert hmin_estimate(env, 4, 16) == pytest.approx(0.3, abs=1e-10)


def test_hmin_gaussian_randomized():
    # The max-of-gaussians factor inflates the envelope by ~ sqrt(j),
    # biasing the fitted slope by roughly 0.5 / (j ln 2) per scale; the
    # window must sit deep enough and the estimate be averaged over seeds
    # for that to stay inside the tolerance.
    f = uniform_decay_field(0.4, 22)
    estimates = []
    for seed in range(10):
        env = scale_envelope(randomized_field(f, gaussian(), seed))
        estimates.append(hmin_estimate(env, 14, 22))
    assert float(np.mean(estimates)) == pytest.approx(0.4, abs=0.05)


def test_hmin_rademacher_exact_invariance():
    f = uniform_decay_field(0.3, 12)
    det = hmin_estimate(scale_envelope(f), 4, 12)
    twisted = hmin_estimate(scale_envelope(randomized_field(f, rademacher(), 9)), 4, 12)
    assert twisted == det


def test_hmin_scale_deletion_refit():
    env = envelope_from_rate(PowerLogRate(0.3), 16)
    values = env.values.copy()
    values[7] = 0.0
    values[11] = 0.0
    refit = hmin_estimate(ScaleEnvelope(values=values), 4, 16)
    assert refit == pytest.approx(0.3, abs=1e-10)


def test_hmin_validation():
    env = envelope_from_rate(PowerLogRate(0.5), 12)
    with pytest.raises(InsufficientDataError):
        hmin_estimate(env, 5, 8)  # span below 4
    with pytest.raises(InsufficientDataError):
        hmin_estimate(ScaleEnvelope(values=np.zeros(13)), 4, 12)


# ----------------------------------------------------------- modulus ratio

def tent_path(resolution: int) -> SamplePath:
    xs = np.arange(2**resolution) * 2.0**-resolution
    return SamplePath(
        resolution, 1.0 - np.abs(2.0 * xs - 1.0),
        {"field": "tent", "law": "deterministic", "seed": None, "truncation": 0},
    )


def test_modulus_ratio_tent_constant():
    fit = modulus_ratio(tent_path(10), PowerLogModulus(alpha=1.0), 3, 7)
    assert fit.lags_m == (3, 4, 5, 6, 7)
    assert np.array_equal(fit.lags, 2.0 ** -np.arange(3.0, 8.0))
    assert fit.ratios == pytest.approx(np.full(5, 2.0), rel=1e-12)


def test_modulus_ratio_shift_invariance(db10_table):
    f = uniform_decay_field(0.5, 7)
    path = synthesize(randomized_field(f, gaussian(), 2), db10_table, 7, 12)
    rolled = SamplePath(12, np.roll(path.values, 517), path.provenance)
    theta = PowerLogModulus(alpha=0.5, gamma=2.0)
    a = modulus_ratio(path, theta, 4, 7)
    b = modulus_ratio(rolled, theta, 4, 7)
    assert np.array_equal(a.sup_increments, b.sup_increments)


def test_modulus_ratio_spread_and_log_detection(db10_table):
    # Gaussian randomization of the square-root-decay field: with the
    # matching sqrt-log factor the lag ratios stay within a decade; without
    # it they drift upward with m.
    f = uniform_decay_field(0.5, 8)
    spreads, rising = [], 0
    for seed in range(5):
        path = synthesize(randomized_field(f, gaussian(), seed), db10_table, 8, 12)
        with_log = modulus_ratio(path, PowerLogModulus(alpha=0.5, gamma=2.0), 4, 8)
        spreads.append(float(np.max(with_log.ratios) / np.min(with_log.ratios)))
        no_log = modulus_ratio(path, PowerLogModulus(alpha=0.5), 4, 8)
        if no_log.ratios[-1] > no_log.ratios[0]:
            rising += 1
    assert float(np.median(spreads)) <= 10.0
    assert rising >= 4


def test_modulus_ratio_validation(db10_table):
    path = synthesize(zero_field(4, coarse=1.0), db10_table, 4, 10)
    theta = PowerLogModulus(alpha=0.5, gamma=2.0)
    with pytest.raises(InvalidParameterError):
        modulus_ratio(path, theta, 1, 5)  # lag too coarse
    with pytest.raises(InvalidParameterError):
        modulus_ratio(path, theta, 5, 5)
    with pytest.raises(InvalidParameterError):
        modulus_ratio(path, theta, 4, 10)  # beyond R - 1
    with pytest.raises(InvalidParameterError):
        modulus_ratio(path, "h^0.5", 4, 8)
    with pytest.raises(InvalidParameterError):
        PowerLogModulus(alpha=0.5, gamma=0.0)


def test_constant_path_zero_ratios():
    path = SamplePath(
        8, np.full(256, 4.0),
        {"field": "const", "law": "deterministic", "seed": None, "truncation": 0},
    )
    fit = modulus_ratio(path, PowerLogModulus(alpha=0.5, gamma=2.0), 3, 6)
    assert np.all(fit.ratios == 0.0)
    assert np.all(np.isfinite(fit.ratios))


# --------------------------------------------------------- regular modulus

def test_regular_modulus_powers():
    assert regular_modulus_check(PowerLogModulus(alpha=0.5), 1, 8) is True
    assert regular_modulus_check(PowerLogModulus(alpha=0.5, gamma=2.0), 1, 8) is True
    assert regular_modulus_check(PowerLogModulus(alpha=0.0), 3, 8) is False
    assert regular_modulus_check(PowerLogModulus(alpha=1.0), 1, 8) is False
    assert regular_modulus_check(PowerLogModulus(alpha=2.5), 1, 8) is False
    assert regular_modulus_check(PowerLogModulus(alpha=2.5), 2, 8) is True


def test_regular_modulus_probe_scale_inert():
    theta = PowerLogModulus(alpha=0.5, gamma=2.0)
    assert all(regular_modulus_check(theta, 1, j) for j in (1, 7, 30))


def test_regular_modulus_validation():
    with pytest.raises(InvalidParameterError):
        regular_modulus_check("h^2", 1, 8)
    with pytest.raises(InvalidParameterError):
        regular_modulus_check(PowerLogModulus(alpha=0.5), -1, 8)
    with pytest.raises(InvalidParameterError):
        regular_modulus_check(PowerLogModulus(alpha=0.5), 1, 0)


# ------------------------------------------------------------------ export

def test_export_profile_csv(tmp_path, haar_table):
    f = uniform_decay_field(1.0, 5)
    profile = sup_growth(f, haar_table, None, None, [3, 5], 1)
    dest = tmp_path / "profile.csv"
    export_profile_csv(profile, dest)
    lines = dest.read_text().splitlines()
    assert lines[0] == "J,global_sup,interval_id,local_sup"
    assert len(lines) == 1 + 2 * 2
    assert lines[1].startswith("3,")


def test_export_modulus_csv(tmp_path):
    fit = modulus_ratio(tent_path(9), PowerLogModulus(alpha=1.0), 3, 5)
    dest = tmp_path / "fit.csv"
    export_modulus_csv(fit, dest, comment="tent")
    lines = dest.read_text().splitlines()
    assert lines[0] == "# tent"
    assert lines[1] == "m,h,sup_increment,theta,ratio"
    assert len(lines) == 2 + 3
