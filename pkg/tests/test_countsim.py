import numpy as np
import numpy.testing as npt
import pytest

from ghostpol.countsim import (
    CountModel,
    RunSet,
    correct_counts,
    runset_to_csv,
    simulate_counts,
    simulate_runs,
)
from ghostpol.ghost import ResponseCurve

# Hand-worked correction example, frozen before the implementation ran.
# Model: accidentals 20000^2 * 3e-9 * 1 = 1.2 per cell, efficiency
# product 0.8 * 0.5 = 0.4.  Counts (2 runs, 1 theta, 2 projectors):
#   run 0: (10 - 1.2)/0.4 = 22,  (2 - 1.2)/0.4 = 2     total 24
#   run 1: (6 - 1.2)/0.4 = 12,   (1 - 1.2)/0.4 -> clip 0  total 12
# Mean total 18, so run 0 scales by 0.75 and run 1 by 1.5.
CORRECTION_ORACLE = np.array([[[16.5, 1.5]], [[18.0, 0.0]]])


def flat_curve(p=0.25, n_theta=4, n_proj=1):
    thetas = np.arange(n_theta, dtype=float)
    return ResponseCurve("LP", thetas, np.full((n_theta, n_proj), p))


def test_model_validation():
    CountModel(pair_rate=0.0, integration_time=1.0)
    with pytest.raises(ValueError):
        CountModel(pair_rate=-1.0, integration_time=1.0)
    with pytest.raises(ValueError):
        CountModel(pair_rate=1.0, integration_time=0.0)
    with pytest.raises(ValueError):
        CountModel(pair_rate=1.0, integration_time=1.0, eff_signal=1.2)
    with pytest.raises(ValueError):
        CountModel(pair_rate=1.0, integration_time=1.0, coincidence_window=-1.0)
    with pytest.raises(ValueError):
        CountModel(pair_rate=1.0, integration_time=1.0, drift_amplitude=1.0)


def test_accidental_mean_value():
    model = CountModel(
        pair_rate=5000.0,
        integration_time=1.0,
        coincidence_window=3e-9,
        singles_background=20000.0,
    )
    assert abs(model.accidental_mean() - 1.2) < 1e-12


def test_signal_mean_composition():
    model = CountModel(
        pair_rate=2000.0, integration_time=2.0, eff_signal=0.5, eff_idler=0.25
    )
    assert abs(model.signal_mean(0.1) - 2000.0 * 2.0 * 0.5 * 0.25 * 0.1) < 1e-12
    assert abs(model.signal_mean(0.1, drift_factor=1.1) - 55.0) < 1e-12


def test_simulate_counts_is_deterministic():
    model = CountModel(pair_rate=1e4, integration_time=1.0)
    a = simulate_counts(0.3, model, seed=11, spawn_key=(0, 1, 2, 3))
    b = simulate_counts(0.3, model, seed=11, spawn_key=(0, 1, 2, 3))
    assert a == b
    c = simulate_counts(0.3, model, seed=11, spawn_key=(0, 1, 2, 4))
    d = simulate_counts(0.3, model, seed=12, spawn_key=(0, 1, 2, 3))
    assert isinstance(a, int)
    # Distinct streams are overwhelmingly unlikely to collide at this mean.
    assert (a != c) or (a != d)


def test_simulate_counts_rejects_bad_probability():
    model = CountModel(pair_rate=1e4, integration_time=1.0)
    with pytest.raises(ValueError):
        simulate_counts(1.5, model, seed=0)
    with pytest.raises(ValueError):
        simulate_counts(-0.2, model, seed=0)


def test_zero_probability_zero_background_gives_zero():
    model = CountModel(pair_rate=1e6, integration_time=1.0)
    for key in range(20):
        assert simulate_counts(0.0, model, seed=3, spawn_key=(key,)) == 0


def test_poisson_mean_and_variance():
    model = CountModel(pair_rate=4000.0, integration_time=1.0,
                       coincidence_window=3e-9, singles_background=20000.0)
    runs = simulate_runs(flat_curve(p=0.25, n_theta=4), model, n_runs=500, seed=5)
    mean = model.signal_mean(0.25) + model.accidental_mean()
    draws = runs.counts.ravel()
    n = draws.size
    assert abs(draws.mean() - mean) < 4.0 * np.sqrt(mean / n)
    assert 0.85 < draws.var() / mean < 1.15


def test_runs_are_reproducible_and_schedule_independent():
    model = CountModel(pair_rate=3000.0, integration_time=1.0,
                       drift_amplitude=0.05)
    curve = flat_curve(p=0.4, n_theta=5, n_proj=2)
    a = simulate_runs(curve, model, n_runs=3, seed=21)
    b = simulate_runs(curve, model, n_runs=3, seed=21)
    npt.assert_array_equal(a.counts, b.counts)
    npt.assert_array_equal(a.singles, b.singles)
    # Extending the schedule must not disturb earlier runs.
    c = simulate_runs(curve, model, n_runs=5, seed=21)
    npt.assert_array_equal(c.counts[:3], a.counts)
    d = simulate_runs(curve, model, n_runs=3, seed=21, family_tag=1)
    assert np.any(d.counts != a.counts)


def test_drift_scales_whole_run():
    # With large counts the per-run totals separate cleanly when drift
    # is on and cluster when it is off.
    curve = flat_curve(p=0.5, n_theta=6)
    quiet = CountModel(pair_rate=2e6, integration_time=1.0)
    noisy = CountModel(pair_rate=2e6, integration_time=1.0, drift_amplitude=0.2)
    t_quiet = simulate_runs(curve, quiet, n_runs=12, seed=9).counts.sum(axis=(1, 2))
    t_noisy = simulate_runs(curve, noisy, n_runs=12, seed=9).counts.sum(axis=(1, 2))
    assert t_noisy.std() > 10.0 * t_quiet.std()


def test_correction_matches_hand_oracle():
    model = CountModel(
        pair_rate=1000.0,
        integration_time=1.0,
        eff_signal=0.8,
        eff_idler=0.5,
        coincidence_window=3e-9,
        singles_background=20000.0,
        drift_amplitude=0.1,
    )
    runs = RunSet(
        family="LP",
        thetas=np.array([0.0]),
        counts=np.array([[[10.0, 2.0]], [[6.0, 1.0]]]),
        singles=np.zeros((2, 2)),
        seed=0,
    )
    npt.assert_allclose(correct_counts(runs, model), CORRECTION_ORACLE, atol=1e-12)


def test_correction_removes_drift():
    curve = flat_curve(p=0.5, n_theta=6)
    model = CountModel(pair_rate=2e6, integration_time=1.0, drift_amplitude=0.2)
    runs = simulate_runs(curve, model, n_runs=10, seed=2)
    corrected = correct_counts(runs, model)
    totals = corrected.sum(axis=(1, 2))
    npt.assert_allclose(totals, totals[0], rtol=1e-12)
    raw_spread = runs.counts.sum(axis=(1, 2)).std()
    assert totals.std() < 1e-6 * raw_spread


def test_correction_error_cases():
    runs = RunSet(
        family="LP",
        thetas=np.array([0.0]),
        counts=np.array([[[4.0]]]),
        singles=np.zeros((1, 2)),
        seed=0,
    )
    dead = CountModel(pair_rate=1.0, integration_time=1.0, eff_signal=0.0)
    with pytest.raises(ValueError):
        correct_counts(runs, dead)
    swamped = CountModel(
        pair_rate=1.0,
        integration_time=1.0,
        coincidence_window=1e-6,
        singles_background=1e5,
    )
    with pytest.raises(ValueError):
        correct_counts(runs, swamped)


def test_runset_validation():
    with pytest.raises(ValueError):
        RunSet("LP", np.array([0.0]), np.zeros((2, 1)), np.zeros((2, 2)), 0)
    with pytest.raises(ValueError):
        RunSet("LP", np.array([0.0]), np.zeros((2, 1, 1)), np.zeros((2, 2)), 0)
    ok = RunSet("LP", np.array([0.0]), np.ones((2, 1, 1)), np.zeros((2, 2)), 0)
    assert ok.n_runs == 2


def test_runset_csv_layout(tmp_path):
    curve = flat_curve(p=0.3, n_theta=3, n_proj=2)
    model = CountModel(pair_rate=5e4, integration_time=1.0)
    runs = simulate_runs(curve, model, n_runs=2, seed=1)
    corrected = correct_counts(runs, model)
    path = str(tmp_path / "runs.csv")
    runset_to_csv(runs, corrected, path)
    lines = open(path).read().strip().split("\n")
    assert lines[0] == "run,theta_deg,projector_index,raw,corrected"
    assert len(lines) == 1 + 2 * 3 * 2
    row = lines[1].split(",")
    assert row[0] == "0" and row[2] == "0"
    assert float(row[3]) == runs.counts[0, 0, 0]
