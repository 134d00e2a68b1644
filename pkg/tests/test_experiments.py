"""Targets, datasets, Welch tests, grids, and the trial harness."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from kasam_lab.experiments import (
    EXPERIMENTS,
    ExperimentSpec,
    Grid,
    function_grid,
    interference_grid,
    make_dataset,
    run_study,
    run_trial,
    summarize,
    target,
    trial_datasets,
    welch_test,
)
from kasam_lab.models import KasamModel, SamModel
from kasam_lab.training import mae


TINY = replace(
    EXPERIMENTS["A"], n_points=300, task1_epochs=2, task2_epochs=1
)


# ---------------------------------------------------------------------------
# Targets
# ---------------------------------------------------------------------------


def test_target_centre_values():
    centre = np.array([0.5, 0.5])
    for name in ["A", "B", "C"]:
        assert target(name, 1, centre) == pytest.approx(2.0, abs=1e-12)
        assert target(name, 2, centre) == 0.0


def test_target_hand_points():
    # Hand-derived spot values, recomputed here from scratch.
    assert target("A", 1, np.array([0.0, 0.0])) == pytest.approx(math.exp(-1.0), abs=1e-12)
    assert target("A", 1, np.array([0.5, 0.0])) == pytest.approx(1.0, abs=1e-12)
    assert target("B", 1, np.array([0.5, 0.7])) == pytest.approx(
        2.0 * math.exp(-4.0) + math.sin(2.0) ** 2, abs=1e-12
    )
    assert target("C", 1, np.array([0.0, 0.0])) == pytest.approx(
        1.0 + math.cos(10.0) ** 2, abs=1e-12
    )


def test_target_hole_is_open():
    # The zeroed square is open: its boundary keeps the task-one value.
    for name in ["A", "B", "C"]:
        edge = np.array([0.45, 0.5])
        assert target(name, 2, edge) == target(name, 1, edge)
        inside = np.array([0.450001, 0.5])
        assert target(name, 2, inside) == 0.0
        outside = np.array([0.2, 0.9])
        assert target(name, 2, outside) == target(name, 1, outside)


def test_target_validation():
    with pytest.raises(ValueError):
        target("D", 1, np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        target("A", 3, np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        target("A", 1, np.array([1.5, 0.5]))
    with pytest.raises(ValueError):
        target("A", 1, np.zeros((4, 3)))


def test_target_batch_matches_scalar():
    rng = np.random.default_rng(3)
    X = rng.uniform(0.0, 1.0, size=(100, 2))
    for name in ["A", "B", "C"]:
        batch = target(name, 2, X)
        for i in range(100):
            assert batch[i] == target(name, 2, X[i])


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


def test_make_dataset_shapes_and_domains():
    spec = replace(EXPERIMENTS["B"], n_points=500)
    rng = np.random.default_rng(7)
    d = make_dataset(spec, 1, "train", rng)
    assert d.inputs.shape == (500, 2) and len(d) == 500
    assert d.domain == ((0.0, 1.0), (0.0, 1.0))
    assert d.tag == "B/task1/train"

    d2 = make_dataset(spec, 2, "train", rng)
    assert d2.domain == ((0.45, 0.55), (0.45, 0.55))
    assert d2.inputs.min() >= 0.45 and d2.inputs.max() <= 0.55

    d2t = make_dataset(spec, 2, "test", rng)
    assert d2t.domain == ((0.0, 1.0), (0.0, 1.0))


def test_make_dataset_noiseless_matches_target():
    spec = replace(EXPERIMENTS["A"], n_points=200, noise_std=0.0)
    rng = np.random.default_rng(9)
    d = make_dataset(spec, 1, "test", rng)
    np.testing.assert_allclose(d.targets, target("A", 1, d.inputs), atol=1e-15)
    d2 = make_dataset(spec, 2, "train", rng)
    assert np.all(d2.targets == 0.0)


def test_make_dataset_noise_floor():
    # The mean absolute deviation of centred Gaussian noise is std * sqrt(2/pi).
    spec = EXPERIMENTS["A"]
    rng = np.random.default_rng(11)
    d = make_dataset(spec, 1, "test", rng)
    floor = mae(target("A", 1, d.inputs), d.targets)
    assert floor == pytest.approx(0.05 * math.sqrt(2.0 / math.pi), abs=0.002)


def test_make_dataset_determinism():
    spec = replace(EXPERIMENTS["C"], n_points=100)
    a = make_dataset(spec, 1, "train", np.random.default_rng(13))
    b = make_dataset(spec, 1, "train", np.random.default_rng(13))
    assert np.array_equal(a.inputs, b.inputs)
    assert np.array_equal(a.targets, b.targets)


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec("Z")
    with pytest.raises(ValueError):
        ExperimentSpec("A", n_points=0)
    with pytest.raises(ValueError):
        ExperimentSpec("A", noise_std=-0.1)


# ---------------------------------------------------------------------------
# Welch test
# ---------------------------------------------------------------------------


def _t_tail_quadrature(t: float, df: float) -> float:
    """Two-sided p by direct quadrature of the t density (test oracle)."""
    lo = abs(t)
    hi = lo + 60.0
    s = np.linspace(lo, hi, 200001)
    log_norm = (
        math.lgamma((df + 1.0) / 2.0)
        - math.lgamma(df / 2.0)
        - 0.5 * math.log(df * math.pi)
    )
    pdf = np.exp(log_norm - ((df + 1.0) / 2.0) * np.log1p(s * s / df))
    return float(2.0 * np.trapezoid(pdf, s))


def test_welch_statistic_hand_arithmetic():
    a = [1.0, 2.0, 3.0, 4.0, 5.0]
    b = [2.0, 4.0, 6.0, 8.0, 10.0]
    res = welch_test(a, b)
    # Plain-float recomputation of the statistic and degrees of freedom.
    ma, mb = 3.0, 6.0
    va = sum((x - ma) ** 2 for x in a) / 4.0
    vb = sum((x - mb) ** 2 for x in b) / 4.0
    se2 = va / 5.0 + vb / 5.0
    t = (ma - mb) / math.sqrt(se2)
    df = se2**2 / ((va / 5.0) ** 2 / 4.0 + (vb / 5.0) ** 2 / 4.0)
    assert res.t == pytest.approx(t, rel=1e-12)
    assert res.df == pytest.approx(df, rel=1e-12)


def test_welch_p_against_quadrature():
    rng = np.random.default_rng(17)
    for shift in [0.0, 0.3, 1.5]:
        a = rng.normal(0.0, 1.0, size=30)
        b = rng.normal(shift, 2.0, size=25)
        res = welch_test(a, b)
        assert res.p == pytest.approx(_t_tail_quadrature(res.t, res.df), abs=1e-6)


def test_welch_properties():
    rng = np.random.default_rng(19)
    a = rng.normal(size=20)
    b = rng.normal(size=20)
    fwd = welch_test(a, b)
    rev = welch_test(b, a)
    assert fwd.t == pytest.approx(-rev.t, rel=1e-12)
    assert fwd.p == pytest.approx(rev.p, rel=1e-9)
    assert 0.0 <= fwd.p <= 1.0

    same = welch_test(a, a)
    assert same.t == 0.0 and same.p == 1.0

    far = welch_test(a, b + 100.0)
    assert far.p < 1e-6


def test_welch_degenerate_and_errors():
    flat = [2.0, 2.0, 2.0]
    res = welch_test(flat, flat)
    assert res.p == 1.0 and res.t == 0.0
    res = welch_test(flat, [3.0, 3.0, 3.0])
    assert res.p == 0.0 and res.t == -math.inf
    with pytest.raises(ValueError):
        welch_test([1.0], [1.0, 2.0])


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(1, np.zeros((1, 1)))
    with pytest.raises(ValueError):
        Grid(4, np.zeros((4, 3)))
    with pytest.raises(ValueError):
        Grid(2, np.array([[0.0, np.inf], [0.0, 0.0]]))
    g = Grid(2, np.array([[0.0, 1.0], [2.0, 3.0]]))
    assert g.vmin == 0.0 and g.vmax == 3.0


def test_interference_grid_axis_convention():
    # Change only the first variable's splines: the difference depends on x1
    # alone, so grid rows are identical and columns vary.
    before = SamModel(2, (8,))
    after = SamModel(2, (8,))
    vec = np.zeros(after.n_params)
    vec[:8] = np.random.default_rng(23).normal(size=8)
    after.set_param_vector(vec)
    g = interference_grid(before, after, resolution=32)
    assert g.values.shape == (32, 32)
    assert np.all(g.values == g.values[0][None, :])
    assert g.values[0].std() > 0.0
    # And the columns follow |f(x1)| on the axis.
    xs = np.linspace(0.0, 1.0, 32)
    direct = np.abs(after.forward_batch(np.column_stack([xs, np.zeros(32)])))
    np.testing.assert_allclose(g.values[0], direct, atol=1e-12)


def test_interference_grid_identical_models_zero():
    m = SamModel(2, (8,))
    m.set_param_vector(np.random.default_rng(29).normal(size=m.n_params))
    g = interference_grid(m, m, resolution=16)
    assert np.all(g.values == 0.0)


def test_interference_grid_topology_mismatch():
    with pytest.raises(ValueError):
        interference_grid(SamModel(2, (8,)), SamModel(2, (16,)))
    with pytest.raises(ValueError):
        interference_grid(SamModel(2, (8,)), KasamModel(2, (8,)))


def test_function_grid_values():
    m = SamModel(2, (8,))
    m.set_param_vector(np.random.default_rng(31).normal(size=m.n_params))
    g = function_grid(m, resolution=16)
    axis = np.linspace(0.0, 1.0, 16)
    assert g.values[3, 7] == pytest.approx(
        m.forward(np.array([axis[7], axis[3]])), abs=1e-12
    )


# ---------------------------------------------------------------------------
# Trials and studies
# ---------------------------------------------------------------------------


def test_trial_datasets_shared_across_kinds_and_seeds():
    d1 = trial_datasets(TINY, 5)
    d2 = trial_datasets(TINY, 5)
    d3 = trial_datasets(TINY, 6)
    for a, b in zip(d1, d2):
        assert np.array_equal(a.inputs, b.inputs)
        assert np.array_equal(a.targets, b.targets)
    assert not np.array_equal(d1[0].inputs, d3[0].inputs)
    tags = [d.tag for d in d1]
    assert tags == ["A/task1/train", "A/task1/test", "A/task2/train", "A/task2/test"]


def test_run_trial_shapes_and_finals():
    r = run_trial(TINY, "sam", seed=3, grid_resolution=16)
    assert len(r.task1_history.train_mae) == TINY.task1_epochs + 1
    assert len(r.task2_history.train_mae) == TINY.task2_epochs + 1
    assert r.final_task1_mae == r.task1_history.val_mae[-1]
    assert r.final_task2_mae == r.task2_history.val_mae[-1]
    assert r.interference is not None and r.interference.resolution == 16
    assert r.model_after_task1.kind == "sam"
    # Epoch zero of task one is the zero model's error on the shared data.
    train1 = trial_datasets(TINY, 3)[0]
    assert r.task1_history.train_mae[0] == pytest.approx(
        float(np.mean(np.abs(train1.targets)))
    )


def test_run_trial_deterministic():
    a = run_trial(TINY, "kasam_pr", seed=7, grid_resolution=8, rehearsal_points=200)
    b = run_trial(TINY, "kasam_pr", seed=7, grid_resolution=8, rehearsal_points=200)
    assert np.array_equal(
        a.model_after_task2.param_vector(), b.model_after_task2.param_vector()
    )
    assert np.array_equal(a.interference.values, b.interference.values)
    assert a.task1_history.val_mae == b.task1_history.val_mae


def test_run_trial_rejects_unknown_kind():
    with pytest.raises(ValueError):
        run_trial(TINY, "tree", seed=0)


def test_zero_init_kinds_share_epoch_zero():
    rs = run_trial(TINY, "sam", seed=11, grid_resolution=8)
    rk = run_trial(TINY, "kasam", seed=11, grid_resolution=8)
    # Same data, both kinds start as the zero function.
    assert rs.task1_history.train_mae[0] == rk.task1_history.train_mae[0]
    assert rs.task1_history.val_mae[0] == rk.task1_history.val_mae[0]


def test_run_study_and_summary():
    seen = []
    summary = run_study(
        TINY,
        ["sam", "kasam"],
        trials=2,
        base_seed=100,
        on_trial=lambda r, i: seen.append((r.kind, i, r.seed)),
        grid_resolution=8,
    )
    assert seen == [("sam", 0, 100), ("sam", 1, 101), ("kasam", 0, 100), ("kasam", 1, 101)]
    assert summary.experiment_id == "A" and summary.trials == 2
    kinds = [s.kind for s in summary.stats]
    assert kinds == ["sam", "kasam"]
    for s in summary.stats:
        assert not s.degenerate_std
        assert s.task1_std >= 0.0
    # Two kinds, two tasks: two pairwise tests.
    assert len(summary.pairwise) == 2
    assert {p.task for p in summary.pairwise} == {1, 2}
    for p in summary.pairwise:
        assert 0.0 <= p.p <= 1.0


def test_single_trial_study_flags_degenerate_std():
    summary = run_study(TINY, ["sam"], trials=1, base_seed=5, grid_resolution=8)
    s = summary.stats[0]
    assert s.degenerate_std and s.task1_std == 0.0 and s.task2_std == 0.0
    assert summary.pairwise == []


def test_summarize_means_match_trials():
    results = {
        "sam": [
            run_trial(TINY, "sam", seed=s, grid_resolution=8) for s in (1, 2, 3)
        ]
    }
    summary = summarize("A", results)
    finals1 = [r.final_task1_mae for r in results["sam"]]
    s = summary.stats[0]
    assert s.task1_mean == pytest.approx(float(np.mean(finals1)))
    assert s.task1_std == pytest.approx(float(np.std(finals1, ddof=1)))
    assert s.trials == 3


def test_run_study_validation():
    with pytest.raises(ValueError):
        run_study(TINY, ["sam"], trials=0, base_seed=0)
    with pytest.raises(ValueError):
        run_study(TINY, ["sam", "sam"], trials=1, base_seed=0)
