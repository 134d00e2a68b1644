"""Two-task forgetting studies on the unit square.

Each experiment fits a model to a smooth target on [0, 1]^2 (task one),
then retrains on a small centre patch whose target is zero (task two)
and measures how much of the original function survives.  Trials are
fully seeded: one root seed fans out to every random choice a trial
makes, so reruns are bit-identical and every model kind sees the same
data for the same seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import betainc

from .models import ModelConfig, clone_model, init_model
from .training import Dataset, TrainConfig, TrainHistory, pseudo_rehearsal_mix, snapshot_labels, train

__all__ = [
    "EXPERIMENTS",
    "MODEL_KINDS",
    "ExperimentSpec",
    "Grid",
    "ModelStats",
    "PairwiseTest",
    "StudySummary",
    "TrialResult",
    "WelchResult",
    "function_grid",
    "interference_grid",
    "make_dataset",
    "run_study",
    "run_trial",
    "summarize",
    "target",
    "trial_datasets",
    "welch_test",
]

MODEL_KINDS = ("sam", "ann", "kasam", "kasam_pr")

# Task two zeroes the target on this open square and trains only inside
# the matching closed square.
HOLE_LOW = 0.45
HOLE_HIGH = 0.55

UNIT_SQUARE = ((0.0, 1.0), (0.0, 1.0))


# ---------------------------------------------------------------------------
# Targets and datasets
# ---------------------------------------------------------------------------


def _target_a(x1, x2):
    return np.cos(4.0 * np.pi * x1) * np.exp(-((2.0 * x1 - 1.0) ** 2)) + np.sin(np.pi * x2)


def _target_b(x1, x2):
    r1 = 10.0 * x1 - 5.0
    r2 = 10.0 * x2 - 5.0
    return 2.0 * np.exp(-(r1**2 + r2**2)) + np.sin(r1) ** 2 + np.sin(r2) ** 2


def _target_c(x1, x2):
    return 1.0 + np.cos(20.0 * x1 - 10.0) * np.cos(20.0 * x2 - 10.0)


_TARGETS: dict[str, Callable] = {"A": _target_a, "B": _target_b, "C": _target_c}


@dataclass(frozen=True)
class ExperimentSpec:
    """One study's shape: which target, how much data, how long to train."""

    experiment_id: str
    n_points: int = 10000
    noise_std: float = 0.05
    task1_epochs: int = 200
    task2_epochs: int = 20

    def __post_init__(self):
        if self.experiment_id not in _TARGETS:
            raise ValueError(f"unknown experiment: {self.experiment_id!r}")
        if self.n_points < 1:
            raise ValueError("n_points must be positive")
        if self.noise_std < 0.0:
            raise ValueError("noise_std cannot be negative")
        if self.task1_epochs < 0 or self.task2_epochs < 0:
            raise ValueError("epoch counts cannot be negative")


EXPERIMENTS = {name: ExperimentSpec(name) for name in _TARGETS}


def target(experiment_id: str, task: int, points) -> np.ndarray | float:
    """Noiseless target value(s) on the unit square.

    Task one is the experiment's base surface; task two replaces it with
    zero strictly inside the centre square (open interval, so the
    boundary keeps its task-one value).
    """
    if experiment_id not in _TARGETS:
        raise ValueError(f"unknown experiment: {experiment_id!r}")
    if task not in (1, 2):
        raise ValueError("task must be 1 or 2")
    X = np.asarray(points, dtype=float)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != 2:
        raise ValueError("points must have shape (n, 2)")
    if X.size and (X.min() < 0.0 or X.max() > 1.0):
        raise ValueError("points must lie in the unit square")
    x1, x2 = X[:, 0], X[:, 1]
    y = _TARGETS[experiment_id](x1, x2)
    if task == 2:
        inside = (x1 > HOLE_LOW) & (x1 < HOLE_HIGH) & (x2 > HOLE_LOW) & (x2 < HOLE_HIGH)
        y = np.where(inside, 0.0, y)
    return float(y[0]) if single else y


def make_dataset(
    spec: ExperimentSpec, task: int, split: str, rng: np.random.Generator
) -> Dataset:
    """Sample one split: uniform inputs, noisy targets.

    Task two's training split lives on the closed centre square with
    pure-noise-around-zero targets; every other split covers the whole
    unit square and labels with the task's target function.
    """
    if split not in ("train", "test"):
        raise ValueError("split must be 'train' or 'test'")
    if task not in (1, 2):
        raise ValueError("task must be 1 or 2")
    if task == 2 and split == "train":
        X = rng.uniform(HOLE_LOW, HOLE_HIGH, size=(spec.n_points, 2))
        clean = np.zeros(spec.n_points)
        domain = ((HOLE_LOW, HOLE_HIGH), (HOLE_LOW, HOLE_HIGH))
    else:
        X = rng.uniform(0.0, 1.0, size=(spec.n_points, 2))
        clean = target(spec.experiment_id, task, X)
        domain = UNIT_SQUARE
    y = clean + spec.noise_std * rng.standard_normal(spec.n_points)
    return Dataset(X, y, tag=f"{spec.experiment_id}/task{task}/{split}", domain=domain)


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


@dataclass
class Grid:
    """A scalar field sampled on an evenly spaced square lattice.

    Row r holds x2 = r / (resolution - 1); column c holds
    x1 = c / (resolution - 1).  Row zero is therefore the x2 = 0 edge.
    """

    resolution: int
    values: np.ndarray
    domain: tuple[tuple[float, float], ...] = UNIT_SQUARE

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.resolution < 2:
            raise ValueError("resolution must be at least 2")
        if self.values.shape != (self.resolution, self.resolution):
            raise ValueError("values must be a (resolution, resolution) array")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")

    @property
    def vmin(self) -> float:
        return float(self.values.min())

    @property
    def vmax(self) -> float:
        return float(self.values.max())


def _lattice(resolution: int) -> np.ndarray:
    axis = np.linspace(0.0, 1.0, resolution)
    x1, x2 = np.meshgrid(axis, axis)
    return np.column_stack([x1.ravel(), x2.ravel()])


def function_grid(model, resolution: int = 256) -> Grid:
    """Sample a two-input model on the unit-square lattice."""
    if model.input_dim != 2:
        raise ValueError("grids need a two-input model")
    values = model.forward_batch(_lattice(resolution)).reshape(resolution, resolution)
    return Grid(resolution, values)


def interference_grid(before, after, resolution: int = 256) -> Grid:
    """Pointwise |after - before| over the unit square."""
    if before.kind != after.kind or before.config_dict() != after.config_dict():
        raise ValueError("interference needs two snapshots of one architecture")
    if before.input_dim != 2:
        raise ValueError("grids need a two-input model")
    pts = _lattice(resolution)
    diff = np.abs(after.forward_batch(pts) - before.forward_batch(pts))
    return Grid(resolution, diff.reshape(resolution, resolution))


# ---------------------------------------------------------------------------
# Welch's unequal-variance t-test
# ---------------------------------------------------------------------------


class WelchResult(NamedTuple):
    t: float
    df: float
    p: float


def welch_test(a, b) -> WelchResult:
    """Two-sided Welch t-test without pooling variances.

    Returns the statistic, the Welch-Satterthwaite degrees of freedom,
    and the two-sided p-value.  Zero-variance groups degenerate to p = 1
    for equal means and p = 0 otherwise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1 or a.size < 2 or b.size < 2:
        raise ValueError("each group needs at least two samples")
    na, nb = a.size, b.size
    ma, mb = a.mean(), b.mean()
    va, vb = a.var(ddof=1), b.var(ddof=1)
    se2 = va / na + vb / nb
    if se2 == 0.0:
        if ma == mb:
            return WelchResult(0.0, float(na + nb - 2), 1.0)
        return WelchResult(math.copysign(math.inf, ma - mb), float(na + nb - 2), 0.0)
    t = (ma - mb) / math.sqrt(se2)
    df = se2**2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    # Two-sided tail mass of the t distribution via the regularised
    # incomplete beta function.
    x = df / (df + t * t)
    p = float(betainc(df / 2.0, 0.5, x))
    return WelchResult(float(t), float(df), p)


# ---------------------------------------------------------------------------
# Trials and studies
# ---------------------------------------------------------------------------


@dataclass
class TrialResult:
    """Everything one (experiment, model kind, seed) run produced."""

    experiment_id: str
    kind: str
    seed: int
    task1_history: TrainHistory
    task2_history: TrainHistory
    final_task1_mae: float
    final_task2_mae: float
    interference: Grid | None
    model_after_task1: object
    model_after_task2: object


class _TrialSeeds(NamedTuple):
    train1: np.random.SeedSequence
    test1: np.random.SeedSequence
    train2: np.random.SeedSequence
    test2: np.random.SeedSequence
    init: np.random.SeedSequence
    shuffle1: np.random.SeedSequence
    shuffle2: np.random.SeedSequence
    pool: np.random.SeedSequence
    mix: np.random.SeedSequence


def _trial_seeds(seed: int) -> _TrialSeeds:
    return _TrialSeeds(*np.random.SeedSequence(seed).spawn(9))


def trial_datasets(spec: ExperimentSpec, seed: int):
    """The four datasets a trial with this seed trains and tests on.

    Dataset randomness is independent of the model kind, so every kind
    compares on identical data for a given seed.
    """
    seeds = _trial_seeds(seed)
    return (
        make_dataset(spec, 1, "train", np.random.default_rng(seeds.train1)),
        make_dataset(spec, 1, "test", np.random.default_rng(seeds.test1)),
        make_dataset(spec, 2, "train", np.random.default_rng(seeds.train2)),
        make_dataset(spec, 2, "test", np.random.default_rng(seeds.test2)),
    )


def run_trial(
    spec: ExperimentSpec,
    kind: str,
    seed: int,
    model_config: ModelConfig = ModelConfig(),
    learning_rate: float = 0.001,
    batch_size: int = 100,
    rho: float = 0.5,
    rehearsal_points: int = 10000,
    grid_resolution: int = 256,
) -> TrialResult:
    """One full two-task run for one model kind.

    The seed fans out, in a fixed order, to: task-one train data,
    task-one test data, task-two train data, task-two test data, model
    initialisation, both epoch shuffles, the rehearsal pool, and the
    rehearsal mix.  Different model kinds therefore see identical data
    for the same seed.  The test sets double as validation sets, and the
    last validation entries are the reported final errors.
    """
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind: {kind!r}")
    seeds = _trial_seeds(seed)
    task1_train, task1_test, task2_train, task2_test = trial_datasets(spec, seed)

    model = init_model(kind, model_config, np.random.default_rng(seeds.init))

    def seed_int(ss) -> int:
        return int(ss.generate_state(1)[0])

    cfg1 = TrainConfig(
        epochs=spec.task1_epochs,
        learning_rate=learning_rate,
        batch_size=batch_size,
        shuffle_seed=seed_int(seeds.shuffle1),
    )
    hist1 = train(model, task1_train, task1_test, cfg1)
    model_after_task1 = clone_model(model)

    if kind == "kasam_pr":
        pool = np.random.default_rng(seeds.pool).uniform(
            0.0, 1.0, size=(rehearsal_points, model.input_dim)
        )
        rehearsal = Dataset(
            pool,
            snapshot_labels(model, pool),
            tag=f"{spec.experiment_id}/rehearsal",
            domain=UNIT_SQUARE,
        )
        task2_fit = pseudo_rehearsal_mix(
            task2_train,
            rehearsal,
            rho=rho,
            n_out=spec.n_points,
            rng=np.random.default_rng(seeds.mix),
        )
    else:
        task2_fit = task2_train

    cfg2 = TrainConfig(
        epochs=spec.task2_epochs,
        learning_rate=learning_rate,
        batch_size=batch_size,
        shuffle_seed=seed_int(seeds.shuffle2),
    )
    hist2 = train(model, task2_fit, task2_test, cfg2)

    interference = None
    if model.input_dim == 2:
        interference = interference_grid(model_after_task1, model, grid_resolution)

    return TrialResult(
        experiment_id=spec.experiment_id,
        kind=kind,
        seed=seed,
        task1_history=hist1,
        task2_history=hist2,
        final_task1_mae=hist1.val_mae[-1],
        final_task2_mae=hist2.val_mae[-1],
        interference=interference,
        model_after_task1=model_after_task1,
        model_after_task2=model,
    )


@dataclass(frozen=True)
class ModelStats:
    """Mean and sample standard deviation of one kind's final errors."""

    kind: str
    task1_mean: float
    task1_std: float
    task2_mean: float
    task2_std: float
    trials: int
    degenerate_std: bool


@dataclass(frozen=True)
class PairwiseTest:
    kind_a: str
    kind_b: str
    task: int
    t: float
    df: float
    p: float


@dataclass
class StudySummary:
    experiment_id: str
    trials: int
    stats: list[ModelStats]
    pairwise: list[PairwiseTest]


def _finals(results: list[TrialResult], task: int) -> np.ndarray:
    if task == 1:
        return np.array([r.final_task1_mae for r in results])
    return np.array([r.final_task2_mae for r in results])


def summarize(experiment_id: str, results: dict[str, list[TrialResult]]) -> StudySummary:
    """Aggregate per-kind means/stds and all pairwise Welch tests.

    A single trial cannot estimate spread: its std is reported as 0.0
    and flagged, and pairwise tests are skipped.
    """
    kinds = list(results)
    if not kinds:
        raise ValueError("no results to summarise")
    trials = len(results[kinds[0]])
    stats = []
    for kind in kinds:
        rs = results[kind]
        degenerate = len(rs) < 2
        row = []
        for task in (1, 2):
            finals = _finals(rs, task)
            row.append(float(finals.mean()))
            row.append(0.0 if degenerate else float(finals.std(ddof=1)))
        stats.append(
            ModelStats(kind, row[0], row[1], row[2], row[3], len(rs), degenerate)
        )
    pairwise = []
    for i, ka in enumerate(kinds):
        for kb in kinds[i + 1 :]:
            if len(results[ka]) < 2 or len(results[kb]) < 2:
                continue
            for task in (1, 2):
                w = welch_test(_finals(results[ka], task), _finals(results[kb], task))
                pairwise.append(PairwiseTest(ka, kb, task, w.t, w.df, w.p))
    return StudySummary(experiment_id, trials, stats, pairwise)


def run_study(
    spec: ExperimentSpec,
    kinds,
    trials: int,
    base_seed: int,
    on_trial: Callable[[TrialResult, int], None] | None = None,
    **trial_kwargs,
) -> StudySummary:
    """Run `trials` seeded trials per kind (seed = base_seed + index).

    The optional on_trial callback sees every TrialResult as it lands,
    which is how callers persist artifacts without the summary having to
    carry them all.
    """
    kinds = list(kinds)
    if trials < 1:
        raise ValueError("trials must be positive")
    if len(set(kinds)) != len(kinds):
        raise ValueError("duplicate model kinds")
    results: dict[str, list[TrialResult]] = {k: [] for k in kinds}
    for kind in kinds:
        for index in range(trials):
            result = run_trial(spec, kind, base_seed + index, **trial_kwargs)
            results[kind].append(result)
            if on_trial is not None:
                on_trial(result, index)
    return summarize(spec.experiment_id, results)
