"""Mean-absolute-error training with Adam, plus pseudo-rehearsal mixing.

The loss is optimised directly through its sign subgradient, with
sign(0) = 0, so a batch the model already fits exactly produces a zero
update and untouched parameters stay bit-identical.  That exactness is
what the stratification and rehearsal guarantees lean on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AdamState",
    "Dataset",
    "TrainConfig",
    "TrainHistory",
    "adam_step",
    "mae",
    "pseudo_rehearsal_mix",
    "snapshot_labels",
    "train",
]


# ---------------------------------------------------------------------------
# Data
# ---------------------------------------------------------------------------


@dataclass
class Dataset:
    """Paired inputs (n, d) and targets (n,), optionally tagged and bounded."""

    inputs: np.ndarray
    targets: np.ndarray
    tag: str = ""
    domain: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=float)
        self.targets = np.asarray(self.targets, dtype=float)
        if self.inputs.ndim != 2:
            raise ValueError("inputs must be two-dimensional (points, dims)")
        if self.targets.shape != (self.inputs.shape[0],):
            raise ValueError("targets must be one value per input point")
        if self.inputs.shape[0] == 0:
            raise ValueError("a dataset needs at least one point")
        if self.domain is not None:
            self.domain = tuple((float(lo), float(hi)) for lo, hi in self.domain)
            if len(self.domain) != self.inputs.shape[1]:
                raise ValueError("domain must give one (low, high) pair per dimension")
            for dim, (lo, hi) in enumerate(self.domain):
                col = self.inputs[:, dim]
                if lo > hi or col.min() < lo or col.max() > hi:
                    raise ValueError(f"inputs leave the stated domain in dimension {dim}")

    def __len__(self) -> int:
        return self.inputs.shape[0]


def mae(predictions, targets) -> float:
    """Mean absolute error between two equal-length vectors."""
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if predictions.shape != targets.shape or predictions.ndim != 1:
        raise ValueError("predictions and targets must be equal-length vectors")
    if predictions.size == 0:
        raise ValueError("cannot average an empty error vector")
    return float(np.mean(np.abs(predictions - targets)))


# ---------------------------------------------------------------------------
# Optimiser
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    """Optimisation knobs; defaults match the studies in this package."""

    epochs: int
    learning_rate: float = 0.001
    batch_size: int = 100
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if not (0.0 <= self.adam_beta1 < 1.0 and 0.0 <= self.adam_beta2 < 1.0):
            raise ValueError("Adam betas must lie in [0, 1)")
        if self.adam_epsilon <= 0.0:
            raise ValueError("adam_epsilon must be positive")


@dataclass
class AdamState:
    """First and second moment accumulators plus the step counter."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_step(params, grads, state: AdamState, cfg: TrainConfig):
    """One bias-corrected Adam update; returns (new params, new state)."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ValueError("params, grads, and state must share one shape")
    t = state.t + 1
    m = cfg.adam_beta1 * state.m + (1.0 - cfg.adam_beta1) * grads
    v = cfg.adam_beta2 * state.v + (1.0 - cfg.adam_beta2) * grads * grads
    m_hat = m / (1.0 - cfg.adam_beta1**t)
    v_hat = v / (1.0 - cfg.adam_beta2**t)
    new_params = params - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_epsilon)
    return new_params, AdamState(m, v, t)


# ---------------------------------------------------------------------------
# The loop
# ---------------------------------------------------------------------------


@dataclass
class TrainHistory:
    """Per-epoch full-set errors; entry 0 is the untouched starting model."""

    train_mae: list[float] = field(default_factory=list)
    val_mae: list[float] = field(default_factory=list)

    @property
    def epochs(self) -> int:
        return len(self.train_mae) - 1


def train(model, train_set: Dataset, val_set: Dataset, cfg: TrainConfig) -> TrainHistory:
    """Minibatch MAE training with Adam and per-epoch seeded shuffles.

    Mutates the model in place and returns the error history, one row per
    epoch plus the starting point, each measured on the full train and
    validation sets after that epoch's updates.
    """
    if cfg.batch_size > len(train_set):
        raise ValueError("batch_size cannot exceed the training set size")
    train_cache = model.precompute(train_set.inputs)
    val_cache = model.precompute(val_set.inputs)

    def measure(history: TrainHistory) -> None:
        history.train_mae.append(mae(model.forward_cached(train_cache), train_set.targets))
        history.val_mae.append(mae(model.forward_cached(val_cache), val_set.targets))

    history = TrainHistory()
    measure(history)

    params = model.param_vector()
    state = AdamState.zeros(params.size)
    rng = np.random.default_rng(cfg.shuffle_seed)
    n = len(train_set)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            grads = model.loss_subgrad_cached(train_cache, idx, train_set.targets[idx])
            params, state = adam_step(params, grads, state, cfg)
            model.set_param_vector(params)
        measure(history)
    return history


# ---------------------------------------------------------------------------
# Pseudo-rehearsal
# ---------------------------------------------------------------------------


def snapshot_labels(model, inputs) -> np.ndarray:
    """Label a pool of inputs with the model's current outputs.

    The result is a detached copy: training the model afterwards cannot
    change labels already taken.
    """
    inputs = np.asarray(inputs, dtype=float)
    return np.array(model.forward_batch(inputs))


def pseudo_rehearsal_mix(
    new_task: Dataset,
    rehearsal: Dataset,
    rho: float,
    n_out: int,
    rng: np.random.Generator | None = None,
) -> Dataset:
    """Per-sample Bernoulli(rho) mixture of new-task and rehearsal data.

    Each output row is drawn (with replacement) from the new task with
    probability rho, otherwise from the rehearsal pool.  rho = 1 uses
    only new data, rho = 0 only rehearsal data.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    if n_out < 1:
        raise ValueError("n_out must be positive")
    if new_task.inputs.shape[1] != rehearsal.inputs.shape[1]:
        raise ValueError("datasets must share one input dimension")
    if rng is None:
        rng = np.random.default_rng(0)

    take_new = rng.random(n_out) < rho
    idx_new = rng.integers(0, len(new_task), size=n_out)
    idx_old = rng.integers(0, len(rehearsal), size=n_out)
    inputs = np.where(
        take_new[:, None], new_task.inputs[idx_new], rehearsal.inputs[idx_old]
    )
    targets = np.where(take_new, new_task.targets[idx_new], rehearsal.targets[idx_old])

    domain = None
    if new_task.domain is not None and rehearsal.domain is not None:
        domain = tuple(
            (min(a_lo, b_lo), max(a_hi, b_hi))
            for (a_lo, a_hi), (b_lo, b_hi) in zip(new_task.domain, rehearsal.domain)
        )
    tag = f"mix[rho={rho:g}]({new_task.tag}|{rehearsal.tag})"
    return Dataset(inputs, targets, tag=tag, domain=domain)
