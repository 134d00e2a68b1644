"""Additive spline models and their dense-network counterpart.

Three function approximators on the unit box share one parameter story:
a flat float64 vector addressed through a named block layout.

* ``SamModel``: a sum of per-variable spline functions.  Linear in its
  parameters, so its gradient is just a sparse row of basis values.
* ``KasamModel``: spline functions of spline functions.  Hidden sums of
  per-variable splines pass through a sigmoid into a second spline
  stack, plus a linear skip and per-variable direct splines.  Only the
  spline coefficients train; the basis placements are structural.
* ``AnnModel``: the same dataflow with every affine layer trainable,
  so the spline model's function class sits inside this one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit

from .splines import (
    Spline1D,
    activation,
    activation_deriv,
    make_basis,
    stack_design,
)

__all__ = [
    "AnnModel",
    "FlatParams",
    "KasamModel",
    "LayoutBlock",
    "ModelConfig",
    "ParamLayout",
    "SamModel",
    "clone_model",
    "init_model",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "save_model",
]


# ---------------------------------------------------------------------------
# Parameter layout
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LayoutBlock:
    """One named contiguous slice of the flat parameter vector."""

    name: str
    offset: int
    length: int
    density: int | None = None


class ParamLayout:
    """Ordered, non-overlapping blocks covering [0, total)."""

    def __init__(self, blocks: Sequence[LayoutBlock]):
        self.blocks = tuple(blocks)
        self._by_name = {}
        offset = 0
        for b in self.blocks:
            if b.offset != offset:
                raise ValueError(f"block {b.name} does not start at {offset}")
            if b.length <= 0:
                raise ValueError(f"block {b.name} has non-positive length")
            if b.name in self._by_name:
                raise ValueError(f"duplicate block name {b.name}")
            self._by_name[b.name] = b
            offset += b.length
        self.total = offset

    def block(self, name: str) -> LayoutBlock:
        return self._by_name[name]

    def slice_of(self, name: str) -> slice:
        b = self._by_name[name]
        return slice(b.offset, b.offset + b.length)

    def names(self) -> list[str]:
        return [b.name for b in self.blocks]

    def __eq__(self, other):
        return isinstance(other, ParamLayout) and self.blocks == other.blocks


@dataclass
class FlatParams:
    """A flat parameter vector together with its block layout."""

    vector: np.ndarray
    layout: ParamLayout

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=float)
        if self.vector.shape != (self.layout.total,):
            raise ValueError("vector length does not match layout")

    def get(self, name: str) -> np.ndarray:
        return self.vector[self.layout.slice_of(name)]

    def set(self, name: str, values) -> None:
        values = np.asarray(values, dtype=float)
        sl = self.layout.slice_of(name)
        if values.shape != (sl.stop - sl.start,):
            raise ValueError(f"wrong length for block {name}")
        self.vector[sl] = values


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelConfig:
    """Shared construction knobs for all three model kinds."""

    input_dim: int = 2
    sam_densities: tuple[int, ...] = (32,)
    kasam_densities: tuple[int, ...] = (4, 8, 16, 32)
    hidden_count: int = 3
    skip_weight: float = 0.1


def _check_densities(densities) -> tuple[int, ...]:
    densities = tuple(int(k) for k in densities)
    if not densities or any(k < 4 for k in densities):
        raise ValueError("each density must be at least 4")
    return densities


def _expansion_rows(bases) -> tuple[np.ndarray, np.ndarray]:
    """Concatenated (scale, shift) rows of a multi-density expansion."""
    scales = np.concatenate([b.scales for b in bases])
    shifts = np.concatenate([b.shifts for b in bases])
    return scales, shifts


# ---------------------------------------------------------------------------
# SAM
# ---------------------------------------------------------------------------


class SamModel:
    """Sum over variables of multi-density spline functions."""

    kind = "sam"

    def __init__(self, input_dim: int = 2, densities=(32,)):
        if input_dim < 1:
            raise ValueError("input_dim must be positive")
        self.input_dim = int(input_dim)
        self.densities = _check_densities(densities)
        self.bases = tuple(make_basis(k) for k in self.densities)
        self.features_per_var = sum(self.densities)
        blocks = []
        offset = 0
        for j in range(self.input_dim):
            for b in self.bases:
                blocks.append(LayoutBlock(f"x{j}/k{b.density}", offset, b.density, b.density))
                offset += b.density
        self.layout = ParamLayout(blocks)
        self._flat = np.zeros(self.layout.total)

    # -- parameters --

    @property
    def n_params(self) -> int:
        return self._flat.size

    def param_vector(self) -> np.ndarray:
        return self._flat.copy()

    def set_param_vector(self, vector) -> None:
        vector = np.asarray(vector, dtype=float)
        if vector.shape != self._flat.shape:
            raise ValueError("parameter vector has the wrong length")
        self._flat[:] = vector

    def flat_params(self) -> FlatParams:
        """Live view of the parameters; writes land in the model."""
        return FlatParams(self._flat, self.layout)

    def var_stack(self, j: int) -> list[Spline1D]:
        """Views of variable j's splines, one per density."""
        return [
            Spline1D(b, self._flat[self.layout.slice_of(f"x{j}/k{b.density}")])
            for b in self.bases
        ]

    # -- evaluation --

    def _check_inputs(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise ValueError(f"expected inputs of shape (batch, {self.input_dim})")
        return X

    def _features(self, X: np.ndarray) -> np.ndarray:
        # Variable-major feature columns: all of x0's densities, then x1's, ...
        flat = X.T.reshape(-1)
        d = stack_design(self.bases, flat)
        n, fpv = self.input_dim, self.features_per_var
        return d.reshape(n, X.shape[0], fpv).transpose(1, 0, 2).reshape(X.shape[0], n * fpv)

    def precompute(self, X) -> dict:
        return {"features": self._features(self._check_inputs(X))}

    def forward_cached(self, cache: dict, idx=None) -> np.ndarray:
        feats = cache["features"] if idx is None else cache["features"][idx]
        return feats @ self._flat

    def forward_batch(self, X) -> np.ndarray:
        return self._features(self._check_inputs(X)) @ self._flat

    def forward(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.input_dim,):
            raise ValueError(f"expected a point of shape ({self.input_dim},)")
        return float(self.forward_batch(x[None, :])[0])

    # -- gradients --

    def param_grad(self, x) -> np.ndarray:
        """Gradient of forward(x) in the parameters: the feature row itself."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.input_dim,):
            raise ValueError(f"expected a point of shape ({self.input_dim},)")
        return self._features(x[None, :])[0].copy()

    def loss_subgrad_cached(self, cache: dict, idx, targets) -> np.ndarray:
        feats = cache["features"] if idx is None else cache["features"][idx]
        resid = feats @ self._flat - targets
        c = np.sign(resid) / resid.size
        return feats.T @ c

    def config_dict(self) -> dict:
        return {"input_dim": self.input_dim, "densities": list(self.densities)}


# ---------------------------------------------------------------------------
# KASAM
# ---------------------------------------------------------------------------


class KasamModel:
    """Spline functions of sigmoid-squashed sums of spline functions.

    Output = sum_q s_q(sigmoid(z_q)) + skip_weight * sum_q z_q + sum_j g_j(x_j)
    with z_q = sum_p h_{q,p}(x_p).  Every h, s, and g is a multi-density
    spline stack; all their coefficients start at zero and are the only
    trainable parameters.
    """

    kind = "kasam"

    def __init__(
        self,
        input_dim: int = 2,
        densities=(4, 8, 16, 32),
        hidden_count: int = 3,
        skip_weight: float = 0.1,
    ):
        if input_dim < 1:
            raise ValueError("input_dim must be positive")
        if hidden_count < 1:
            raise ValueError("hidden_count must be positive")
        self.input_dim = int(input_dim)
        self.densities = _check_densities(densities)
        self.hidden_count = int(hidden_count)
        self.skip_weight = float(skip_weight)
        self.bases = tuple(make_basis(k) for k in self.densities)
        self.features_per_var = sum(self.densities)

        n, N, fpv = self.input_dim, self.hidden_count, self.features_per_var
        self.interior_features = n * fpv
        self.exterior_features = N * fpv

        blocks = []
        offset = 0
        for q in range(N):
            for p in range(n):
                for b in self.bases:
                    blocks.append(
                        LayoutBlock(f"h/q{q}/x{p}/k{b.density}", offset, b.density, b.density)
                    )
                    offset += b.density
        for q in range(N):
            for b in self.bases:
                blocks.append(LayoutBlock(f"s/q{q}/k{b.density}", offset, b.density, b.density))
                offset += b.density
        for j in range(n):
            for b in self.bases:
                blocks.append(LayoutBlock(f"g/x{j}/k{b.density}", offset, b.density, b.density))
                offset += b.density
        self.layout = ParamLayout(blocks)
        self._flat = np.zeros(self.layout.total)

        F1, E = self.interior_features, self.exterior_features
        self.interior = self._flat[: N * F1].reshape(N, F1)
        self.exterior = self._flat[N * F1 : N * F1 + E]
        self.direct = self._flat[N * F1 + E :]

    # -- parameters --

    @property
    def n_params(self) -> int:
        return self._flat.size

    def param_vector(self) -> np.ndarray:
        return self._flat.copy()

    def set_param_vector(self, vector) -> None:
        vector = np.asarray(vector, dtype=float)
        if vector.shape != self._flat.shape:
            raise ValueError("parameter vector has the wrong length")
        self._flat[:] = vector

    def flat_params(self) -> FlatParams:
        return FlatParams(self._flat, self.layout)

    def interior_stack(self, q: int, p: int) -> list[Spline1D]:
        return [
            Spline1D(b, self._flat[self.layout.slice_of(f"h/q{q}/x{p}/k{b.density}")])
            for b in self.bases
        ]

    def exterior_stack(self, q: int) -> list[Spline1D]:
        return [
            Spline1D(b, self._flat[self.layout.slice_of(f"s/q{q}/k{b.density}")])
            for b in self.bases
        ]

    def direct_stack(self, j: int) -> list[Spline1D]:
        return [
            Spline1D(b, self._flat[self.layout.slice_of(f"g/x{j}/k{b.density}")])
            for b in self.bases
        ]

    # -- evaluation --

    def _check_inputs(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise ValueError(f"expected inputs of shape (batch, {self.input_dim})")
        return X

    def _features(self, X: np.ndarray) -> np.ndarray:
        flat = X.T.reshape(-1)
        d = stack_design(self.bases, flat)
        n, fpv = self.input_dim, self.features_per_var
        return d.reshape(n, X.shape[0], fpv).transpose(1, 0, 2).reshape(X.shape[0], n * fpv)

    def precompute(self, X) -> dict:
        return {"features": self._features(self._check_inputs(X))}

    def _forward_parts(self, feats: np.ndarray):
        B = feats.shape[0]
        N, fpv = self.hidden_count, self.features_per_var
        z = feats @ self.interior.T
        u = expit(z)
        basis2 = stack_design(self.bases, u.reshape(-1)).reshape(B, N * fpv)
        out = basis2 @ self.exterior + self.skip_weight * z.sum(axis=1) + feats @ self.direct
        return z, u, basis2, out

    def forward_cached(self, cache: dict, idx=None) -> np.ndarray:
        feats = cache["features"] if idx is None else cache["features"][idx]
        return self._forward_parts(feats)[3]

    def forward_batch(self, X) -> np.ndarray:
        return self._forward_parts(self._features(self._check_inputs(X)))[3]

    def forward(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.input_dim,):
            raise ValueError(f"expected a point of shape ({self.input_dim},)")
        return float(self.forward_batch(x[None, :])[0])

    # -- gradients --

    def _backward(self, feats, z, u, basis2, c) -> np.ndarray:
        """Weighted parameter gradient: sum_b c_b * d out_b / d params."""
        N, fpv = self.hidden_count, self.features_per_var
        B = feats.shape[0]
        grad = np.zeros_like(self._flat)
        gi = grad[: self.interior.size].reshape(self.interior.shape)
        ge = grad[self.interior.size : self.interior.size + self.exterior.size]
        gd = grad[self.interior.size + self.exterior.size :]

        ge[:] = basis2.T @ c
        gd[:] = feats.T @ c

        dcopies = stack_design(self.bases, u.reshape(-1), deriv=True).reshape(B, N, fpv)
        s_slope = np.einsum("bqf,qf->bq", dcopies, self.exterior.reshape(N, fpv))
        dz = s_slope * u * (1.0 - u) + self.skip_weight
        gi[:, :] = (dz * c[:, None]).T @ feats
        return grad

    def param_grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.input_dim,):
            raise ValueError(f"expected a point of shape ({self.input_dim},)")
        feats = self._features(x[None, :])
        z, u, basis2, _ = self._forward_parts(feats)
        return self._backward(feats, z, u, basis2, np.ones(1))

    def loss_subgrad_cached(self, cache: dict, idx, targets) -> np.ndarray:
        feats = cache["features"] if idx is None else cache["features"][idx]
        z, u, basis2, out = self._forward_parts(feats)
        c = np.sign(out - targets) / out.size
        return self._backward(feats, z, u, basis2, c)

    def config_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "densities": list(self.densities),
            "hidden_count": self.hidden_count,
            "skip_weight": self.skip_weight,
        }


# ---------------------------------------------------------------------------
# Matched dense network
# ---------------------------------------------------------------------------


class AnnModel:
    """Dense network with the same dataflow as the spline composition.

    Layer one expands inputs through the bump activation, a linear map
    forms hidden sums, a sigmoid squashes them, layer two expands again,
    and two zero-initialised output layers combine both expansions.  A
    constant skip adds skip_weight times each hidden sum.  Unlike the
    spline model, both expansion layers' weights and biases train.
    """

    kind = "ann"

    def __init__(
        self,
        input_dim: int = 2,
        densities=(4, 8, 16, 32),
        hidden_count: int = 3,
        skip_weight: float = 0.1,
    ):
        if input_dim < 1:
            raise ValueError("input_dim must be positive")
        if hidden_count < 1:
            raise ValueError("hidden_count must be positive")
        self.input_dim = int(input_dim)
        self.densities = _check_densities(densities)
        self.hidden_count = int(hidden_count)
        self.skip_weight = float(skip_weight)
        self.bases = tuple(make_basis(k) for k in self.densities)
        self.features_per_var = sum(self.densities)

        n, N, fpv = self.input_dim, self.hidden_count, self.features_per_var
        F1, E = n * fpv, N * fpv
        self.interior_features = F1
        self.exterior_features = E

        sizes = [
            ("layer1/w", F1 * n),
            ("layer1/b", F1),
            ("interior/w", N * F1),
            ("layer2/w", E * N),
            ("layer2/b", E),
            ("exterior/w", E),
            ("direct/w", F1),
        ]
        blocks = []
        offset = 0
        for name, length in sizes:
            blocks.append(LayoutBlock(name, offset, length))
            offset += length
        self.layout = ParamLayout(blocks)
        self._flat = np.zeros(self.layout.total)

        self.w1 = self._flat[self.layout.slice_of("layer1/w")].reshape(F1, n)
        self.b1 = self._flat[self.layout.slice_of("layer1/b")]
        self.mix = self._flat[self.layout.slice_of("interior/w")].reshape(N, F1)
        self.w2 = self._flat[self.layout.slice_of("layer2/w")].reshape(E, N)
        self.b2 = self._flat[self.layout.slice_of("layer2/b")]
        self.out_s = self._flat[self.layout.slice_of("exterior/w")]
        self.out_g = self._flat[self.layout.slice_of("direct/w")]

    @classmethod
    def from_kasam(cls, source: KasamModel) -> "AnnModel":
        """Dense twin computing the same function as the given spline model."""
        m = cls(
            source.input_dim,
            source.densities,
            source.hidden_count,
            source.skip_weight,
        )
        scales, shifts = _expansion_rows(source.bases)
        n, N, fpv = m.input_dim, m.hidden_count, m.features_per_var
        for p in range(n):
            m.w1[p * fpv : (p + 1) * fpv, p] = scales
        m.b1[:] = np.tile(shifts, n)
        for q in range(N):
            m.w2[q * fpv : (q + 1) * fpv, q] = scales
        m.b2[:] = np.tile(shifts, N)
        m.mix[:, :] = source.interior
        m.out_s[:] = source.exterior
        m.out_g[:] = source.direct
        return m

    # -- parameters --

    @property
    def n_params(self) -> int:
        return self._flat.size

    def param_vector(self) -> np.ndarray:
        return self._flat.copy()

    def set_param_vector(self, vector) -> None:
        vector = np.asarray(vector, dtype=float)
        if vector.shape != self._flat.shape:
            raise ValueError("parameter vector has the wrong length")
        self._flat[:] = vector

    def flat_params(self) -> FlatParams:
        return FlatParams(self._flat, self.layout)

    # -- evaluation --

    def _check_inputs(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise ValueError(f"expected inputs of shape (batch, {self.input_dim})")
        return X

    def precompute(self, X) -> dict:
        return {"inputs": self._check_inputs(X)}

    def _forward_parts(self, X: np.ndarray):
        pre1 = X @ self.w1.T + self.b1
        feats = activation(pre1)
        z = feats @ self.mix.T
        u = expit(z)
        pre2 = u @ self.w2.T + self.b2
        basis2 = activation(pre2)
        out = basis2 @ self.out_s + self.skip_weight * z.sum(axis=1) + feats @ self.out_g
        return pre1, feats, z, u, pre2, basis2, out

    def forward_cached(self, cache: dict, idx=None) -> np.ndarray:
        X = cache["inputs"] if idx is None else cache["inputs"][idx]
        return self._forward_parts(X)[6]

    def forward_batch(self, X) -> np.ndarray:
        return self._forward_parts(self._check_inputs(X))[6]

    def forward(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.input_dim,):
            raise ValueError(f"expected a point of shape ({self.input_dim},)")
        return float(self.forward_batch(x[None, :])[0])

    # -- gradients --

    def _backward(self, X, pre1, feats, z, u, pre2, basis2, c) -> np.ndarray:
        grad = np.zeros_like(self._flat)
        lay = self.layout
        g_w1 = grad[lay.slice_of("layer1/w")].reshape(self.w1.shape)
        g_b1 = grad[lay.slice_of("layer1/b")]
        g_mix = grad[lay.slice_of("interior/w")].reshape(self.mix.shape)
        g_w2 = grad[lay.slice_of("layer2/w")].reshape(self.w2.shape)
        g_b2 = grad[lay.slice_of("layer2/b")]
        g_out_s = grad[lay.slice_of("exterior/w")]
        g_out_g = grad[lay.slice_of("direct/w")]

        g_out_s[:] = basis2.T @ c
        g_out_g[:] = feats.T @ c

        # Weighted backprop: fold the per-sample weights c into the deltas.
        d2c = activation_deriv(pre2) * self.out_s[None, :] * c[:, None]
        g_b2[:] = d2c.sum(axis=0)
        g_w2[:, :] = d2c.T @ u

        dzc = (d2c @ self.w2) * u * (1.0 - u) + self.skip_weight * c[:, None]
        g_mix[:, :] = dzc.T @ feats

        dfeatsc = dzc @ self.mix + self.out_g[None, :] * c[:, None]
        d1c = dfeatsc * activation_deriv(pre1)
        g_b1[:] = d1c.sum(axis=0)
        g_w1[:, :] = d1c.T @ X
        return grad

    def param_grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.input_dim,):
            raise ValueError(f"expected a point of shape ({self.input_dim},)")
        X = x[None, :]
        pre1, feats, z, u, pre2, basis2, _ = self._forward_parts(X)
        return self._backward(X, pre1, feats, z, u, pre2, basis2, np.ones(1))

    def loss_subgrad_cached(self, cache: dict, idx, targets) -> np.ndarray:
        X = cache["inputs"] if idx is None else cache["inputs"][idx]
        pre1, feats, z, u, pre2, basis2, out = self._forward_parts(X)
        c = np.sign(out - targets) / out.size
        return self._backward(X, pre1, feats, z, u, pre2, basis2, c)

    def config_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "densities": list(self.densities),
            "hidden_count": self.hidden_count,
            "skip_weight": self.skip_weight,
        }


# ---------------------------------------------------------------------------
# Construction and serialization
# ---------------------------------------------------------------------------


def _glorot(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    """Uniform draws on [-a, a] with a = sqrt(6 / (fan_in + fan_out))."""
    fan_out, fan_in = shape
    a = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape)


def init_model(kind: str, config: ModelConfig = ModelConfig(), rng=None):
    """Fresh model of the requested kind.

    Spline models start with every coefficient at zero.  The dense model
    randomises its affine layers (uniform Glorot) and zeroes all biases
    and both output layers; pass an rng for anything but the default
    seed.  Kind "kasam_pr" builds a plain spline composition; rehearsal
    is a training-time choice, not an architectural one.
    """
    if kind == "sam":
        return SamModel(config.input_dim, config.sam_densities)
    if kind in ("kasam", "kasam_pr"):
        return KasamModel(
            config.input_dim,
            config.kasam_densities,
            config.hidden_count,
            config.skip_weight,
        )
    if kind == "ann":
        if rng is None:
            rng = np.random.default_rng(0)
        m = AnnModel(
            config.input_dim,
            config.kasam_densities,
            config.hidden_count,
            config.skip_weight,
        )
        m.w1[:, :] = _glorot(rng, m.w1.shape)
        m.mix[:, :] = _glorot(rng, m.mix.shape)
        m.w2[:, :] = _glorot(rng, m.w2.shape)
        return m
    raise ValueError(f"unknown model kind: {kind!r}")


_KINDS = {"sam": SamModel, "kasam": KasamModel, "ann": AnnModel}


def clone_model(model):
    """Independent copy with identical parameters.

    Rebuilds from the config rather than deep-copying, because the view
    arrays into the flat parameter vector must stay views.
    """
    out = _KINDS[model.kind](**model.config_dict())
    out.set_param_vector(model.param_vector())
    return out


def model_to_dict(model) -> dict:
    return {
        "kind": model.kind,
        "config": model.config_dict(),
        "layout": [
            {"name": b.name, "offset": b.offset, "length": b.length, "density": b.density}
            for b in model.layout.blocks
        ],
        "params": [float(v) for v in model.param_vector()],
    }


def model_from_dict(data: dict):
    try:
        kind = data["kind"]
        config = data["config"]
        layout = data["layout"]
        params = np.asarray(data["params"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed model data: {exc}") from exc
    if kind not in _KINDS:
        raise ValueError(f"unknown model kind: {kind!r}")
    try:
        model = _KINDS[kind](**config)
    except TypeError as exc:
        raise ValueError(f"malformed model config: {exc}") from exc
    stored = [
        (b["name"], b["offset"], b["length"], b.get("density"))
        for b in layout
    ]
    actual = [(b.name, b.offset, b.length, b.density) for b in model.layout.blocks]
    if stored != actual:
        raise ValueError("stored layout does not match the reconstructed model")
    if params.shape != (model.n_params,):
        raise ValueError("stored parameter vector has the wrong length")
    model.set_param_vector(params)
    return model


def save_model(model, path) -> None:
    """Write a lossless JSON checkpoint (floats round-trip via repr)."""
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh)
        fh.write("\n")


def load_model(path):
    """Rebuild a model from a checkpoint; raises ValueError on bad data."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"checkpoint is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError("checkpoint must hold a JSON object")
    return model_from_dict(data)
