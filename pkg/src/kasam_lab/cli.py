"""Command-line harness and file formats.

Four subcommands: ``run`` executes seeded studies and writes their
artifacts, ``stratify-demo`` shows that untouched spline coefficients
stay exactly zero, ``gridsample`` renders a checkpoint to a portable
greymap, and ``properties`` checks the gradient-structure guarantees.
All outputs are plain text (CSV, JSON, ASCII PGM) and byte-identical
across reruns of the same configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .experiments import (
    EXPERIMENTS,
    ExperimentSpec,
    Grid,
    StudySummary,
    function_grid,
    run_study,
)
from .models import ModelConfig, SamModel, load_model, save_model
from .splines import design_matrix, make_basis
from .training import Dataset, TrainConfig, TrainHistory, train

__all__ = [
    "RunConfig",
    "main",
    "property_report",
    "write_grid_pgm",
    "write_history_csv",
    "write_summary_json",
]

ENV_OUT_DIR = "KASAM_LAB_OUT"
CLI_KINDS = {"sam": "sam", "ann": "ann", "kasam": "kasam", "kasam-pr": "kasam_pr"}


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------


def write_history_csv(history: TrainHistory, path) -> None:
    """Epoch-indexed error curves; row zero is the untrained model."""
    lines = ["epoch,train_mae,val_mae"]
    for epoch, (tr, va) in enumerate(zip(history.train_mae, history.val_mae)):
        lines.append(f"{epoch},{tr:.17g},{va:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def _json_float(v: float):
    # JSON has no spelling for non-finite numbers; represent them as null.
    return v if math.isfinite(v) else None


def write_summary_json(summary: StudySummary, path) -> None:
    """Study aggregate: per-model stats plus pairwise Welch tests."""
    doc = {
        "experiment": summary.experiment_id,
        "trials": summary.trials,
        "models": [
            {
                "model": s.kind,
                "task1_mae_mean": _json_float(s.task1_mean),
                "task1_mae_std": _json_float(s.task1_std),
                "task2_mae_mean": _json_float(s.task2_mean),
                "task2_mae_std": _json_float(s.task2_std),
                "trials": s.trials,
                "degenerate_std": s.degenerate_std,
            }
            for s in summary.stats
        ],
        "pairwise": [
            {
                "model_a": p.kind_a,
                "model_b": p.kind_b,
                "task": p.task,
                "t": _json_float(p.t),
                "df": _json_float(p.df),
                "p": _json_float(p.p),
            }
            for p in summary.pairwise
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def write_grid_pgm(grid: Grid, path) -> None:
    """ASCII greymap of the grid, row zero first, plus a JSON sidecar.

    Pixels linearly rescale [vmin, vmax] onto [0, 65535]; a flat grid
    renders as all zeros.  The sidecar records the true value range so
    the image stays quantitative.
    """
    lo, hi = grid.vmin, grid.vmax
    if hi > lo:
        pixels = np.rint((grid.values - lo) / (hi - lo) * 65535.0).astype(np.int64)
    else:
        pixels = np.zeros_like(grid.values, dtype=np.int64)
    lines = ["P2", f"{grid.resolution} {grid.resolution}", "65535"]
    lines.extend(" ".join(str(v) for v in row) for row in pixels)
    Path(path).write_text("\n".join(lines) + "\n")
    sidecar = {
        "min": lo,
        "max": hi,
        "resolution": grid.resolution,
        "domain": [list(pair) for pair in grid.domain],
    }
    with open(f"{path}.json", "w") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Property suites
# ---------------------------------------------------------------------------


def property_report(points: int = 10000, seed: int = 0) -> list[tuple[str, bool, str]]:
    """Check the gradient-structure guarantees on freshly sampled points.

    Returns (name, passed, detail) rows for: partition of unity across
    densities, per-block gradient sparsity, the per-variable L1 norm
    bound with its exact on-interval value, and exact distal
    orthogonality at density 32.
    """
    rng = np.random.default_rng(seed)
    report = []

    worst = 0.0
    xs = np.linspace(0.0, 1.0, max(points, 10001))
    for density in [4, 8, 16, 32]:
        sums = design_matrix(make_basis(density), xs).sum(axis=1)
        worst = max(worst, float(np.abs(sums - 1.0).max()))
    report.append(
        ("partition-of-unity", worst < 1e-12, f"max |sum - 1| = {worst:.3e}")
    )

    multi = SamModel(2, (4, 8, 16, 32))
    X = rng.uniform(0.0, 1.0, size=(points, 2))
    feats = multi.precompute(X)["features"]
    max_nnz = 0
    for block in multi.layout.blocks:
        sl = multi.layout.slice_of(block.name)
        max_nnz = max(max_nnz, int(np.count_nonzero(feats[:, sl], axis=1).max()))
    report.append(
        ("gradient-sparsity", max_nnz <= 4, f"max nonzeros per block = {max_nnz}")
    )

    single = SamModel(2, (32,))
    Xs = rng.uniform(0.0, 1.0, size=(points, 2))
    rows = single.precompute(Xs)["features"]
    per_var = np.abs(rows).reshape(points, 2, 32).sum(axis=2)
    bound_ok = float(per_var.max()) <= 8.0 / 3.0
    exact_dev = float(np.abs(per_var - 1.0).max())
    report.append(
        (
            "gradient-l1",
            bound_ok and exact_dev < 1e-12,
            f"max per-variable L1 = {per_var.max():.6f}, |L1 - 1| = {exact_dev:.3e}",
        )
    )

    h = 1.0 / 29.0
    A = rng.uniform(0.0, 1.0, size=(points, 2))
    B = rng.uniform(0.0, 1.0, size=(points, 2))
    ga = single.precompute(A)["features"]
    gb = single.precompute(B)["features"]
    dots = np.einsum("ij,ij->i", ga, gb)
    distal = np.abs(A - B).min(axis=1) > 4.0 * h
    n_far = int(distal.sum())
    worst_dot = float(np.abs(dots[distal]).max()) if n_far else math.nan
    ok = n_far > 0 and bool(np.all(dots[distal] == 0.0))
    report.append(
        (
            "distal-orthogonality",
            ok,
            f"{n_far} separated pairs, max |dot| = {worst_dot:.3e}",
        )
    )
    return report


# ---------------------------------------------------------------------------
# run subcommand
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Everything the run subcommand needs, resolved from flags."""

    experiment: str
    models: tuple[str, ...]
    trials: int
    base_seed: int
    out_dir: Path
    skip_weight: float = 0.1
    rho: float = 0.5
    densities: tuple[int, ...] = (4, 8, 16, 32)
    task1_epochs: int | None = None
    task2_epochs: int | None = None
    noise_std: float | None = None


def _resolved_spec(cfg: RunConfig) -> ExperimentSpec:
    spec = EXPERIMENTS[cfg.experiment]
    kwargs = {}
    if cfg.task1_epochs is not None:
        kwargs["task1_epochs"] = cfg.task1_epochs
    if cfg.task2_epochs is not None:
        kwargs["task2_epochs"] = cfg.task2_epochs
    if cfg.noise_std is not None:
        kwargs["noise_std"] = cfg.noise_std
    if kwargs:
        spec = replace(spec, **kwargs)
    return spec


def run_command(cfg: RunConfig) -> int:
    spec = _resolved_spec(cfg)
    model_config = ModelConfig(
        kasam_densities=cfg.densities, skip_weight=cfg.skip_weight
    )
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)

    def on_trial(result, index):
        stem = f"{spec.experiment_id}_{result.kind}_trial{index:03d}"
        write_history_csv(result.task1_history, out / f"{stem}_task1.csv")
        write_history_csv(result.task2_history, out / f"{stem}_task2.csv")
        if index == 0:
            base = f"{spec.experiment_id}_{result.kind}"
            if result.interference is not None:
                write_grid_pgm(result.interference, out / f"{base}_interference.pgm")
            save_model(result.model_after_task1, out / f"{base}_task1.model.json")
            save_model(result.model_after_task2, out / f"{base}_task2.model.json")
        print(
            f"{spec.experiment_id} {result.kind} trial {index}: "
            f"task1 {result.final_task1_mae:.4f} task2 {result.final_task2_mae:.4f}"
        )

    summary = run_study(
        spec,
        cfg.models,
        trials=cfg.trials,
        base_seed=cfg.base_seed,
        on_trial=on_trial,
        model_config=model_config,
        rho=cfg.rho,
    )
    summary_path = out / f"{spec.experiment_id}_summary.json"
    write_summary_json(summary, summary_path)
    for s in summary.stats:
        print(
            f"{spec.experiment_id} {s.kind}: task1 {s.task1_mean:.4f} ({s.task1_std:.4f}) "
            f"task2 {s.task2_mean:.4f} ({s.task2_std:.4f})"
        )
    print(f"summary written to {summary_path}")
    return 0


# ---------------------------------------------------------------------------
# stratify-demo subcommand
# ---------------------------------------------------------------------------


def stratify_demo_command(
    density: int, n_samples: int, seed: int, epochs: int, out_path: Path
) -> int:
    rng = np.random.default_rng(seed)
    xs = rng.uniform(0.0, 1.0, size=n_samples)
    ys = np.sin(2.0 * np.pi * xs)
    ds = Dataset(xs[:, None], ys, tag="sine-samples", domain=((0.0, 1.0),))

    model = SamModel(1, (density,))
    cfg = TrainConfig(
        epochs=epochs, batch_size=n_samples, shuffle_seed=seed
    )
    hist = train(model, ds, ds, cfg)

    untouched = int(np.sum(model.param_vector() == 0.0))
    grid = np.linspace(0.0, 1.0, 1001)
    curve = model.forward_batch(grid[:, None])
    lines = ["x,value"]
    lines.extend(f"{x:.17g},{v:.17g}" for x, v in zip(grid, curve))
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text("\n".join(lines) + "\n")

    print(
        f"fitted {n_samples} sine samples with density {density}: "
        f"final MAE {hist.train_mae[-1]:.4f}, "
        f"{untouched} of {model.n_params} coefficients untouched (exactly zero)"
    )
    print(f"curve written to {out_path}")
    return 0


# ---------------------------------------------------------------------------
# gridsample subcommand
# ---------------------------------------------------------------------------


def gridsample_command(checkpoint: Path, out_path: Path, resolution: int) -> int:
    try:
        model = load_model(checkpoint)
        grid = function_grid(model, resolution=resolution)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_grid_pgm(grid, out_path)
    print(f"grid written to {out_path}")
    return 0


# ---------------------------------------------------------------------------
# properties subcommand
# ---------------------------------------------------------------------------


def properties_command(points: int, seed: int) -> int:
    report = property_report(points=points, seed=seed)
    all_ok = True
    for name, ok, detail in report:
        status = "PASS" if ok else "FAIL"
        all_ok &= ok
        print(f"[{status}] {name}: {detail}")
    return 0 if all_ok else 1


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _default_out_dir() -> str:
    return os.environ.get(ENV_OUT_DIR, "out")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _density_list(text: str) -> tuple[int, ...]:
    try:
        densities = tuple(int(tok) for tok in text.split(",") if tok)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad density list: {text!r}") from exc
    if not densities or any(k < 4 for k in densities):
        raise argparse.ArgumentTypeError("densities must all be at least 4")
    return densities


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kasam-lab",
        description="Spline additive models and two-task forgetting studies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a seeded multi-trial study")
    run_p.add_argument("--experiment", required=True, choices=sorted(EXPERIMENTS))
    run_p.add_argument(
        "--models",
        default="sam,ann,kasam,kasam-pr",
        help="comma-separated subset of: sam, ann, kasam, kasam-pr",
    )
    run_p.add_argument("--trials", type=_positive_int, default=30)
    run_p.add_argument("--seed", type=int, default=0)
    run_p.add_argument("--out", default=None, help=f"output directory (default ${ENV_OUT_DIR} or ./out)")
    run_p.add_argument("--lambda", dest="skip_weight", type=float, default=0.1,
                       help="constant skip weight in the composed models")
    run_p.add_argument("--rho", type=float, default=0.5,
                       help="new-task probability in the rehearsal mix")
    run_p.add_argument("--densities", type=_density_list, default=(4, 8, 16, 32),
                       help="spline densities of the composed stacks")
    run_p.add_argument("--epochs-task1", type=int, default=None)
    run_p.add_argument("--epochs-task2", type=int, default=None)
    run_p.add_argument("--noise-std", type=float, default=None)

    strat_p = sub.add_parser(
        "stratify-demo",
        help="fit a zero-initialised 1-D spline to a few sine samples",
    )
    strat_p.add_argument("--density", type=_positive_int, default=32)
    strat_p.add_argument("--points", type=_positive_int, default=10)
    strat_p.add_argument("--seed", type=int, default=0)
    strat_p.add_argument("--epochs", type=_positive_int, default=2000)
    strat_p.add_argument("--out", default=None, help="output CSV path")

    grid_p = sub.add_parser("gridsample", help="render a checkpoint on the unit square")
    grid_p.add_argument("--checkpoint", required=True)
    grid_p.add_argument("--resolution", type=_positive_int, default=256)
    grid_p.add_argument("--out", default=None, help="output PGM path")

    prop_p = sub.add_parser("properties", help="check the gradient-structure guarantees")
    prop_p.add_argument("--points", type=_positive_int, default=10000)
    prop_p.add_argument("--seed", type=int, default=0)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "run":
        tokens = [tok.strip() for tok in args.models.split(",") if tok.strip()]
        unknown = [tok for tok in tokens if tok not in CLI_KINDS]
        if unknown or not tokens:
            parser.error(f"unknown model kinds: {', '.join(unknown) or '(none given)'}")
        kinds = tuple(CLI_KINDS[tok] for tok in tokens)
        if len(set(kinds)) != len(kinds):
            parser.error("duplicate model kinds")
        if not 0.0 <= args.rho <= 1.0:
            parser.error("--rho must lie in [0, 1]")
        if args.noise_std is not None and args.noise_std < 0.0:
            parser.error("--noise-std cannot be negative")
        if (args.epochs_task1 is not None and args.epochs_task1 < 0) or (
            args.epochs_task2 is not None and args.epochs_task2 < 0
        ):
            parser.error("epoch counts cannot be negative")
        cfg = RunConfig(
            experiment=args.experiment,
            models=kinds,
            trials=args.trials,
            base_seed=args.seed,
            out_dir=Path(args.out if args.out is not None else _default_out_dir()),
            skip_weight=args.skip_weight,
            rho=args.rho,
            densities=args.densities,
            task1_epochs=args.epochs_task1,
            task2_epochs=args.epochs_task2,
            noise_std=args.noise_std,
        )
        return run_command(cfg)

    if args.command == "stratify-demo":
        if args.density < 4:
            parser.error("--density must be at least 4")
        out_dir = Path(_default_out_dir())
        out_path = Path(args.out) if args.out is not None else out_dir / "stratify_demo.csv"
        return stratify_demo_command(
            density=args.density,
            n_samples=args.points,
            seed=args.seed,
            epochs=args.epochs,
            out_path=out_path,
        )

    if args.command == "gridsample":
        out_dir = Path(_default_out_dir())
        out_path = Path(args.out) if args.out is not None else out_dir / "gridsample.pgm"
        return gridsample_command(
            checkpoint=Path(args.checkpoint),
            out_path=out_path,
            resolution=args.resolution,
        )

    if args.command == "properties":
        return properties_command(points=args.points, seed=args.seed)

    parser.error(f"unknown command {args.command!r}")
    return 2


if __name__ == "__main__":
    sys.exit(main())
