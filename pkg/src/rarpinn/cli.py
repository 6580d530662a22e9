"""Command-line batch runs: generate, train-forward, train-inverse, evaluate.

Each run owns one output directory and writes delimited-text artifacts, a
``summary.json`` and a ``manifest.json`` echoing the expanded settings.
"""

import argparse
import json
import logging
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import io
from .config import PRESETS, ExperimentConfig, build, expand
from .errors import ConfigurationError, NumericError, RarPinnError, UsageError
from .inverse import InverseExperiment, split_dataset, split_seed, train_inverse
from .net import forward_values
from .oracle import GridSpec, field_columns, sample_grid
from .training import ForwardExperiment, TrainingHistory, export_residual_field, train_forward

log = logging.getLogger("rarpinn")


# ---------------------------------------------------------------------------
# ingest helpers
# ---------------------------------------------------------------------------


def grid_of(rows: np.ndarray) -> tuple[GridSpec, np.ndarray]:
    """Recover the tensor grid of a dataset and its fields as (nt, nx, 4)."""
    xs = np.unique(rows[:, 0])
    ts = np.unique(rows[:, 1])
    if len(xs) * len(ts) != len(rows) or len(xs) < 2 or len(ts) < 2:
        raise UsageError("dataset is not a complete tensor grid in x and t")
    ix = np.searchsorted(xs, rows[:, 0])
    it = np.searchsorted(ts, rows[:, 1])
    fields = np.full((len(ts), len(xs), 4), np.nan)
    fields[it, ix] = rows[:, 2:]
    if np.isnan(fields).any():
        raise UsageError("dataset grid has duplicate or missing nodes")
    grid = GridSpec(xs[0], xs[-1], ts[0], ts[-1], len(xs), len(ts))
    return grid, fields


def interpolated_solution(rows: np.ndarray):
    """Field function that reproduces a gridded dataset at its nodes.

    Off-node values are bilinear; training only samples initial and boundary
    supervision at grid nodes.
    """
    grid, fields = grid_of(rows)
    interp = RegularGridInterpolator((grid.t, grid.x), fields, method="linear")

    def solution(x, t):
        x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
        f = interp(np.column_stack([t.ravel(), x.ravel()]))
        h1 = (f[:, 0] + 1j * f[:, 1]).reshape(x.shape)
        h2 = (f[:, 2] + 1j * f[:, 3]).reshape(x.shape)
        return h1, h2

    return solution, grid


def _reference_rows(cfg: ExperimentConfig) -> tuple[np.ndarray, GridSpec]:
    """Grid dataset from the ingest file, or sampled from the oracle."""
    if cfg.dataset is not None:
        rows = io.read_dataset(cfg.dataset)
        grid, _ = grid_of(rows)
        return rows, grid
    return sample_grid(cfg.solution, cfg.grid), cfg.grid


# ---------------------------------------------------------------------------
# modes
# ---------------------------------------------------------------------------


def _field_outputs(out: Path, X: np.ndarray, pred: np.ndarray, exact: np.ndarray | None) -> dict:
    io.write_dataset(out / "prediction.csv", np.column_stack([X, pred]))
    summary = {}
    if exact is not None:
        mp, me = io.magnitudes(pred), io.magnitudes(exact)
        io.write_table(out / "magnitude.csv", io.MAGNITUDE_HEADER, np.column_stack([X, mp, me, np.abs(mp - me)]))
        e1, e2 = io.relative_l2(pred, exact)
        summary["relative_l2"] = {"h1": e1, "h2": e2}
    return summary


def _write_history(out: Path, history: TrainingHistory):
    io.write_losses(out / "losses.csv", history.records)
    io.write_table(
        out / "rar.csv", ("round", "err", "added", "pool_max"),
        [(e.round, e.err, e.added, e.pool_max) for e in history.rar_events],
    )


def run_generate(cfg: ExperimentConfig, out: Path) -> dict:
    rows = sample_grid(cfg.solution, cfg.grid)
    io.write_dataset(out / "dataset.csv", rows)
    return {"rows": len(rows), "dt": cfg.grid.dt, "dx": cfg.grid.dx}


def run_train_forward(cfg: ExperimentConfig, out: Path, say) -> dict:
    if cfg.oracle_spec is not None:
        solution, grid, exact_rows = cfg.solution, cfg.grid, None
    else:
        exact_rows = io.read_dataset(cfg.dataset)
        solution, grid = interpolated_solution(exact_rows)
    exp = ForwardExperiment(
        solution=solution,
        coeffs=cfg.coeffs,
        domain=cfg.domain,
        hidden_layers=cfg.shape.hidden_layers,
        hidden_width=cfg.shape.hidden_width,
        n0=cfg.n0,
        nb=cfg.nb,
        nf=cfg.nf,
        nx_grid=grid.nx,
        nt_grid=grid.nt,
        boundary_mode=cfg.boundary_mode,
        rar=cfg.rar,
        tpinn=cfg.tpinn,
        tpinn_nf=cfg.tpinn_nf,
        adam=cfg.optimizer.adam,
        lbfgs=cfg.optimizer.lbfgs,
        normalize_inputs=cfg.shape.input_bounds is not None,
        seed=cfg.seed,
    )
    history = TrainingHistory()
    try:
        result = train_forward(exp, say, history)
    finally:
        _write_history(out, history)
    data = result.data
    io.write_table(out / "tau0.csv", io.POINTS_HEADER, data.x0)
    io.write_table(out / "taub.csv", io.POINTS_HEADER, data.xb)
    io.write_table(out / "tauf.csv", io.POINTS_HEADER, data.xf)
    np.save(out / "params.npy", result.params)

    X = grid.points()
    pred = forward_values(result.params, result.shape, X)
    exact = field_columns(solution, X) if exact_rows is None else _align(exact_rows, X)
    if exact_rows is None:
        io.write_dataset(out / "exact.csv", np.column_stack([X, exact]))
    summary = _field_outputs(out, X, pred, exact)
    scores = export_residual_field(result.params, result.shape, grid, cfg.coeffs)
    io.write_table(out / "residual.csv", io.RESIDUAL_HEADER, np.column_stack([X, scores.ravel()]))
    final = history.records[-1] if history.records else None
    summary.update({
        "mode": "tpinn" if cfg.tpinn or cfg.rar is None else "rar",
        "n_collocation": history.final_nf,
        "lbfgs_status": history.lbfgs_status,
        "rar_rounds": max(len(history.rar_events) - 1, 0),
        "pool_max_before": history.pool_max_before,
        "pool_max_after": history.pool_max_after,
        "residual_max": float(scores.max()),
        "final_loss": None if final is None else dict(zip(io.LOSS_HEADER[2:], final[2:])),
    })
    return summary


def _align(rows: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Fields of ``rows`` reordered to the point order of ``X``."""
    grid, fields = grid_of(rows)
    ix = np.searchsorted(grid.x, X[:, 0])
    it = np.searchsorted(grid.t, X[:, 1])
    return fields[it, ix]


def run_train_inverse(cfg: ExperimentConfig, out: Path, say) -> dict:
    rows, grid = _reference_rows(cfg)
    dataset, pool = split_dataset(rows, cfg.n_u, split_seed(cfg.seed))
    exp = InverseExperiment(
        dataset=dataset,
        shape=cfg.shape,
        noise_level=cfg.noise_level,
        lambda_init=cfg.lambda_init,
        optimizer=cfg.optimizer,
        rar=cfg.inverse_rar,
        pool=pool,
        seed=cfg.seed,
    )
    history = TrainingHistory()
    try:
        report = train_inverse(exp, cfg.truth, say, history)
    finally:
        _write_history(out, history)
    np.save(out / "params.npy", report.params)
    (out / "identified.txt").write_text(report.equation() + "\n")
    X = grid.points()
    pred = forward_values(report.params, cfg.shape, X)
    summary = _field_outputs(out, X, pred, _align(rows, X))
    summary["identification"] = {
        "lambda_hat": list(report.lambda_hat.as_array()),
        "truth": list(cfg.truth.as_array()),
        "errors": list(report.errors),
        "noise_level": report.noise_level,
        "n_u": report.n_u,
        "n_total": report.n_total,
        "status": report.status,
        "mse_p": report.loss.mse_p,
        "mse_f": report.loss.mse_f,
        "equation": report.equation(),
    }
    return summary


def run_evaluate(cfg: ExperimentConfig, out: Path) -> dict:
    pred_rows = io.read_dataset(cfg.prediction)
    X = pred_rows[:, :2]
    if cfg.dataset is not None:
        exact_rows = io.read_dataset(cfg.dataset)
        if exact_rows.shape != pred_rows.shape or not np.array_equal(exact_rows[:, :2], X):
            raise UsageError(f"{cfg.prediction} and {cfg.dataset} do not list the same (x, t) points")
        exact = exact_rows[:, 2:]
    else:
        exact = field_columns(cfg.solution, X)
    return _field_outputs(out, X, pred_rows[:, 2:], exact) | {"points": len(X)}


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def run(cfg: ExperimentConfig, out_dir, single_thread: bool = False, progress=None) -> dict:
    """Execute one configured run, writing its bundle under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    say = progress or log.info
    seeds = {"seed": cfg.seed}
    notes = {"grid_dt": cfg.grid.dt, "grid_dx": cfg.grid.dx}
    io.write_manifest(out / "manifest.json", cfg.settings, seeds, {"status": "running", "notes": notes})
    limiter = _single_thread() if single_thread else nullcontext()
    status = "failed"
    try:
        with limiter:
            if cfg.mode == "generate":
                summary = run_generate(cfg, out)
            elif cfg.mode == "train-forward":
                summary = run_train_forward(cfg, out, say)
            elif cfg.mode == "train-inverse":
                summary = run_train_inverse(cfg, out, say)
            else:
                summary = run_evaluate(cfg, out)
        status = "ok"
    finally:
        io.write_manifest(
            out / "manifest.json", cfg.settings, seeds,
            {"status": status, "single_thread": single_thread, "notes": notes},
        )
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def _single_thread():
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=1)


def parse_args(argv=None) -> argparse.Namespace:
    p = argparse.ArgumentParser(prog="rarpinn", description=__doc__.splitlines()[0])
    p.add_argument("mode", choices=("generate", "train-forward", "train-inverse", "evaluate"))
    p.add_argument("--config", type=Path, help="INI file with per-section settings")
    p.add_argument("--preset", choices=sorted(PRESETS), help="named parameter preset")
    p.add_argument("--seed", type=int, help="master seed for all random streams")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--single-thread", action="store_true", help="limit BLAS to one thread for bit-reproducible runs")
    p.add_argument("-q", "--quiet", action="store_true", help="suppress progress messages")
    return p.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s", stream=sys.stderr)
    overrides = {"experiment": {"mode": args.mode}}
    if args.seed is not None:
        overrides["experiment"]["seed"] = str(args.seed)
    try:
        cfg = build(expand(args.preset, args.config, overrides))
    except RarPinnError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        summary = run(cfg, args.out, args.single_thread)
    except NumericError as exc:
        print(f"optimizer failure: {exc}; partial results in {args.out}", file=sys.stderr)
        return 3
    except (UsageError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    json.dump(summary, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
