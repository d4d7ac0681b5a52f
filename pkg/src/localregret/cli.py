"""``localregret`` experiment runner.

    localregret run     --config run.cfg [--out DIR] [--plot] [--force] [--seed N]
    localregret verify  SUITE --config run.cfg [--out DIR] [--seed N]
    localregret compare --config a.cfg [--config b.cfg] [--out DIR] [--plot]

Exit codes: 0 success, 1 a verification check failed, 2 invalid
configuration or unmet precondition, 3 numeric failure during a run.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, bounds, regret
from .config import (
    ExperimentConfig,
    build_loss,
    build_schedule,
    build_set,
    build_window,
    load_config,
    with_seed,
)
from .exceptions import ConfigError, NumericError, PreconditionError
from .losses import DEFAULT_FD_STEP, finite_difference_gradient
from .optimizer import Trajectory, run

SUITES = ("lemma1", "theorem1", "scenario1", "scenario2", "scenario3", "gradients", "windows")
BOUND_HEADER = ("t", "w", "empirical", "bound", "ratio", "pass")
GRADIENT_POINTS = 1000
WINDOW_TOL = 1e-10

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    """Command-level refusal that maps to exit code 2."""


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def output_dir(arg: str | None) -> Path:
    out = Path(arg or os.environ.get("LOCALREGRET_OUT") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def execute(cfg: ExperimentConfig) -> Trajectory:
    return run(build_loss(cfg), build_set(cfg), build_schedule(cfg), np.array(cfg.x0), cfg.horizon)


def write_trajectory(path: Path, traj: Trajectory) -> None:
    d = traj.dim
    header = ["t", *(f"x_{i}" for i in range(d)), *(f"g_{i}" for i in range(d)), "eta", "loss"]
    rows = (
        (k + 1, *traj.xs[k], *traj.gs[k], traj.etas[k], traj.losses[k]) for k in range(len(traj))
    )
    write_csv(path, header, rows)


def write_series(path: Path, series: regret.RegretSeries) -> None:
    rows = zip(range(1, len(series) + 1), series.instantaneous, series.cumulative)
    write_csv(path, ("t", "instantaneous", "cumulative"), rows)


def meter_series(cfg: ExperimentConfig, traj: Trajectory, meter: str, extra: dict):
    """Compute one meter; scalar by-products go into ``extra`` for the summary."""
    window = build_window(cfg)
    if meter == "proposed_interior":
        return regret.proposed_regret_interior(traj, window)
    if meter == "proposed_directional":
        u = np.array(cfg.directional_u) if cfg.directional_u is not None else np.eye(cfg.dim)[0]
        return regret.proposed_regret_directional(traj, window, u)
    if meter == "hazan":
        return regret.hazan_local_regret(traj, traj.spec, cfg.window_w)
    if meter == "calibration":
        rng = np.random.default_rng(cfg.seed)
        series, gap = regret.calibration_series(traj, cfg.calibration_radius, rng)
        extra["calibration.gap"] = gap.value
        extra["calibration.exact"] = gap.exact
        return series
    if meter == "standard":
        series, result = regret.standard_regret_series(traj, traj.spec, cfg.standard_grid)
        extra["standard.regret"] = result.value
        extra["standard.hindsight_min"] = result.hindsight_min
        extra["standard.grid"] = result.grid
        extra["standard.resolution"] = max(result.resolution)
        return series
    raise ConfigError(f"unknown meter {meter!r}", key="meters")


def fit_summary(series: regret.RegretSeries) -> dict:
    out = {f"{series.meter}.total": series.total}
    try:
        fit = analysis.growth_exponent(series)
        out[f"{series.meter}.exponent"] = fit.exponent
        out[f"{series.meter}.r2"] = fit.r_squared
        out[f"{series.meter}.log_r2"] = analysis.log_fit_quality(series)
    except PreconditionError:
        pass  # too short, or nonpositive on the tail
    return out


def write_summary(path: Path, items: dict) -> None:
    with open(path, "w", newline="\n") as f:
        for key, value in items.items():
            text = value if isinstance(value, str) else fmt(value)
            f.write(f"{key}: {text}\n")


def plot_series(path: Path, curves: dict, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "localregret"
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, values in curves.items():
        ax.plot(np.arange(1, len(values) + 1), values, label=label)
    ax.set_xlabel("T")
    ax.set_ylabel("cumulative regret")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_run(cfg: ExperimentConfig, out: Path, force: bool = False, plot: bool = False) -> int:
    traj_path = out / f"{cfg.run_id}.trajectory.csv"
    if traj_path.exists() and not force:
        raise UsageError(f"run_id '{cfg.run_id}' already has outputs in {out}; pass --force to overwrite")
    traj = execute(cfg)
    c = bounds.estimate_constants(traj)
    summary = {
        "run_id": cfg.run_id,
        "T": len(traj),
        "dim": traj.dim,
        "set": cfg.set_kind,
        "schedule": cfg.schedule_kind,
        "eta": cfg.schedule_eta,
        "window": cfg.window_kind if cfg.window_kind == "growing" else f"constant {cfg.window_w}",
        "M": c.M,
        "M_source": c.M_source,
        "G": c.G,
        "G_source": c.G_source,
    }
    extra: dict = {}
    outputs = {}
    for meter in cfg.meters:
        series = meter_series(cfg, traj, meter, extra)
        outputs[meter] = series
        summary.update(fit_summary(series))
    summary.update(extra)
    if cfg.scenario is not None:
        window = build_window(cfg)
        try:
            series, values, _ = bounds.check_scenario(traj, cfg.scenario, window, c)
            report = analysis.bound_report(series, values)
            summary[f"scenario{cfg.scenario}.bound"] = float(values[-1])
            summary[f"scenario{cfg.scenario}.max_ratio"] = report.max_ratio
            summary[f"scenario{cfg.scenario}.pass"] = report.passed
        except bounds.BoundPreconditionError as exc:
            summary[f"scenario{cfg.scenario}.skipped"] = str(exc)

    write_trajectory(traj_path, traj)
    for meter, series in outputs.items():
        write_series(out / f"{cfg.run_id}.{meter}.csv", series)
    write_summary(out / f"{cfg.run_id}.summary", summary)
    if plot and outputs:
        plot_series(
            out / f"{cfg.run_id}.regret.svg",
            {m: s.cumulative for m, s in outputs.items()},
            cfg.run_id,
        )
    return EXIT_OK


def _bound_rows(series, values, window) -> list[bounds.BoundRow]:
    report = analysis.bound_report(series, values)
    rows = []
    for k in range(len(series)):
        t = k + 1
        rows.append(
            bounds.BoundRow(
                t, window.width(t), float(series.cumulative[k]), float(values[k]),
                float(report.ratio[k]), bool(report.ratio[k] <= 1 + analysis.BOUND_TOL),
            )
        )
    return rows


def _gradient_rows(traj: Trajectory, n: int, rng: np.random.Generator):
    spec, K = traj.spec, traj.set
    if K.bounded:
        points = K.sample(rng, n)
    else:
        points = traj.xs[rng.integers(0, len(traj), n)] + rng.standard_normal((n, traj.dim))
    times = rng.integers(1, len(traj) + 1, n)
    for k in range(n):
        t, x = int(times[k]), points[k]
        g = spec.gradient(t, x)
        fd = finite_difference_gradient(spec, t, x, DEFAULT_FD_STEP)
        err = float(np.max(np.abs(g - fd)))
        tol = 1e-5 * (1.0 + float(np.max(np.abs(g))))
        yield t, k, err, tol, err <= tol


def _window_rows(traj: Trajectory, window):
    incremental = regret.windowed_gradient_averages(traj, window)
    # Rounding in the running sum is relative to every vector it has absorbed,
    # so the tolerance scales with the largest gradient seen so far.
    scale = np.maximum(1.0, np.maximum.accumulate(np.linalg.norm(traj.gs, axis=1)))
    for k in range(len(traj)):
        t = k + 1
        naive = regret.windowed_gradient_average(traj, t, window)
        diff = float(np.linalg.norm(naive - incremental[k]))
        yield t, float(np.linalg.norm(naive)), float(np.linalg.norm(incremental[k])), diff, diff <= WINDOW_TOL * scale[k]


def cmd_verify(cfg: ExperimentConfig, suite: str, out: Path) -> int:
    if suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    traj = execute(cfg)
    rng = np.random.default_rng(cfg.seed)
    path = out / f"{cfg.run_id}.verify.{suite}.csv"
    try:
        if suite == "lemma1":
            c = bounds.estimate_constants(traj, rng=rng)
            rows = bounds.check_lemma1(traj, c, cfg.verify_draws, rng)
            header = ("t", "draw", "empirical", "bound", "ratio", "pass")
            table = [(r.t, r.w, r.empirical, r.bound, r.ratio, r.passed) for r in rows]
        elif suite == "theorem1":
            c = bounds.estimate_constants(traj, rng=rng)
            rows = bounds.check_theorem1(traj, c)
            header = BOUND_HEADER
            table = [(r.t, r.w, r.empirical, r.bound, r.ratio, r.passed) for r in rows]
        elif suite.startswith("scenario"):
            window = build_window(cfg)
            series, values, _ = bounds.check_scenario(traj, int(suite[-1]), window)
            rows = _bound_rows(series, values, window)
            header = BOUND_HEADER
            table = [(r.t, r.w, r.empirical, r.bound, r.ratio, r.passed) for r in rows]
        elif suite == "gradients":
            header = ("t", "point", "max_abs_error", "tolerance", "pass")
            table = list(_gradient_rows(traj, min(cfg.verify_draws, GRADIENT_POINTS), rng))
        else:
            header = ("t", "naive_norm", "incremental_norm", "abs_diff", "pass")
            table = list(_window_rows(traj, build_window(cfg)))
    except bounds.BoundPreconditionError as exc:
        raise UsageError(f"verify {suite}: {exc}") from None
    write_csv(path, header, table)
    failed = sum(1 for row in table if not row[-1])
    print(f"verify {suite}: {len(table) - failed}/{len(table)} checks passed -> {path}")
    return EXIT_OK if failed == 0 else EXIT_CHECK_FAILED


def cmd_compare(cfg_a: ExperimentConfig, cfg_b: ExperimentConfig, out: Path, plot: bool = False) -> int:
    """Hazan meter (window of A) and proposed meter (window of B) on A's run."""
    if cfg_a.horizon != cfg_b.horizon:
        raise UsageError(f"horizons differ: {cfg_a.horizon} vs {cfg_b.horizon}")
    loss_keys = ("loss_kind", "loss_a", "loss_b", "loss_drift", "loss_c0", "loss_centers", "loss_period")
    if any(getattr(cfg_a, k) != getattr(cfg_b, k) for k in loss_keys):
        raise UsageError("configs must share the same loss family")
    if cfg_a.window_kind != "constant":
        raise UsageError("the hazan meter needs a constant window (window.kind = constant in the first config)")
    traj = execute(cfg_a)
    hazan = regret.hazan_local_regret(traj, traj.spec, cfg_a.window_w)
    try:
        proposed = regret.proposed_regret_interior(traj, build_window(cfg_b))
    except PreconditionError as exc:
        raise UsageError(f"compare: {exc}") from None
    rows = zip(
        range(1, len(traj) + 1),
        hazan.instantaneous, hazan.cumulative,
        proposed.instantaneous, proposed.cumulative,
    )
    header = ("t", "hazan_instantaneous", "hazan_cumulative", "proposed_instantaneous", "proposed_cumulative")
    write_csv(out / f"{cfg_a.run_id}.compare.csv", header, rows)
    if plot:
        plot_series(
            out / f"{cfg_a.run_id}.compare.svg",
            {"hazan": hazan.cumulative, "proposed": proposed.cumulative},
            cfg_a.run_id,
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="localregret", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, multi=False):
        if multi:
            p.add_argument("--config", action="append", required=True, help="config file (repeatable)")
        else:
            p.add_argument("--config", required=True, help="config file")
        p.add_argument("--out", help="output directory (default: $LOCALREGRET_OUT or .)")
        p.add_argument("--seed", type=int, help="override the config seed")

    p_run = sub.add_parser("run", help="run OGD and write trajectory, meters and summary")
    common(p_run)
    p_run.add_argument("--plot", action="store_true", help="also write an SVG of cumulative regret")
    p_run.add_argument("--force", action="store_true", help="overwrite outputs of an existing run_id")

    p_verify = sub.add_parser("verify", help="run a verification suite")
    p_verify.add_argument("suite", choices=SUITES)
    common(p_verify)

    p_cmp = sub.add_parser("compare", help="Hazan vs proposed regret on one run")
    common(p_cmp, multi=True)
    p_cmp.add_argument("--plot", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = output_dir(args.out)
        if args.command == "run":
            cfg = with_seed(load_config(args.config), args.seed)
            return cmd_run(cfg, out, force=args.force, plot=args.plot)
        if args.command == "verify":
            cfg = with_seed(load_config(args.config), args.seed)
            return cmd_verify(cfg, args.suite, out)
        if len(args.config) > 2:
            raise UsageError("compare takes one or two configs")
        cfgs = [with_seed(load_config(p), args.seed) for p in args.config]
        return cmd_compare(cfgs[0], cfgs[-1], out, plot=args.plot)
    except (ConfigError, UsageError, PreconditionError) as exc:
        print(f"localregret: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"localregret: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
