"""Command-line interface.

Subcommands: ``plot`` (contour + dots + optional bootstrap band, to SVG
and JSON), ``bias`` (one number), ``calibrate`` (dots only),
``simulate`` (synthetic data with known truth), ``fit`` (reference
models: crossfit predictions and leave-group-out files).

Exit codes: 0 on success, 2 for input and schema problems, 3 when the
data is numerically degenerate (zero residuals, missing arm, target
out of reach of any parameter).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__, io
from .bootstrap import BootstrapConfig, bootstrap_band
from .calibration import calibrate_groups
from .core import (
    Estimand,
    SensitivityParams,
    bias,
    bias_contour,
    default_alpha_grid,
    delta_from_r2,
    tau_hat,
)
from .errors import (
    AustenError,
    DegenerateDataError,
    InputValidationError,
    NumericalError,
)
from .plot import PlotLabels, build_plot_data, render_svg
from .reference_models import (
    FitConfig,
    GroupSpec,
    crossfit_predictions,
    leave_group_out_predictions,
)
from .simulator import (
    cancellation_scenario,
    constant_g_config,
    default_config,
    monotone_scenario,
    simulate,
)

PLOT_JSON = "austen_plot.json"
PLOT_SVG = "austen_plot.svg"
BAND_JSON = "austen_band.json"
DOTS_JSON = "austen_dots.json"


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _parse_alpha_grid(text: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 3:
        raise InputValidationError(
            f"--alpha-grid expects start,stop,count (got {text!r})"
        )
    try:
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[2])
    except ValueError:
        raise InputValidationError(
            f"--alpha-grid expects numbers start,stop,count (got {text!r})"
        ) from None
    if count < 1:
        raise InputValidationError("--alpha-grid count must be >= 1")
    if not (0.0 < start <= stop < 1.0):
        raise InputValidationError(
            "--alpha-grid needs 0 < start <= stop < 1"
        )
    if start == stop and count != 1:
        raise InputValidationError(
            "--alpha-grid with start == stop needs count 1"
        )
    return np.linspace(start, stop, count)


def _collect_leave_out_specs(args) -> list[tuple[str | None, str]]:
    """Merge --leave-out flags and trailing positionals into
    (name or None, path) pairs."""
    specs: list[tuple[str | None, str]] = []
    for item in args.leave_out or []:
        if "=" in item:
            name, path = item.split("=", 1)
            if not name or not path:
                raise InputValidationError(
                    f"--leave-out expects NAME=PATH or PATH (got {item!r})"
                )
            specs.append((name, path))
        else:
            specs.append((None, item))
    return specs


def _resolve_plot_inputs(args) -> tuple[str, list[tuple[str | None, str]]]:
    paths = list(args.paths or [])
    predictions = args.predictions
    if predictions is None and paths:
        predictions = paths.pop(0)
    if predictions is None:
        raise InputValidationError(
            "no predictions file: give it as the first positional argument "
            "or with --predictions"
        )
    specs = _collect_leave_out_specs(args)
    specs.extend((None, p) for p in paths)
    return predictions, specs


def _apply_config(args, settings_keys: tuple[str, ...]) -> None:
    """Load --config and let its keys override the parsed flags."""
    if not getattr(args, "config", None):
        return
    doc = io.read_run_config(args.config)
    for key, value in doc.items():
        if key == "leave_out":
            args.leave_out = [f"{k}={v}" for k, v in value.items()]
        elif key == "alpha_grid":
            start, stop, count = value
            args.alpha_grid = f"{start},{stop},{int(count)}"
        elif key in settings_keys:
            setattr(args, key, value)


def _read_frame_and_leave_outs(args):
    frame = io.read_predictions(args.predictions)
    if frame.clip_count:
        _note(f"warning: clipped {frame.clip_count} propensity value(s) "
              f"in {args.predictions}")
    los = []
    for name, path in args.leave_out_specs:
        lo = io.read_leave_out(path, group_name=name, frame=frame)
        los.append(lo)
        if lo.clip_count:
            _note(f"warning: clipped {lo.clip_count} propensity value(s) "
                  f"in {path}")
    return frame, los


def _resolve_target(args, frame, estimand) -> float:
    tau = tau_hat(frame, estimand)
    _note(f"tau_hat ({estimand.value}): {tau!r}")
    if args.target_bias is not None:
        target = float(args.target_bias)
        if not (np.isfinite(target) and target > 0.0):
            raise InputValidationError(
                f"--target-bias must be a positive number (got {target!r})"
            )
    else:
        target = abs(tau)
        if target == 0.0:
            raise DegenerateDataError(
                "the effect estimate is exactly zero; give --target-bias"
            )
    _note(f"target bias: {target!r}")
    return target


def cmd_plot(args) -> int:
    _apply_config(args, ("predictions", "target_bias", "estimand",
                         "bootstrap", "level", "seed", "out", "title"))
    args.predictions, args.leave_out_specs = _resolve_plot_inputs(args)
    estimand = Estimand(args.estimand)
    frame, los = _read_frame_and_leave_outs(args)
    target = _resolve_target(args, frame, estimand)
    grid = (default_alpha_grid() if args.alpha_grid is None
            else _parse_alpha_grid(args.alpha_grid))
    curve = bias_contour(target, frame, estimand, grid)
    if curve.all_infeasible:
        _note("note: no confounder on this grid reaches the target bias")
    dots = calibrate_groups(frame, los)

    if args.bootstrap < 0:
        raise InputValidationError("--bootstrap must be >= 0")
    band = None
    if args.bootstrap > 0:
        cfg = BootstrapConfig(replicates=args.bootstrap, level=args.level,
                              seed=args.seed)
        band = bootstrap_band(frame, target, grid, cfg, estimand=estimand,
                              leave_outs=los)
        if band.redraws:
            _note(f"bootstrap redraws: {band.redraws}")

    labels = PlotLabels(title=args.title or "")
    data = build_plot_data(curve, dots=dots, band=band, labels=labels)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    plot_json = out_dir / PLOT_JSON
    io.write_json_doc(plot_json, data.to_dict())
    print(f"wrote {plot_json}")
    svg_path = out_dir / PLOT_SVG
    svg_path.write_text(render_svg(data), encoding="utf-8")
    print(f"wrote {svg_path}")
    if band is not None:
        band_path = out_dir / BAND_JSON
        io.write_json_doc(band_path, band.to_dict())
        print(f"wrote {band_path}")
    return 0


def cmd_bias(args) -> int:
    if (args.delta is None) == (args.r2 is None):
        raise InputValidationError("give exactly one of --delta or --r2")
    frame = io.read_predictions(args.predictions)
    estimand = Estimand(args.estimand)
    if args.delta is not None:
        params = SensitivityParams(alpha=args.alpha, delta=args.delta)
    else:
        delta = delta_from_r2(args.r2, args.alpha, frame)
        _note(f"delta from r2={args.r2!r}: {delta!r}")
        params = SensitivityParams(alpha=args.alpha, delta=delta)
    value = bias(params, frame, estimand)
    print(repr(value))
    return 0


def cmd_calibrate(args) -> int:
    args.leave_out_specs = _collect_leave_out_specs(args)
    if not args.leave_out_specs:
        raise InputValidationError("give at least one --leave-out file")
    frame, los = _read_frame_and_leave_outs(args)
    dots = calibrate_groups(frame, los)
    print(f"{'group':<20} {'alpha_hat':>10} {'r2_hat':>10} "
          f"{'alpha_raw':>10} {'r2_raw':>10} clipped")
    for d in dots:
        print(f"{d.group_name:<20} {d.alpha_hat:>10.4f} {d.r2_hat:>10.4f} "
              f"{d.alpha_raw:>10.4f} {d.r2_raw:>10.4f} "
              f"{'yes' if d.clipped else 'no'}")
    if args.out is not None:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        doc = {
            "schema_version": io.SCHEMA_VERSION,
            "kind": "calibration",
            "dots": [
                {
                    "group_name": d.group_name,
                    "alpha_hat": d.alpha_hat,
                    "r2_hat": d.r2_hat,
                    "alpha_raw": d.alpha_raw,
                    "r2_raw": d.r2_raw,
                    "clipped": d.clipped,
                }
                for d in dots
            ],
        }
        path = out_dir / DOTS_JSON
        io.write_json_doc(path, doc)
        print(f"wrote {path}")
    return 0


def cmd_simulate(args) -> int:
    if args.scenario == "heterogeneous":
        cfg = default_config(args.n, args.alpha, args.delta,
                             noise_sd=args.noise_sd, seed=args.seed)
        sample = simulate(cfg)
        groups = None
    elif args.scenario == "constant":
        cfg = constant_g_config(args.n, args.alpha, args.delta, g0=args.g0,
                                noise_sd=args.noise_sd, seed=args.seed)
        sample = simulate(cfg)
        groups = None
    elif args.scenario == "monotone":
        scen = monotone_scenario(args.n, alpha=args.alpha, delta=args.delta,
                                 noise_sd=args.noise_sd, seed=args.seed)
        sample = scen.sample
        groups = scen
    else:  # cancellation fixes alpha and delta itself
        scen = cancellation_scenario(args.n, noise_sd=args.noise_sd,
                                     seed=args.seed)
        sample = scen.sample
        groups = scen

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if groups is not None:
        dataset = groups.dataset
    else:
        dataset = sample.to_dataset()
    ds_path = out_dir / "sim_dataset.csv"
    io.write_dataset(ds_path, dataset)
    print(f"wrote {ds_path}")

    pred_path = out_dir / "sim_predictions.csv"
    io.write_predictions(pred_path, sample.to_frame())
    print(f"wrote {pred_path}")

    truth = {"schema_version": io.SCHEMA_VERSION, "kind": "ground_truth",
             "scenario": args.scenario}
    truth.update(sample.ground_truth())
    truth_path = out_dir / "sim_truth.json"
    io.write_json_doc(truth_path, truth)
    print(f"wrote {truth_path}")

    if groups is not None:
        gs = GroupSpec(groups={groups.group_name: groups.group_columns})
        groups_path = out_dir / "sim_groups.json"
        io.write_groups(groups_path, gs)
        print(f"wrote {groups_path}")
    return 0


def cmd_fit(args) -> int:
    dataset = io.read_dataset(args.dataset)
    cfg = FitConfig(k=args.k, ridge=args.ridge, max_iter=args.max_iter,
                    tol=args.tol, seed=args.seed)
    frame = crossfit_predictions(dataset, cfg)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    pred_path = out_dir / "predictions.csv"
    io.write_predictions(pred_path, frame)
    print(f"wrote {pred_path}")
    if args.groups is not None:
        groups = io.read_groups(args.groups)
        for lo in leave_group_out_predictions(dataset, groups, cfg):
            lo_path = out_dir / f"leave_out_{lo.group_name}.csv"
            io.write_leave_out(lo_path, lo, frame)
            print(f"wrote {lo_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="austen",
        description="Sensitivity analysis for unobserved confounding.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_plot = sub.add_parser(
        "plot", help="bias contour, calibration dots, optional band")
    p_plot.add_argument("paths", nargs="*",
                        help="predictions.csv then leave-out files")
    p_plot.add_argument("--predictions")
    p_plot.add_argument("--leave-out", action="append",
                        metavar="NAME=PATH")
    p_plot.add_argument("--target-bias", type=float, default=None)
    p_plot.add_argument("--estimand", choices=["ate", "att"], default="ate")
    p_plot.add_argument("--alpha-grid", metavar="START,STOP,COUNT",
                        default=None)
    p_plot.add_argument("--bootstrap", type=int, default=0, metavar="B",
                        help="replicates for the band (0 disables)")
    p_plot.add_argument("--level", type=float, default=0.95)
    p_plot.add_argument("--seed", type=int, default=0)
    p_plot.add_argument("--out", default=".")
    p_plot.add_argument("--title", default="")
    p_plot.add_argument("--config", default=None,
                        help="JSON file whose keys override these flags")
    p_plot.set_defaults(func=cmd_plot)

    p_bias = sub.add_parser("bias", help="bias at one (alpha, delta/r2)")
    p_bias.add_argument("--predictions", required=True)
    p_bias.add_argument("--alpha", type=float, required=True)
    p_bias.add_argument("--delta", type=float, default=None)
    p_bias.add_argument("--r2", type=float, default=None)
    p_bias.add_argument("--estimand", choices=["ate", "att"], default="ate")
    p_bias.set_defaults(func=cmd_bias)

    p_cal = sub.add_parser("calibrate", help="influence dots for groups")
    p_cal.add_argument("--predictions", required=True)
    p_cal.add_argument("--leave-out", action="append", metavar="NAME=PATH")
    p_cal.add_argument("--out", default=None)
    p_cal.set_defaults(func=cmd_calibrate)

    p_sim = sub.add_parser("simulate", help="synthetic data with known truth")
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--alpha", type=float, default=0.3)
    p_sim.add_argument("--delta", type=float, default=2.0)
    p_sim.add_argument("--noise-sd", type=float, default=1.0)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--g0", type=float, default=0.3,
                       help="propensity for --scenario constant")
    p_sim.add_argument("--scenario", default="heterogeneous",
                       choices=["heterogeneous", "constant", "monotone",
                                "cancellation"])
    p_sim.add_argument("--out", default=".")
    p_sim.set_defaults(func=cmd_simulate)

    p_fit = sub.add_parser("fit", help="crossfit reference models")
    p_fit.add_argument("--dataset", required=True)
    p_fit.add_argument("--groups", default=None,
                       help="JSON group spec for leave-out refits")
    p_fit.add_argument("--k", type=int, default=5)
    p_fit.add_argument("--ridge", type=float, default=1e-3)
    p_fit.add_argument("--max-iter", type=int, default=100)
    p_fit.add_argument("--tol", type=float, default=1e-8)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--out", default=".")
    p_fit.set_defaults(func=cmd_fit)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DegenerateDataError, NumericalError) as exc:
        _err(str(exc))
        return 3
    except AustenError as exc:
        _err(str(exc))
        return 2
    except OSError as exc:
        _err(str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
