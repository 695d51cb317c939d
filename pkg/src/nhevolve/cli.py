"""Command-line interface.

Subcommands: simulate, predict-naive, predict-advanced, classify,
preset <name>, sweep.  Exit codes: 0 success, 1 usage errors (bad flags,
malformed config), 2 physics errors (near-EP frames, indeterminate
endpoint classification, exponential overflow).
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys

import numpy as np

from . import bench, config, evolve, predict, spectral
from .errors import PhysicsError, UsageError
from .models import slowness_diagnostic


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage problems; this toolkit reserves 2
    # for physics errors, so remap.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(p, grid=True, steps=False, y=False):
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides config)")
    if steps:
        p.add_argument("--steps", type=int, help="Trotter steps")
    if grid:
        p.add_argument("--grid", type=int, help="frame grid intervals")
    if y:
        p.add_argument("--y", type=float, help="endpoint classification window")
    p.add_argument("--seed", type=int, default=None,
                   help="reserved for future stochastic-noise runs")
    p.add_argument("--include-lambda1", action="store_true",
                   help="add the first-order eigenvalue corrections to the "
                        "accumulated phases")


def build_parser() -> _Parser:
    parser = _Parser(prog="nhevolve",
                     description="Slow non-Hermitian evolution toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate the full dynamics")
    _add_common(p, steps=True)

    p = sub.add_parser("predict-naive", help="noiseless analytical prediction")
    _add_common(p)

    p = sub.add_parser("predict-advanced", help="noise-aware analytical prediction")
    _add_common(p)

    p = sub.add_parser("classify", help="full conversion report for one config")
    _add_common(p, steps=True, y=True)

    p = sub.add_parser("preset", help="run a figure preset end to end")
    p.add_argument("name", choices=sorted(bench.PRESETS))
    _add_common(p, steps=True, y=True)

    p = sub.add_parser("sweep", help="cartesian sweep over list-valued "
                                     "config parameters")
    _add_common(p, steps=True, y=True)
    return parser


def _load(args, need_config=True):
    if args.config is None:
        if need_config:
            raise UsageError("--config is required for this command")
        return config.validate_config({})
    return config.load_config(args.config)


def _out_dir(args, cfg):
    out = args.out or cfg["outputs"]["directory"]
    os.makedirs(out, exist_ok=True)
    return out


def _frame_for(args, cfg):
    path = config.build_path(cfg)
    grid = args.grid if getattr(args, "grid", None) else cfg["frame"]["grid_points"]
    return path, spectral.build_frame(path, grid)


def _cmd_simulate(args):
    cfg = _load(args)
    path, frame = _frame_for(args, cfg)
    steps = args.steps or cfg["integrator"]["steps"]
    outputs = cfg["integrator"]["outputs"]
    psi0 = config.initial_state_vector(cfg, frame)
    history = evolve.propagate(path, psi0, steps=steps, outputs=outputs)
    evolve.extract_populations(frame, history, interpolate=True)
    out = _out_dir(args, cfg)
    stem = cfg["outputs"]["stem"]
    spectral.export_csv(frame, os.path.join(out, f"{stem}_frame.csv"))
    evolve.export_csv(history, os.path.join(out, f"{stem}_history.csv"))
    final = dict(zip(frame.labels, history.populations[-1]))
    print(f"simulate: wrote {stem}_history.csv; final populations "
          + ", ".join(f"p_{k}={v:.6f}" for k, v in final.items()))
    return 0


def _predict(args, method):
    cfg = _load(args)
    path, frame = _frame_for(args, cfg)
    psi0 = config.initial_state_vector(cfg, frame)
    phi0 = frame.inverse_frames[0] @ psi0
    if method == "naive":
        series = predict.naive_series(frame, phi0,
                                      include_lambda1=args.include_lambda1)
    else:
        pert = config.build_perturbation(cfg)
        if pert is None:
            raise UsageError("predict-advanced needs a 'perturbation' section")
        series = predict.advanced_series(frame, phi0, pert,
                                         include_lambda1=args.include_lambda1)
    out = _out_dir(args, cfg)
    stem = cfg["outputs"]["stem"]
    spectral.export_csv(frame, os.path.join(out, f"{stem}_frame.csv"))
    predict.export_csv(series, os.path.join(out, f"{stem}_{method}.csv"))
    final = dict(zip(frame.labels, series.populations[-1]))
    print(f"predict-{method}: wrote {stem}_{method}.csv; final populations "
          + ", ".join(f"p_{k}={v:.6f}" for k, v in final.items()))
    return 0


def _classify_one(cfg, args, out, stem):
    path, frame = _frame_for(args, cfg)
    steps = getattr(args, "steps", None) or cfg["integrator"]["steps"]
    outputs = cfg["integrator"]["outputs"]
    threshold = cfg["classifier"]["switch_threshold"]
    y = getattr(args, "y", None) or cfg["classifier"]["endpoint_window_y"]

    psi0 = config.initial_state_vector(cfg, frame)
    history = evolve.propagate(path, psi0, steps=steps, outputs=outputs)
    evolve.extract_populations(frame, history, interpolate=True)
    phi0 = frame.inverse_frames[0] @ psi0
    naive = predict.naive_series(frame, phi0,
                                 include_lambda1=args.include_lambda1)
    advanced = None
    if path.perturbation is not None:
        advanced = predict.advanced_series(frame, phi0, path.perturbation,
                                           include_lambda1=args.include_lambda1)

    endpoint, y_used = bench.classify_endpoint_fastest(frame, y=y)
    winners = {
        "simulation": frame.labels[int(np.argmax(history.populations[-1]))],
        "naive": frame.labels[int(np.argmax(naive.populations[-1]))],
        "advanced": (frame.labels[int(np.argmax(advanced.populations[-1]))]
                     if advanced is not None else endpoint),
    }
    switch_times = {}
    for method, series in (("simulation", history.populations),
                           ("naive", naive.populations),
                           ("advanced", advanced.populations
                            if advanced is not None else None)):
        if series is None:
            switch_times[method] = []
            continue
        idx = frame.branch_index(winners[method])
        tgrid = history.times if method == "simulation" else frame.times
        switch_times[method] = bench.detect_switch_times(
            tgrid, series[:, idx], threshold)

    report = bench.ConversionReport(
        preset="custom",
        direction="forward",
        trajectory=dict(cfg["trajectory"]),
        most_growing=bench.classify_most_growing(frame),
        endpoint_fastest=endpoint,
        endpoint_window=y_used,
        winners=winners,
        switch_times=switch_times,
        slowness_diagnostic=slowness_diagnostic(path, warn=False),
        notes=[],
    )
    spectral.export_csv(frame, os.path.join(out, f"{stem}_frame.csv"))
    evolve.export_csv(history, os.path.join(out, f"{stem}_history.csv"))
    predict.export_csv(naive, os.path.join(out, f"{stem}_naive.csv"))
    if advanced is not None:
        predict.export_csv(advanced, os.path.join(out, f"{stem}_advanced.csv"))
    doc = {"config": cfg, "seed": args.seed,
           "report": bench.report_to_dict(report)}
    with open(os.path.join(out, f"{stem}_report.json"), "w",
              encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    return report


def _cmd_classify(args):
    cfg = _load(args)
    out = _out_dir(args, cfg)
    stem = cfg["outputs"]["stem"]
    report = _classify_one(cfg, args, out, stem)
    print(f"classify: winners {report.winners}; endpoint-fastest "
          f"{report.endpoint_fastest} (y={report.endpoint_window:g}); "
          f"most-growing {report.most_growing}")
    return 0


def _cmd_preset(args):
    cfg = _load(args, need_config=False)
    out = _out_dir(args, cfg)
    result = bench.run_preset(
        args.name,
        steps=args.steps or bench.DEFAULT_STEPS,
        grid_points=args.grid or bench.DEFAULT_GRID,
        y=args.y or bench.DEFAULT_ENDPOINT_WINDOW,
        include_lambda1=args.include_lambda1,
        out_dir=out,
    )
    for direction, report in result.reports.items():
        print(f"{args.name}/{direction}: winners {report.winners}; "
              f"endpoint-fastest {report.endpoint_fastest}; "
              f"most-growing {report.most_growing}")
    if result.chirality is not None:
        print(f"{args.name}: chiral per method {result.chirality.chiral}")
    print(f"artifacts in {out}/")
    return 0


def _cmd_sweep(args):
    if args.config is None:
        raise UsageError("--config is required for sweep")
    with open(args.config, encoding="utf-8") as fh:
        raw = json.load(fh)
    axes = config.sweep_axes(raw)
    if not axes:
        raise UsageError("sweep config has no list-valued parameters")
    cfg0 = config.validate_config(
        _instantiate(raw, axes, [vals[0] for _, _, vals in axes]))
    out_root = args.out or cfg0["outputs"]["directory"]
    os.makedirs(out_root, exist_ok=True)

    index = []
    combos = list(itertools.product(*[vals for _, _, vals in axes]))
    for i, combo in enumerate(combos):
        cfg = config.validate_config(_instantiate(raw, axes, combo))
        stem = f"sweep{i:04d}"
        combo_dir = os.path.join(out_root, stem)
        os.makedirs(combo_dir, exist_ok=True)
        report = _classify_one(cfg, args, combo_dir, stem)
        point = {f"{s}.{k}": v for (s, k, _), v in zip(axes, combo)}
        index.append({"run": stem, "point": point,
                      "winners": report.winners,
                      "endpoint_fastest": report.endpoint_fastest})
        print(f"{stem}: {point} -> winners {report.winners}")
    with open(os.path.join(out_root, "sweep_index.json"), "w",
              encoding="utf-8") as fh:
        json.dump({"axes": [f"{s}.{k}" for s, k, _ in axes],
                   "runs": index}, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    print(f"sweep: {len(combos)} runs indexed in {out_root}/sweep_index.json")
    return 0


def _instantiate(raw, axes, combo):
    doc = json.loads(json.dumps(raw))
    for (section, key, _), value in zip(axes, combo):
        doc[section][key] = value
    return doc


_COMMANDS = {
    "simulate": _cmd_simulate,
    "predict-naive": lambda args: _predict(args, "naive"),
    "predict-advanced": lambda args: _predict(args, "advanced"),
    "classify": _cmd_classify,
    "preset": _cmd_preset,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"nhevolve: error: {exc}", file=sys.stderr)
        return 1
    except PhysicsError as exc:
        print(f"nhevolve: physics error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
