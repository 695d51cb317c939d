"""Conversion classification, figure presets, and chirality analysis.

A preset bundles a trajectory family, its run variants (direction and
initial state), and the standard fast drive where applicable; running one
produces, per direction, a :class:`ConversionReport` naming the
most-growing branch (the noiseless-theory winner), the end-point
fastest-growing branch (the noise-aware winner), the empirical winner of
each method, and the population switch times.

Branch labels are the tracked labels assigned at the start of the
trajectory, carried continuously through any branch-cut crossings - the
same convention as the population curves.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import evolve, predict, spectral
from .errors import ArgumentError, IndeterminateEndpointError
from .models import (
    HamiltonianPath,
    PerturbationSpec,
    TrajectorySpec,
    slowness_diagnostic,
)

#: Fraction of the trajectory used for the end-point classification window.
DEFAULT_ENDPOINT_WINDOW = 0.1
ENDPOINT_WINDOW_FLOOR = 0.02

#: Im Lambda differences below this count as a most-growing tie.
MOST_GROWING_TIE_TOL = 1e-9

#: Pointwise Im lambda differences below this are ignored when checking
#: that the endpoint-window argmax is constant (isolated exact crossings).
ENDPOINT_TIE_TOL = 1e-9

DEFAULT_STEPS = 50000
DEFAULT_GRID = 5000

STANDARD_EPSILON = 1e-4
STANDARD_DRIVE_FREQ = 2 * np.pi / 5


def classify_most_growing(frame: spectral.SpectralFrame,
                          tie_tol: float = MOST_GROWING_TIE_TOL) -> str:
    """Branch with the largest Im Lambda over the whole trajectory."""
    if frame.Lambda is None:
        raise ArgumentError("frame has no cumulative eigenvalue integrals")
    final = frame.Lambda[-1].imag
    return frame.labels[int(np.argmax(final))]


def most_growing_margin(frame: spectral.SpectralFrame) -> float:
    """Gap between the two largest final Im Lambda values (tie detector)."""
    final = np.sort(frame.Lambda[-1].imag)
    return float(final[-1] - final[-2]) if len(final) > 1 else np.inf


def classify_endpoint_fastest(frame: spectral.SpectralFrame,
                              y: float = DEFAULT_ENDPOINT_WINDOW,
                              y_floor: float = ENDPOINT_WINDOW_FLOOR):
    """Branch with the largest window-averaged Im lambda near the end.

    If the pointwise argmax is not constant over ``[T(1-y), T]``, the
    window is halved (down to ``y_floor``) until it is; returns
    ``(label, y_used)``.

    Raises
    ------
    IndeterminateEndpointError
        If no single branch dominates even at the floor window.
    """
    if not 0 < y <= 1:
        raise ArgumentError(f"window fraction y must be in (0, 1], got {y}")
    times = frame.times
    t_end = times[-1]
    duration = frame.duration
    y_used = y
    while True:
        sel = times >= t_end - y_used * duration
        if sel.sum() >= 2:
            im = frame.lambdas[sel].imag
            order = np.sort(im, axis=1)
            decisive = (order[:, -1] - order[:, -2]) > ENDPOINT_TIE_TOL
            if np.any(decisive):
                winners = np.argmax(im[decisive], axis=1)
                if np.all(winners == winners[0]):
                    avg_winner = int(np.argmax(im.mean(axis=0)))
                    return frame.labels[avg_winner], y_used
        if y_used <= y_floor:
            raise IndeterminateEndpointError(
                f"no branch dominates Im lambda over the final {y_used:.3g} "
                "fraction of the trajectory")
        y_used = max(y_used / 2.0, y_floor)


def detect_switch_times(times, populations, threshold: float = 0.5):
    """Upward threshold crossings of one branch's population.

    Linear interpolation between grid points; an empty list means the
    population never crossed upward.  The last entry is "the" switch time.
    """
    times = np.asarray(times, dtype=float)
    p = np.asarray(populations, dtype=float)
    if p.shape != times.shape:
        raise ArgumentError("populations and times must have the same length")
    below = p[:-1] < threshold
    above = p[1:] >= threshold
    idx = np.where(below & above)[0]
    out = []
    for i in idx:
        f = (threshold - p[i]) / (p[i + 1] - p[i])
        out.append(float(times[i] + f * (times[i + 1] - times[i])))
    return out


@dataclass
class ConversionReport:
    """Per-direction classification summary for one trajectory."""

    preset: str
    direction: str
    trajectory: dict
    most_growing: str
    endpoint_fastest: str
    endpoint_window: float
    winners: dict
    switch_times: dict
    slowness_diagnostic: float
    notes: list = field(default_factory=list)


@dataclass
class ChiralityVerdict:
    """Winner comparison between the two traversal directions."""

    cw: ConversionReport
    ccw: ConversionReport
    chiral: dict


def chirality(cw: ConversionReport, ccw: ConversionReport) -> ChiralityVerdict:
    """Per-method chirality: do the winners depend on the direction?

    The two reports must describe the same trajectory geometry traversed
    with opposite angular rates.
    """
    for key in ("delta0", "g0", "radius", "total_time", "phi"):
        if not np.isclose(cw.trajectory[key], ccw.trajectory[key]):
            raise ArgumentError(
                f"mismatched trajectory geometry: {key} differs "
                f"({cw.trajectory[key]} vs {ccw.trajectory[key]})")
    if not np.isclose(cw.trajectory["omega"], -ccw.trajectory["omega"]):
        raise ArgumentError("directions must have opposite angular rates")
    methods = sorted(set(cw.winners) | set(ccw.winners))
    chiral = {m: cw.winners.get(m) != ccw.winners.get(m) for m in methods}
    return ChiralityVerdict(cw=cw, ccw=ccw, chiral=chiral)


# ---------------------------------------------------------------------------
# presets


@dataclass(frozen=True)
class PresetDef:
    name: str
    delta0: float
    g0: float
    radius: float
    total_time: float
    variants: tuple  # of (direction_name, omega, phi)
    inits: tuple
    perturbed: bool
    closed: bool
    panels: int


def _presets():
    t = 500.0
    loop = lambda phi: (("cw", -2 * np.pi / t, phi), ("ccw", 2 * np.pi / t, phi))
    return {
        "fig1": PresetDef("fig1", 0.0, 1.0, 0.3, t,
                          (("forward", -np.pi / t, 0.4 * np.pi),),
                          ("-",), False, False, 5),
        "fig2": PresetDef("fig2", 0.0, 1.0, 0.3, t,
                          (("forward", np.pi / t, -0.6 * np.pi),),
                          ("-",), False, False, 5),
        "fig3": PresetDef("fig3", 0.0, 1.0, 0.3, t, loop(-0.75 * np.pi),
                          ("-", "+"), False, True, 8),
        "fig4": PresetDef("fig4", 0.0, 0.5, 0.3, t, loop(0.0),
                          ("-", "+"), False, True, 8),
        "fig5": PresetDef("fig5", 0.0, 1.0, 0.3, t,
                          (("forward", -np.pi / t, 0.4 * np.pi),
                           ("reverse", np.pi / t, -0.6 * np.pi)),
                          ("-", "+"), True, False, 8),
        "fig6": PresetDef("fig6", 0.5, 0.5, 0.3, t, loop(0.0),
                          ("-", "+"), True, True, 8),
        "fig7": PresetDef("fig7", 0.0, 0.5, 0.3, t, loop(0.0),
                          ("-", "+"), True, True, 8),
        "fig8": PresetDef("fig8", 0.0, 1.0, 0.3, t, loop(-0.75 * np.pi),
                          ("-", "+"), True, True, 8),
    }


PRESETS = _presets()


def standard_perturbation() -> PerturbationSpec:
    return PerturbationSpec(epsilon=STANDARD_EPSILON,
                            drive_freq=STANDARD_DRIVE_FREQ)


def preset_path(name: str, direction: str | None = None) -> HamiltonianPath:
    """The HamiltonianPath of a preset variant."""
    preset = PRESETS.get(name)
    if preset is None:
        raise ArgumentError(f"unknown preset {name!r}; have {sorted(PRESETS)}")
    variants = {v[0]: v for v in preset.variants}
    if direction is None:
        direction = preset.variants[0][0]
    if direction not in variants:
        raise ArgumentError(
            f"preset {name} has directions {sorted(variants)}, not {direction!r}")
    _, omega, phi = variants[direction]
    spec = TrajectorySpec(preset.delta0, preset.g0, preset.radius,
                          preset.total_time, omega, phi)
    pert = standard_perturbation() if preset.perturbed else None
    return HamiltonianPath.circle(spec, perturbation=pert)


@dataclass(eq=False)
class RunResult:
    direction: str
    init: str
    history: evolve.StateHistory
    naive: predict.PredictionSeries
    advanced: predict.PredictionSeries | None


@dataclass(eq=False)
class PresetResult:
    name: str
    frames: dict
    runs: list
    reports: dict
    chirality: ChiralityVerdict | None
    settings: dict


def _final_winner(series_populations, labels) -> str:
    return labels[int(np.argmax(series_populations[-1]))]


def _run_variant(path, frame, init, threshold, steps, outputs, include_lambda1):
    psi0 = frame.initial_state(init)
    history = evolve.propagate(path, psi0, steps=steps, outputs=outputs)
    evolve.extract_populations(frame, history)
    phi0 = frame.inverse_frames[0] @ psi0
    naive = predict.naive_series(frame, phi0, include_lambda1=include_lambda1)
    advanced = None
    if path.perturbation is not None:
        advanced = predict.advanced_series(
            frame, phi0, path.perturbation, include_lambda1=include_lambda1)
    return history, naive, advanced


def run_preset(
    name: str,
    steps: int = DEFAULT_STEPS,
    grid_points: int = DEFAULT_GRID,
    y: float = DEFAULT_ENDPOINT_WINDOW,
    threshold: float = 0.5,
    include_lambda1: bool = False,
    out_dir=None,
    max_workers: int = 4,
) -> PresetResult:
    """Run a figure preset: frames, simulations, and both predictors for
    every direction x initial-state variant; CSV/JSON artifacts land in
    ``out_dir`` when given.

    Output times coincide with the frame grid, so ``steps`` must be a
    multiple of ``grid_points``.
    """
    preset = PRESETS.get(name)
    if preset is None:
        raise ArgumentError(f"unknown preset {name!r}; have {sorted(PRESETS)}")
    if steps % grid_points != 0:
        raise ArgumentError(
            f"steps ({steps}) must be a multiple of grid_points ({grid_points})")
    outputs = grid_points + 1

    paths = {}
    frames = {}
    for direction, _, _ in preset.variants:
        paths[direction] = preset_path(name, direction)
        frames[direction] = spectral.build_frame(paths[direction], grid_points)

    jobs = [(direction, init)
            for direction, _, _ in preset.variants for init in preset.inits]
    with ThreadPoolExecutor(max_workers=min(max_workers, len(jobs))) as pool:
        futures = {
            (direction, init): pool.submit(
                _run_variant, paths[direction], frames[direction], init,
                threshold, steps, outputs, include_lambda1)
            for direction, init in jobs
        }
        runs = []
        for (direction, init) in jobs:
            history, naive, advanced = futures[(direction, init)].result()
            runs.append(RunResult(direction, init, history, naive, advanced))

    reports = {}
    for direction, omega, phi in preset.variants:
        frame = frames[direction]
        dir_runs = [r for r in runs if r.direction == direction]
        notes = []

        margin = most_growing_margin(frame)
        most_growing = classify_most_growing(frame)
        if margin < MOST_GROWING_TIE_TOL:
            notes.append(
                f"most-growing tie: Im Lambda margin {margin:.3e} at the final time")
        endpoint, y_used = classify_endpoint_fastest(frame, y=y)

        winners = {}
        for method in ("simulation", "naive", "advanced"):
            if method == "advanced" and not preset.perturbed:
                winners[method] = endpoint
                notes.append(
                    "advanced winner taken from the end-point classification "
                    "(no controlled drive in this preset)")
                continue
            finals = []
            for r in dir_runs:
                pops = (r.history.populations if method == "simulation"
                        else r.naive.populations if method == "naive"
                        else r.advanced.populations)
                finals.append(_final_winner(pops, frame.labels))
            if all(f == finals[0] for f in finals):
                winners[method] = finals[0]
            else:
                winners[method] = None
                notes.append(
                    f"{method}: no common winner across initial states "
                    f"({dict(zip([r.init for r in dir_runs], finals))})")

        switch_times = {}
        lead = dir_runs[0]  # initialized in the first listed state ("-")
        for method in ("simulation", "naive", "advanced"):
            label = winners[method]
            if label is None:
                switch_times[method] = []
                continue
            idx = frame.branch_index(label)
            if method == "simulation":
                pops = lead.history.populations[:, idx]
            elif method == "naive":
                pops = lead.naive.populations[:, idx]
            elif lead.advanced is not None:
                pops = lead.advanced.populations[:, idx]
            else:
                switch_times[method] = []
                continue
            switch_times[method] = detect_switch_times(
                frame.times, pops, threshold)

        reports[direction] = ConversionReport(
            preset=name,
            direction=direction,
            trajectory={"delta0": preset.delta0, "g0": preset.g0,
                        "radius": preset.radius,
                        "total_time": preset.total_time,
                        "omega": omega, "phi": phi},
            most_growing=most_growing,
            endpoint_fastest=endpoint,
            endpoint_window=y_used,
            winners=winners,
            switch_times=switch_times,
            slowness_diagnostic=slowness_diagnostic(paths[direction], warn=False),
            notes=notes,
        )

    verdict = None
    if preset.closed:
        verdict = chirality(reports["cw"], reports["ccw"])

    settings = {"steps": steps, "grid_points": grid_points,
                "endpoint_window_y": y, "switch_threshold": threshold,
                "include_lambda1": include_lambda1}
    result = PresetResult(name=name, frames=frames, runs=runs,
                          reports=reports, chirality=verdict, settings=settings)
    if out_dir is not None:
        write_artifacts(result, out_dir)
    return result


# ---------------------------------------------------------------------------
# serialization


def report_to_dict(report: ConversionReport) -> dict:
    return asdict(report)


def report_from_dict(doc: dict) -> ConversionReport:
    return ConversionReport(**doc)


def result_to_dict(result: PresetResult) -> dict:
    preset = PRESETS[result.name]
    pert = standard_perturbation() if preset.perturbed else None
    doc = {
        "preset": result.name,
        "parameters": {
            "delta0": preset.delta0,
            "g0": preset.g0,
            "radius": preset.radius,
            "total_time": preset.total_time,
            "epsilon": pert.epsilon if pert else 0.0,
            "drive_freq": pert.drive_freq if pert else 0.0,
        },
        "settings": dict(result.settings),
        "panels": preset.panels,
        "reports": {d: report_to_dict(r) for d, r in result.reports.items()},
        "chirality": None,
    }
    if result.chirality is not None:
        doc["chirality"] = {"chiral": dict(result.chirality.chiral)}
    doc["runs"] = [{"direction": r.direction, "init": r.init} for r in result.runs]
    return doc


def write_artifacts(result: PresetResult, out_dir) -> dict:
    """Write per-run CSVs and report.json; returns the file map."""
    os.makedirs(out_dir, exist_ok=True)
    files = {"frames": {}, "runs": [], "report": None}
    for direction, frame in result.frames.items():
        fname = f"{result.name}_{direction}_frame.csv"
        spectral.export_csv(frame, os.path.join(out_dir, fname))
        files["frames"][direction] = fname
    for run in result.runs:
        stem = f"{result.name}_{run.direction}_init{run.init}"
        entry = {"direction": run.direction, "init": run.init}
        evolve.export_csv(run.history, os.path.join(out_dir, f"{stem}_history.csv"))
        entry["history"] = f"{stem}_history.csv"
        predict.export_csv(run.naive, os.path.join(out_dir, f"{stem}_naive.csv"))
        entry["naive"] = f"{stem}_naive.csv"
        if run.advanced is not None:
            predict.export_csv(run.advanced,
                               os.path.join(out_dir, f"{stem}_advanced.csv"))
            entry["advanced"] = f"{stem}_advanced.csv"
        files["runs"].append(entry)
    doc = result_to_dict(result)
    doc["artifacts"] = files
    report_path = os.path.join(out_dir, "report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    files["report"] = "report.json"
    return files
