"""Figure-panel rendering from simulation artifacts.

Panel kinds:

- ``parameter_plane``: the trajectory in the (delta, g) plane with the two
  degeneracy points and the dashed branch cuts of the square-root spectrum;
- ``eigenvalue_path``: both eigenvalue branches in the complex plane;
- ``eigenvalue_trace``: Im lambda of both branches against time with the
  state's instantaneous growth rate overlaid (the flat stand-in for a 3-D
  sheet plot);
- ``growth_integrals``: the accumulated Im Lambda of both branches;
- ``population_overlay``: populations per branch for every available
  method (simulation / naive / advanced), resampled onto a common grid.

``render_all`` arranges these into the standard preset layouts: five
panels (a-e) for the single-direction presets fig1/fig2 and eight (a-h,
four per direction) for everything else.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, field

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .io import InputError, branch_labels, load_report, load_table  # noqa: E402

PANEL_KINDS = ("parameter_plane", "eigenvalue_path", "eigenvalue_trace",
               "growth_integrals", "population_overlay")

BRANCH_COLORS = {"+": "tab:blue", "-": "tab:red"}
METHOD_STYLES = {"simulation": "-", "naive": "--", "advanced": ":"}

DEGENERACY_POINTS = ((0.0, 1.0), (0.0, -1.0))


def default_style():
    return {"branch_colors": dict(BRANCH_COLORS),
            "method_styles": dict(METHOD_STYLES)}


@dataclass
class PanelSpec:
    """One panel: what to draw, from which files, into which image."""

    kind: str
    output: str
    inputs: dict = field(default_factory=dict)
    style: dict = field(default_factory=default_style)
    title: str = ""


def _color(style, label):
    return style["branch_colors"].get(label, None)


def _finish(fig, ax, spec, curves):
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    fig.savefig(spec.output, dpi=110)
    xlim, ylim = ax.get_xlim(), ax.get_ylim()
    plt.close(fig)
    return {"file": os.path.basename(spec.output), "kind": spec.kind,
            "curves": curves,
            "xlim": [float(xlim[0]), float(xlim[1])],
            "ylim": [float(ylim[0]), float(ylim[1])]}


def _render_parameter_plane(spec):
    traj = spec.inputs["trajectory"]
    ts = np.linspace(0.0, traj["total_time"], 600)
    theta = traj["omega"] * ts + traj["phi"]
    delta = traj["delta0"] - traj["radius"] * np.sin(theta)
    g = traj["g0"] - traj["radius"] * np.cos(theta)
    fig, ax = plt.subplots(figsize=(4.2, 4.0))
    ax.plot(delta, g, color="tab:orange", lw=1.8)
    ax.plot(delta[0], g[0], "o", color="tab:orange", ms=7)
    mid = len(ts) // 3
    ax.annotate("", xy=(delta[mid + 3], g[mid + 3]), xytext=(delta[mid], g[mid]),
                arrowprops=dict(arrowstyle="-|>", color="tab:orange", lw=1.8))
    for dp, gp in DEGENERACY_POINTS:
        ax.plot(dp, gp, "ko", ms=6)
    span = max(1.4, float(np.max(np.abs(g))) + 0.4)
    ax.plot([0, 0], [1.0, span], "k--", lw=1.0)
    ax.plot([0, 0], [-1.0, -span], "k--", lw=1.0)
    ax.set_xlabel(r"$\delta$")
    ax.set_ylabel(r"$g$")
    ax.set_ylim(min(-span, float(np.min(g)) - 0.4), span)
    return _finish(fig, ax, spec, curves=1)


def _render_eigenvalue_path(spec):
    cols = load_table(spec.inputs["frame"])
    labels = branch_labels(cols)
    fig, ax = plt.subplots(figsize=(4.2, 4.0))
    for label in labels:
        re = np.asarray(cols[f"re_lambda_{label}"])
        im = np.asarray(cols[f"im_lambda_{label}"])
        ax.plot(re, im, color=_color(spec.style, label), lw=1.5,
                label=f"$\\lambda_{{{label}}}$")
        ax.plot(re[0], im[0], "o", color=_color(spec.style, label), ms=7)
        mid = len(re) // 4
        ax.annotate("", xy=(re[mid + 2], im[mid + 2]), xytext=(re[mid], im[mid]),
                    arrowprops=dict(arrowstyle="-|>",
                                    color=_color(spec.style, label)))
    ax.set_xlabel(r"Re $\lambda$")
    ax.set_ylabel(r"Im $\lambda$")
    ax.legend(loc="best", fontsize=8)
    return _finish(fig, ax, spec, curves=len(labels))


def _render_eigenvalue_trace(spec):
    cols = load_table(spec.inputs["frame"])
    labels = branch_labels(cols)
    t = np.asarray(cols["t"])
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    curves = 0
    for label in labels:
        ax.plot(t, cols[f"im_lambda_{label}"], color=_color(spec.style, label),
                lw=1.4, label=f"Im $\\lambda_{{{label}}}$")
        curves += 1
    history = spec.inputs.get("history")
    if history is not None:
        hcols = load_table(history)
        ht = np.asarray(hcols["t"])
        trace = np.zeros_like(ht)
        for label in labels:
            pops = np.asarray(hcols[f"p_{label}"])
            im_lam = np.interp(ht, t, cols[f"im_lambda_{label}"])
            trace += pops * im_lam
        ax.plot(ht, trace, "k-", lw=1.8, label="state growth rate")
        ax.plot(ht[0], trace[0], "ko", ms=6)
        curves += 1
    ax.set_xlabel("t")
    ax.set_ylabel(r"Im $\lambda$")
    ax.legend(loc="best", fontsize=8)
    return _finish(fig, ax, spec, curves=curves)


def _render_growth_integrals(spec):
    cols = load_table(spec.inputs["frame"])
    labels = branch_labels(cols)
    t = np.asarray(cols["t"])
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    for label in labels:
        ax.plot(t, cols[f"im_Lambda_{label}"], color=_color(spec.style, label),
                lw=1.5, label=f"Im $\\Lambda_{{{label}}}$")
    ax.set_xlabel("t")
    ax.set_ylabel(r"Im $\Lambda$")
    ax.legend(loc="best", fontsize=8)
    return _finish(fig, ax, spec, curves=len(labels))


def _populations(path, labels, grid=None):
    cols = load_table(path)
    t = np.asarray(cols["t"])
    series = {}
    for label in labels:
        p = np.asarray(cols[f"p_{label}"])
        bad = (p < -1e-9) | (p > 1 + 1e-9)
        if np.any(bad):
            row = int(np.argmax(bad)) + 2
            warnings.warn(
                f"{path}: row {row}: population {p[bad][0]:.6g} outside [0, 1]; "
                "clipping for display", stacklevel=3)
        p = np.clip(p, 0.0, 1.0)
        if grid is not None and (len(t) != len(grid) or not np.allclose(t, grid)):
            p = np.interp(grid, t, p)  # overlay grids must match
        series[label] = p
    return t if grid is None else grid, series


def _render_population_overlay(spec):
    methods = [(m, spec.inputs[m]) for m in ("simulation", "naive", "advanced")
               if spec.inputs.get(m)]
    if not methods:
        raise InputError("population overlay needs at least one series input")
    probe = load_table(methods[0][1])
    labels = branch_labels(probe)
    grid = np.asarray(probe["t"])
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    curves = 0
    for method, path in methods:
        _, series = _populations(path, labels, grid=grid)
        for label in labels:
            ax.plot(grid, series[label],
                    linestyle=spec.style["method_styles"][method],
                    color=_color(spec.style, label), lw=1.4,
                    label=f"{method} $p_{{{label}}}$")
            curves += 1
    ax.set_xlabel("t")
    ax.set_ylabel("population")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="center left", fontsize=7)
    return _finish(fig, ax, spec, curves=curves)


_RENDERERS = {
    "parameter_plane": _render_parameter_plane,
    "eigenvalue_path": _render_eigenvalue_path,
    "eigenvalue_trace": _render_eigenvalue_trace,
    "growth_integrals": _render_growth_integrals,
    "population_overlay": _render_population_overlay,
}


def render_panel(spec: PanelSpec) -> dict:
    """Render one panel; returns its manifest entry."""
    if spec.kind not in _RENDERERS:
        raise InputError(f"unknown panel kind {spec.kind!r}; have {PANEL_KINDS}")
    return _RENDERERS[spec.kind](spec)


def _run_files(doc, direction, init):
    for entry in doc["artifacts"]["runs"]:
        if entry["direction"] == direction and entry["init"] == init:
            return entry
    raise InputError(f"report lists no run for direction={direction!r}, "
                     f"init={init!r}")


def panel_layout(doc, report_dir):
    """The preset's panel list as (letter, PanelSpec) pairs, unrendered."""
    preset = doc["preset"]
    directions = list(doc["reports"])
    frames = doc["artifacts"]["frames"]

    def fpath(name):
        return os.path.join(report_dir, name)

    panels = []
    if len(directions) == 1:
        d = directions[0]
        run = _run_files(doc, d, "-")
        traj = doc["reports"][d]["trajectory"]
        panels.append(("a", "parameter_plane", {"trajectory": traj}))
        panels.append(("b", "eigenvalue_path", {"frame": fpath(frames[d])}))
        panels.append(("c", "eigenvalue_trace",
                       {"frame": fpath(frames[d]),
                        "history": fpath(run["history"])}))
        panels.append(("d", "growth_integrals", {"frame": fpath(frames[d])}))
        overlay = {"simulation": fpath(run["history"]),
                   "naive": fpath(run["naive"])}
        if "advanced" in run:
            overlay["advanced"] = fpath(run["advanced"])
        panels.append(("e", "population_overlay", overlay))
    else:
        letters = iter("abcdefgh")
        for d in directions:
            traj = doc["reports"][d]["trajectory"]
            panels.append((next(letters), "parameter_plane",
                           {"trajectory": traj}))
            panels.append((next(letters), "eigenvalue_path",
                           {"frame": fpath(frames[d])}))
            for init in ("-", "+"):
                run = _run_files(doc, d, init)
                overlay = {"simulation": fpath(run["history"]),
                           "naive": fpath(run["naive"])}
                if "advanced" in run:
                    overlay["advanced"] = fpath(run["advanced"])
                panels.append((next(letters), "population_overlay", overlay))
    return [(letter, PanelSpec(kind=kind, inputs=inputs, output="",
                               title=f"{preset} ({letter})"))
            for letter, kind, inputs in panels]


def render_all(report_dir, out_dir, panel_filter=None) -> list:
    """Render a preset's full panel set; returns the manifest (also written
    to ``manifest.json`` in ``out_dir``)."""
    doc = load_report(report_dir)
    if panel_filter is not None and panel_filter not in PANEL_KINDS:
        raise InputError(f"unknown panel kind {panel_filter!r}; have {PANEL_KINDS}")
    os.makedirs(out_dir, exist_ok=True)
    manifest = []
    for letter, spec in panel_layout(doc, report_dir):
        if panel_filter is not None and spec.kind != panel_filter:
            continue
        spec.output = os.path.join(
            out_dir, f"{doc['preset']}_{letter}_{spec.kind}.png")
        entry = render_panel(spec)
        entry["panel"] = letter
        manifest.append(entry)
    summary = {"preset": doc["preset"], "panel_count": len(manifest),
               "panels": manifest}
    with open(os.path.join(out_dir, "manifest.json"), "w",
              encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return manifest
