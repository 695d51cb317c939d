"""JSON run configuration.

A config document has up to six sections - trajectory, perturbation,
integrator, frame, classifier, outputs - with fixed key sets per section.
Unknown sections or keys are rejected outright: a silently ignored typo in
a physics parameter is the main operational hazard of a toolkit like this.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ConfigError
from .models import HamiltonianPath, PerturbationSpec, TrajectorySpec

_SECTIONS = {
    "trajectory": {
        "kind", "delta0", "g0", "radius", "total_time", "omega", "phi",
        "slope", "coupling", "window", "times", "matrices",
    },
    "perturbation": {"epsilon", "drive_freq", "coupling"},
    "integrator": {"steps", "outputs", "initial_state"},
    "frame": {"grid_points"},
    "classifier": {"endpoint_window_y", "switch_threshold"},
    "outputs": {"directory", "stem"},
}

_DEFAULTS = {
    "integrator": {"steps": 50000, "outputs": None, "initial_state": "-"},
    "frame": {"grid_points": 5000},
    "classifier": {"endpoint_window_y": 0.1, "switch_threshold": 0.5},
    "outputs": {"directory": "nhevolve-out", "stem": "run"},
}

_KINDS = {"circle2x2", "landau_zener", "sampled_table"}


def _reject_unknown(doc: dict, allowed, where: str):
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {', '.join(unknown)}")


def validate_config(doc: dict) -> dict:
    """Validate a parsed document and fill defaults; returns a new dict."""
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    _reject_unknown(doc, _SECTIONS, "config section")
    out = {}
    for section, allowed in _SECTIONS.items():
        raw = doc.get(section)
        if raw is None:
            out[section] = dict(_DEFAULTS.get(section, {}))
            continue
        if not isinstance(raw, dict):
            raise ConfigError(f"section {section!r} must be a JSON object")
        _reject_unknown(raw, allowed, f"'{section}'")
        merged = dict(_DEFAULTS.get(section, {}))
        merged.update(raw)
        out[section] = merged
    return out


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return validate_config(doc)


def _complex_matrix(nested, where: str) -> np.ndarray:
    try:
        arr = np.asarray(nested, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: expected nested [re, im] pairs") from exc
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise ConfigError(f"{where}: innermost entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def build_perturbation(cfg: dict) -> PerturbationSpec | None:
    section = cfg.get("perturbation") or {}
    if not section:
        return None
    if "epsilon" not in section or "drive_freq" not in section:
        raise ConfigError("perturbation needs both 'epsilon' and 'drive_freq'")
    kwargs = {"epsilon": float(section["epsilon"]),
              "drive_freq": float(section["drive_freq"])}
    if section.get("coupling") is not None:
        kwargs["coupling"] = _complex_matrix(section["coupling"],
                                             "perturbation.coupling")
    return PerturbationSpec(**kwargs)


def build_path(cfg: dict) -> HamiltonianPath:
    """HamiltonianPath (with perturbation attached) from a validated config."""
    section = cfg.get("trajectory")
    if not section:
        raise ConfigError("config has no 'trajectory' section")
    kind = section.get("kind", "circle2x2")
    if kind not in _KINDS:
        raise ConfigError(f"trajectory.kind must be one of {sorted(_KINDS)}")
    pert = build_perturbation(cfg)

    def need(*keys):
        missing = [k for k in keys if section.get(k) is None]
        if missing:
            raise ConfigError(
                f"trajectory kind {kind!r} needs key(s): {', '.join(missing)}")

    if kind == "circle2x2":
        need("delta0", "g0", "radius", "total_time", "omega")
        spec = TrajectorySpec(
            delta0=float(section["delta0"]),
            g0=float(section["g0"]),
            radius=float(section["radius"]),
            total_time=float(section["total_time"]),
            omega=float(section["omega"]),
            phi=float(section.get("phi", 0.0)),
        )
        return HamiltonianPath.circle(spec, perturbation=pert)
    if kind == "landau_zener":
        need("slope", "coupling", "window")
        return HamiltonianPath.landau_zener(
            slope=float(section["slope"]),
            coupling=float(section["coupling"]),
            window=float(section["window"]),
            perturbation=pert,
        )
    need("times", "matrices")
    return HamiltonianPath.from_table(
        times=np.asarray(section["times"], dtype=float),
        matrices=_complex_matrix(section["matrices"], "trajectory.matrices"),
        perturbation=pert,
    )


def initial_state_vector(cfg: dict, frame) -> np.ndarray:
    """Resolve integrator.initial_state: a branch label or explicit vector."""
    spec = cfg["integrator"].get("initial_state", "-")
    if isinstance(spec, str):
        return frame.initial_state(spec)
    vec = _complex_matrix(spec, "integrator.initial_state")
    if vec.ndim != 1:
        raise ConfigError("integrator.initial_state vector must be 1-d")
    return vec


def sweep_axes(doc: dict):
    """List-valued leaves of a raw config document, as (section, key, values).

    Used by the sweep command to build the cartesian product; the
    trajectory 'times'/'matrices' table keys never sweep.
    """
    axes = []
    for section, body in doc.items():
        if not isinstance(body, dict):
            continue
        for key, value in body.items():
            if (section, key) in (("trajectory", "times"),
                                  ("trajectory", "matrices")):
                continue
            if key == "coupling" or key == "initial_state":
                continue
            if isinstance(value, list):
                axes.append((section, key, list(value)))
    return axes
