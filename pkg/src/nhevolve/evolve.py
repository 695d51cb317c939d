"""Trotterized integration of the time-ordered evolution.

The propagator uses a midpoint-sampled single-exponential step,

    psi <- exp(-i * Hbar(t + dt/2) * dt) @ psi,

which is second-order accurate in dt, followed by renormalization; the
discarded norm factors accumulate in a running log so that amplitude
growth of hundreds of e-folds never overflows.  ``Hbar`` includes the
path's fast perturbation when one is attached.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, MagnitudeError
from .matlin import EXP_NORM_CAP, as_cvector, expm_2x2_batch, mat_exp
from .models import HamiltonianPath, sample_h_batch
from .spectral import SpectralFrame


@dataclass(eq=False)
class StateHistory:
    """Normalized states along a run plus the norm bookkeeping.

    ``states[k]`` is the unit-norm state at ``times[k]``; ``log_norm[k]``
    is the accumulated log of the true (unnormalized) norm.  ``coeffs``
    and ``populations`` (instantaneous-eigenbasis data) are filled by
    :func:`extract_populations`.
    """

    times: np.ndarray
    states: np.ndarray
    log_norm: np.ndarray
    coeffs: np.ndarray | None = None
    populations: np.ndarray | None = None
    labels: tuple | None = None
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def default_outputs(steps: int, target: int = 1000) -> int:
    """Largest output count <= target + 1 whose spacing divides ``steps``."""
    for k in range(min(steps, target), 0, -1):
        if steps % k == 0:
            return k + 1
    return 2


def propagate(
    path: HamiltonianPath,
    psi0,
    steps: int,
    outputs: int | None = None,
    span: tuple | None = None,
    include_perturbation: bool = True,
) -> StateHistory:
    """Integrate the full Hamiltonian (with fast drive, if attached).

    Parameters
    ----------
    steps : int
        Number of Trotter steps over the span.
    outputs : int, optional
        Number of recorded times (>= 2, including both endpoints); the
        spacing must divide ``steps`` so records fall on step boundaries.
        Defaults to ~1000 evenly spaced records.
    span : (float, float), optional
        Sub-interval of the path domain to integrate over.
    """
    psi0 = as_cvector(psi0, "psi0")
    nrm0 = np.linalg.norm(psi0)
    if nrm0 == 0.0:
        raise ArgumentError("initial state must be nonzero")
    if psi0.shape[0] != path.dim:
        raise ArgumentError(f"psi0 has dim {psi0.shape[0]}, path has {path.dim}")
    steps = int(steps)
    if outputs is None:
        outputs = default_outputs(steps)
    outputs = int(outputs)
    if not steps >= outputs - 1 or outputs < 2:
        raise ArgumentError(f"need steps >= outputs - 1 >= 1, got {steps}, {outputs}")
    if steps % (outputs - 1) != 0:
        raise ArgumentError(
            f"output spacing must divide steps: steps={steps}, outputs={outputs}")

    t0, t1 = span if span is not None else (path.t_start, path.t_end)
    if not t1 > t0:
        raise ArgumentError(f"empty span ({t0}, {t1})")
    dt = (t1 - t0) / steps
    midpoints = t0 + dt * (np.arange(steps) + 0.5)
    hs = sample_h_batch(path, midpoints, include_perturbation=include_perturbation)

    scale = float(np.max(np.abs(hs))) * abs(dt)
    if scale > EXP_NORM_CAP:
        raise MagnitudeError(
            f"|H| dt = {scale:.3e} exceeds {EXP_NORM_CAP}: increase steps")

    if path.dim == 2:
        props = expm_2x2_batch(-1j * dt * hs)
    else:
        props = np.stack([mat_exp(-1j * dt * h) for h in hs])

    stride = steps // (outputs - 1)
    rec_times = t0 + dt * stride * np.arange(outputs)
    rec_times[-1] = t1

    psi = psi0 / nrm0
    states = np.empty((outputs, path.dim), dtype=complex)
    log_norm = np.empty(outputs)
    states[0] = psi
    log_norm[0] = 0.0
    logn = 0.0
    rec = 1
    for k in range(steps):
        psi = props[k] @ psi
        nrm = np.linalg.norm(psi)
        if not np.isfinite(nrm) or nrm == 0.0:
            raise MagnitudeError(
                f"propagation norm became {nrm} at step {k}: increase steps")
        psi = psi / nrm
        logn += np.log(nrm)
        if (k + 1) % stride == 0:
            states[rec] = psi
            log_norm[rec] = logn
            rec += 1
    return StateHistory(
        times=rec_times,
        states=states,
        log_norm=log_norm,
        meta={"steps": steps, "dt": dt, "span": (t0, t1),
              "perturbed": include_perturbation and path.perturbation is not None},
    )


def reference_propagate(
    path: HamiltonianPath,
    psi0,
    steps: int,
    refine: int,
    outputs: int | None = None,
    span: tuple | None = None,
    include_perturbation: bool = True,
) -> StateHistory:
    """Same scheme on a grid refined by ``refine``; the brute-force oracle
    for convergence checks.  ``refine = 1`` reproduces :func:`propagate`
    exactly."""
    refine = int(refine)
    if refine < 1:
        raise ArgumentError(f"refine must be >= 1, got {refine}")
    if outputs is None:
        outputs = default_outputs(int(steps))
    return propagate(path, psi0, int(steps) * refine, outputs=outputs, span=span,
                     include_perturbation=include_perturbation)


def _frame_indices(frame: SpectralFrame, times: np.ndarray) -> np.ndarray | None:
    """Frame grid indices matching ``times`` exactly, or None."""
    tol = 1e-9 * max(1.0, float(np.max(np.abs(frame.times))))
    idx = np.searchsorted(frame.times, times)
    idx = np.clip(idx, 0, len(frame.times) - 1)
    left = np.clip(idx - 1, 0, len(frame.times) - 1)
    idx = np.where(
        np.abs(frame.times[left] - times) < np.abs(frame.times[idx] - times),
        left, idx)
    if np.all(np.abs(frame.times[idx] - times) <= tol):
        return idx
    return None


def extract_populations(frame: SpectralFrame, history: StateHistory,
                        interpolate: bool = False) -> StateHistory:
    """Fill instantaneous-eigenbasis coefficients and populations.

    ``c(t) = U^-1(t) psi(t)``, normalized to unit sum of squared moduli.
    History times must lie on the frame grid unless ``interpolate`` is
    set, in which case U^-1 is interpolated linearly entrywise.
    """
    idx = _frame_indices(frame, history.times)
    if idx is not None:
        uinv = frame.inverse_frames[idx]
    elif interpolate:
        pos = np.interp(history.times, frame.times, np.arange(len(frame.times)))
        lo = np.clip(np.floor(pos).astype(int), 0, len(frame.times) - 2)
        w = (pos - lo)[:, None, None]
        uinv = (1 - w) * frame.inverse_frames[lo] + w * frame.inverse_frames[lo + 1]
    else:
        raise ArgumentError(
            "history times do not lie on the frame grid; pass interpolate=True")
    coeffs = np.einsum("kab,kb->ka", uinv, history.states)
    norms = np.linalg.norm(coeffs, axis=1, keepdims=True)
    coeffs = coeffs / norms
    history.coeffs = coeffs
    history.populations = np.abs(coeffs) ** 2
    history.labels = frame.labels
    return history


def export_csv(history: StateHistory, path) -> None:
    """One row per output time: t, Re/Im psi components, log_norm, and the
    per-branch populations when filled."""
    n = history.dim
    header = ["t"]
    for i in range(n):
        header += [f"re_psi{i}", f"im_psi{i}"]
    header.append("log_norm")
    labels = history.labels or tuple(str(i) for i in range(n))
    if history.populations is not None:
        header += [f"p_{lbl}" for lbl in labels]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k, t in enumerate(history.times):
            row = [repr(float(t))]
            for i in range(n):
                row += [repr(float(history.states[k, i].real)),
                        repr(float(history.states[k, i].imag))]
            row.append(repr(float(history.log_norm[k])))
            if history.populations is not None:
                row += [repr(float(p)) for p in history.populations[k]]
            writer.writerow(row)
