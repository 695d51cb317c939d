"""Analytical predictors for slow non-Hermitian evolution.

Two predictors share one evaluation engine.  The noiseless ("naive")
series propagates eigenbasis coefficients as

    phi(t) = E(t,0) phi0 + W1(t) E(t,0) phi0 - E(t,0) W1(0) phi0,

with ``E(t2,t1) = diag(exp(-i (Lambda_n(t2) - Lambda_n(t1))))``.  The
noise-aware ("advanced") predictor adds four first-order terms in the
drive strength eps, each a t1-integral of

    E(t,t1) * M(t1) * E(t1,0) * v

where M is the eigenbasis drive ``dHtilde = U^-1 dH U`` or its commutator
with W1, and v is phi0 or W1(0) phi0.

Every amplitude is carried as a (log-magnitude, unit-phase) pair and sums
are evaluated by shifted exponentials: on long trajectories the branch
amplification factors exceed exp(700) individually even when the
normalized populations are O(1), so naive floating point would overflow.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ArgumentError
from .matlin import as_cvector
from .models import PerturbationSpec, sample_perturbation
from .spectral import SpectralFrame

_CHUNK = 256

# ---------------------------------------------------------------------------
# (log-magnitude, phase) pairs
#
# A pair (L, u) of equal-shape float/complex arrays represents u * exp(L).
# Canonical form has |u| == 1, or (L, u) == (-inf, 0) for exact zero.


def _canonical(logmag, val):
    mag = np.abs(val)
    ok = mag > 0.0
    safe = np.where(ok, mag, 1.0)
    with np.errstate(divide="ignore"):
        lm = np.where(ok, logmag + np.log(safe), -np.inf)
    return lm, np.where(ok, val / safe, 0.0 + 0.0j)


def _pair_sum(logmags, vals, axis=0):
    """Sum of ``val * exp(logmag)`` terms along ``axis``, kept scaled."""
    shift = np.max(logmags, axis=axis, keepdims=True)
    shift_safe = np.where(np.isfinite(shift), shift, 0.0)
    with np.errstate(invalid="ignore"):
        total = np.sum(vals * np.exp(logmags - shift_safe), axis=axis)
    return _canonical(np.squeeze(shift_safe, axis=axis), total)


def _pair_vector_norm(logmag, phase, axis=-1):
    """log of the Euclidean norm of a scaled complex vector."""
    shift = np.max(logmag, axis=axis, keepdims=True)
    shift_safe = np.where(np.isfinite(shift), shift, 0.0)
    ss = np.sum(np.exp(2.0 * (logmag - shift_safe)) * np.abs(phase) ** 2, axis=axis)
    with np.errstate(divide="ignore"):
        return np.squeeze(shift_safe, axis=axis) + 0.5 * np.log(ss)


@dataclass(eq=False)
class PredictionSeries:
    """Predicted eigenbasis coefficients and populations over time.

    ``coeffs[k]`` is the unit-norm coefficient vector at ``times[k]``;
    ``populations[k]`` its squared moduli.  ``term_breakdown`` maps
    "term1".."term5" to the log-magnitude of each term's vector norm per
    time (advanced series only), for diagnosing which channel dominates.
    """

    times: np.ndarray
    coeffs: np.ndarray
    populations: np.ndarray
    method: str
    labels: tuple
    epsilon: float = 0.0
    term_breakdown: dict | None = None


def _require_complete(frame: SpectralFrame):
    if frame.Lambda is None or frame.W1 is None:
        raise ArgumentError("frame is incomplete: Lambda/W1 not filled")


def _effective_lambda_integral(frame: SpectralFrame, include_lambda1: bool):
    if not include_lambda1:
        return frame.Lambda
    corr = np.zeros_like(frame.Lambda)
    corr[1:] = cumulative_trapezoid(frame.lambda1, frame.times, axis=0)
    return frame.Lambda + corr


def _prefix_integral(times, im_l, re_l, mats_log, mats_phase, v_log, v_phase,
                     window=None):
    """Scaled prefix values of ``int_0^{t_k} E(t_k,t1) M(t1) E(t1,0) v dt1``.

    ``im_l``/``re_l`` are Im/Re of the cumulative eigenvalue integrals,
    shape (K, N); the M(t1) samples arrive as canonical pairs of shape
    (K, N, N).  Returns a canonical (K, N) pair.
    """
    k_pts, n = im_l.shape
    # inner contraction (M(t_j) @ E(t_j,0) v)_m, one pair per (j, m)
    contrib_log = mats_log + (im_l + v_log[None, :])[:, None, :]
    contrib_phase = mats_phase * (np.exp(-1j * re_l) * v_phase[None, :])[:, None, :]
    g_log, g_phase = _pair_sum(contrib_log, contrib_phase, axis=2)
    # E(t_k, t_j) splits into exp(-i L(t_k)) * exp(+i L(t_j)); fold in the t_j half
    c_log = g_log - im_l
    c_phase = g_phase * np.exp(1j * re_l)
    if window is not None:
        lo, hi = window
        inside = (times >= lo) & (times <= hi)
        c_log = np.where(inside[:, None], c_log, -np.inf)

    # trapezoid increments between consecutive grid points
    h = times[1] - times[0]
    inc_log, inc_phase = _pair_sum(
        np.stack([c_log[:-1], c_log[1:]]),
        np.stack([c_phase[:-1], c_phase[1:]]),
        axis=0,
    )
    inc_log = inc_log + np.log(h / 2.0)

    # running prefix sums, accumulated chunk by chunk under a local scale
    s_log = np.full((k_pts, n), -np.inf)
    s_phase = np.zeros((k_pts, n), dtype=complex)
    carry_log = np.full(n, -np.inf)
    carry_val = np.zeros(n, dtype=complex)
    for a in range(0, k_pts - 1, _CHUNK):
        b = min(a + _CHUNK, k_pts - 1)
        blk_log = inc_log[a:b]
        local = np.maximum(blk_log.max(axis=0), carry_log)
        local_safe = np.where(np.isfinite(local), local, 0.0)
        scaled = np.exp(blk_log - local_safe[None, :]) * inc_phase[a:b]
        run = np.cumsum(scaled, axis=0) + (
            carry_val * np.exp(carry_log - local_safe))[None, :]
        s_log[a + 1:b + 1], s_phase[a + 1:b + 1] = _canonical(
            np.broadcast_to(local_safe, run.shape), run)
        carry_log = s_log[b]
        carry_val = s_phase[b]

    # apply the deferred exp(-i L(t_k)) factor
    return _canonical(s_log + im_l, s_phase * np.exp(-1j * re_l))


def _evaluate(frame: SpectralFrame, phi0, pert, include_lambda1, t1_window,
              want_breakdown):
    _require_complete(frame)
    phi0 = as_cvector(phi0, "phi0")
    if phi0.shape[0] != frame.dim:
        raise ArgumentError(f"phi0 has dim {phi0.shape[0]}, frame has {frame.dim}")
    nrm = np.linalg.norm(phi0)
    if nrm == 0.0:
        raise ArgumentError("phi0 must be nonzero")
    phi0 = phi0 / nrm

    times = frame.times
    lam_int = _effective_lambda_integral(frame, include_lambda1)
    im_l, re_l = lam_int.imag, lam_int.real
    w1 = frame.W1
    k_pts, n = im_l.shape

    with np.errstate(divide="ignore"):
        v_log, v_phase = _canonical(np.zeros(n), phi0)
        w1_log, w1_phase = _canonical(np.zeros_like(w1, dtype=float), w1)

    # term 1: E phi0 + W1(t) E phi0 - E W1(0) phi0
    a_log = im_l + v_log[None, :]
    a_phase = np.exp(-1j * re_l) * v_phase[None, :]
    b_log, b_phase = _pair_sum(
        w1_log + a_log[:, None, :], w1_phase * a_phase[:, None, :], axis=2)
    w0_phi = w1[0] @ phi0
    w0_log, w0_phase = _canonical(np.zeros(n), w0_phi)
    c_log = im_l + w0_log[None, :]
    c_phase = -np.exp(-1j * re_l) * w0_phase[None, :]
    t1_log, t1_phase = _pair_sum(
        np.stack([a_log, b_log, c_log]),
        np.stack([a_phase, b_phase, c_phase]),
        axis=0,
    )

    terms = [(t1_log, t1_phase)]
    eps = 0.0 if pert is None else float(pert.epsilon)
    if pert is not None and eps > 0.0:
        dh = sample_perturbation(pert, times)  # (K, N, N); eps kept explicit
        dht = np.einsum("kab,kbc,kcd->kad", frame.inverse_frames, dh, frame.frames)
        comm = np.einsum("kab,kbc->kac", w1, dht) - np.einsum(
            "kab,kbc->kac", dht, w1)
        dht_log, dht_phase = _canonical(np.zeros_like(dht, dtype=float), dht)
        comm_log, comm_phase = _canonical(np.zeros_like(comm, dtype=float), comm)

        i1_log, i1_phase = _prefix_integral(
            times, im_l, re_l, dht_log, dht_phase, v_log, v_phase, t1_window)
        log_eps = np.log(eps)
        terms.append((i1_log + log_eps, -1j * i1_phase))  # term 2

        t3_log, t3_phase = _pair_sum(
            w1_log + i1_log[:, None, :], w1_phase * i1_phase[:, None, :], axis=2)
        terms.append((t3_log + log_eps, -1j * t3_phase))  # term 3

        i2_log, i2_phase = _prefix_integral(
            times, im_l, re_l, dht_log, dht_phase, w0_log, w0_phase, t1_window)
        terms.append((i2_log + log_eps, 1j * i2_phase))  # term 4

        i3_log, i3_phase = _prefix_integral(
            times, im_l, re_l, comm_log, comm_phase, v_log, v_phase, t1_window)
        terms.append((i3_log + log_eps, 1j * i3_phase))  # term 5

    phi_log, phi_phase = _pair_sum(
        np.stack([t[0] for t in terms]),
        np.stack([t[1] for t in terms]),
        axis=0,
    )

    # normalized coefficients and populations from the scaled amplitudes
    shift = np.max(phi_log, axis=1, keepdims=True)
    shift = np.where(np.isfinite(shift), shift, 0.0)
    coeffs = phi_phase * np.exp(phi_log - shift)
    norms = np.linalg.norm(coeffs, axis=1, keepdims=True)
    coeffs = coeffs / norms
    populations = np.abs(coeffs) ** 2
    populations = populations / populations.sum(axis=1, keepdims=True)

    breakdown = None
    if want_breakdown:
        names = ["term1", "term2", "term3", "term4", "term5"]
        breakdown = {
            name: _pair_vector_norm(t_log, t_phase)
            for name, (t_log, t_phase) in zip(names, terms)
        }
    return coeffs, populations, breakdown


def naive_series(frame: SpectralFrame, phi0, include_lambda1: bool = False
                 ) -> PredictionSeries:
    """Noiseless adiabatic-theorem prediction on the frame grid.

    ``phi0`` holds initial eigenbasis coefficients, i.e. ``U^-1(0) psi0``
    (any overall complex scale; populations are scale-invariant).
    """
    coeffs, populations, _ = _evaluate(
        frame, phi0, None, include_lambda1, None, False)
    return PredictionSeries(
        times=frame.times.copy(),
        coeffs=coeffs,
        populations=populations,
        method="naive",
        labels=frame.labels,
    )


def advanced_series(
    frame: SpectralFrame,
    phi0,
    pert: PerturbationSpec,
    include_lambda1: bool = False,
    t1_window: tuple | None = None,
    term_breakdown: bool = True,
) -> PredictionSeries:
    """Noise-aware five-term prediction on the frame grid.

    At ``pert.epsilon = 0`` this reduces exactly to :func:`naive_series`.
    ``t1_window = (lo, hi)`` restricts the drive-injection integrals to
    t1 in [lo, hi], which isolates which stretch of the trajectory
    determines the conversion outcome.
    """
    if pert is None:
        raise ArgumentError("advanced_series needs a PerturbationSpec "
                            "(use epsilon=0 for the noiseless limit)")
    coeffs, populations, breakdown = _evaluate(
        frame, phi0, pert, include_lambda1, t1_window, term_breakdown)
    return PredictionSeries(
        times=frame.times.copy(),
        coeffs=coeffs,
        populations=populations,
        method="advanced",
        labels=frame.labels,
        epsilon=float(pert.epsilon),
        term_breakdown=breakdown,
    )


def delta_h_tilde(frame: SpectralFrame, pert: PerturbationSpec, t: float
                  ) -> np.ndarray:
    """The drive in the instantaneous eigenbasis, ``U^-1(t) dH(t) U(t)``,
    at a frame grid point (no epsilon factor)."""
    k = frame.index_of_time(t)
    dh = sample_perturbation(pert, t)
    return frame.inverse_frames[k] @ dh @ frame.frames[k]


def export_csv(series: PredictionSeries, path) -> None:
    """Same row layout as the history populations, plus a method tag."""
    header = ["t", "method"] + [f"p_{lbl}" for lbl in series.labels]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k, t in enumerate(series.times):
            row = [repr(float(t)), series.method]
            row += [repr(float(p)) for p in series.populations[k]]
            writer.writerow(row)
