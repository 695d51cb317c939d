"""Instantaneous eigenframes along a trajectory.

Builds, on a uniform time grid, the branch-tracked eigenvalues
``lambda_n(t_k)``, continuity-gauged right-eigenvector frames ``U(t_k)``
and their inverses, the cumulative integrals
``Lambda_n(t) = int_0^t lambda_n``, the non-adiabatic generator
``X1 = i U^-1 dU/dt`` and its first-order offspring ``W1`` and
``lambda1``.  Frames are always built from the unperturbed H(t); the fast
drive enters the predictors separately.

Branch labels are matched between neighbouring grid points by maximal
eigenvector overlap (eigenvalues nearly collide on the interesting
trajectories while the eigenvectors stay distinguishable away from
exceptional points), and each eigenvector's phase is chosen to maximize
the real part of its overlap with its predecessor so that dU/dt is
numerically smooth.  Populations are moduli squared of eigenbasis
coefficients and do not depend on this gauge.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ArgumentError, BranchAmbiguityError, NearEPError
from .matlin import EP_CONDITION_CAP, as_cvector, _fix_column_phases
from .models import HamiltonianPath, closed_form_eigvals, sample_h_batch

#: Two branch overlaps closer than this make the greedy matching ambiguous.
BRANCH_OVERLAP_MARGIN = 1e-3

#: Relative Frobenius residual allowed for H = U D U^-1 at every grid point.
RECONSTRUCTION_TOL = 1e-8

MIN_GRID_POINTS = 100


@dataclass(eq=False)
class SpectralFrame:
    """Per-grid-point spectral data along a path.

    Arrays are indexed ``[k]`` for the grid point and ``[k, n]`` /
    ``[k, m, n]`` for branch indices; ``labels[n]`` names branch ``n``
    ("+"/"-" for two-level paths).  ``Lambda``, ``X1``, ``W1`` and
    ``lambda1`` are filled by :func:`cumulative_lambda`,
    :func:`compute_x1` and :func:`compute_w1` (run by default from
    :func:`build_frame`).
    """

    path: HamiltonianPath
    times: np.ndarray
    lambdas: np.ndarray
    frames: np.ndarray
    inverse_frames: np.ndarray
    labels: tuple
    Lambda: np.ndarray | None = None
    X1: np.ndarray | None = None
    W1: np.ndarray | None = None
    lambda1: np.ndarray | None = None
    notes: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.lambdas.shape[1]

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def branch_index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ArgumentError(f"unknown branch label {label!r}; have {self.labels}")

    def index_of_time(self, t: float) -> int:
        """Grid index of t, or ArgumentError if t is not a grid point."""
        k = int(np.argmin(np.abs(self.times - t)))
        tol = 1e-9 * max(1.0, float(np.max(np.abs(self.times))))
        if abs(self.times[k] - t) > tol:
            raise ArgumentError(f"t = {t} is not on the frame grid")
        return k

    def initial_state(self, label: str) -> np.ndarray:
        """The instantaneous eigenvector of the labelled branch at t_start."""
        return self.frames[0][:, self.branch_index(label)].copy()


def _initial_order(path: HamiltonianPath, values: np.ndarray):
    """Branch ordering and labels at the first grid point."""
    n = len(values)
    if path.kind == "circle2x2":
        delta, g = path.trajectory.delta_g(path.t_start)
        lam_p, _ = closed_form_eigvals(delta, g)
        order = [0, 1] if abs(values[0] - lam_p) <= abs(values[1] - lam_p) else [1, 0]
        return order, ("+", "-")
    # generic: descending real part, then descending imaginary part
    order = sorted(range(n), key=lambda i: (-values[i].real, -values[i].imag))
    labels = ("+", "-") if n == 2 else tuple(str(i) for i in range(n))
    return list(order), labels


def _greedy_match(prev_vectors: np.ndarray, vectors: np.ndarray, k: int):
    """Permutation aligning ``vectors`` columns with ``prev_vectors`` columns.

    Greedy on sorted |<n_prev|m_cur>| overlaps; raises if the winning
    overlap is within BRANCH_OVERLAP_MARGIN of a conflicting alternative.
    """
    n = vectors.shape[1]
    overlap = np.abs(prev_vectors.conj().T @ vectors)
    perm = [-1] * n
    rows_free = set(range(n))
    cols_free = set(range(n))
    flat = sorted(
        ((overlap[r, c], r, c) for r in range(n) for c in range(n)),
        key=lambda x: -x[0],
    )
    for val, r, c in flat:
        if r not in rows_free or c not in cols_free:
            continue
        rivals = [overlap[r, cc] for cc in cols_free if cc != c]
        rivals += [overlap[rr, c] for rr in rows_free if rr != r]
        if rivals and val - max(rivals) < BRANCH_OVERLAP_MARGIN:
            raise BranchAmbiguityError(
                f"branch matching ambiguous at grid point {k}: overlap "
                f"{val:.6f} vs rival {max(rivals):.6f}",
                grid_index=k,
            )
        perm[r] = c
        rows_free.remove(r)
        cols_free.remove(c)
    return perm


def build_frame(
    path: HamiltonianPath,
    grid_points: int,
    span: tuple | None = None,
    complete: bool = True,
    ep_cond_cap: float = EP_CONDITION_CAP,
) -> SpectralFrame:
    """Eigendecompose H(t) on a uniform grid and track branches along it.

    Parameters
    ----------
    grid_points : int
        Number of intervals M; the grid has M + 1 points.  M >= 100.
    span : (float, float), optional
        Sub-interval of the path domain; defaults to the full domain.
    complete : bool
        Also fill Lambda, X1, W1 and lambda1 (the usual case).

    Raises
    ------
    NearEPError
        If any grid point's eigenvector frame is too ill-conditioned.
    BranchAmbiguityError
        If overlap matching cannot label a grid point, or tracked
        eigenvalues jump by more than half the local spectral gap.
    """
    m = int(grid_points)
    if m < MIN_GRID_POINTS:
        raise ArgumentError(f"grid_points must be >= {MIN_GRID_POINTS}, got {m}")
    t0, t1 = span if span is not None else (path.t_start, path.t_end)
    if not t1 > t0:
        raise ArgumentError(f"empty span ({t0}, {t1})")
    times = np.linspace(t0, t1, m + 1)

    hs = sample_h_batch(path, times)
    values, vectors = np.linalg.eig(hs)
    vectors = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)

    conds = np.linalg.cond(vectors)
    worst = int(np.argmax(conds))
    if not np.all(np.isfinite(conds)) or conds[worst] > ep_cond_cap:
        raise NearEPError(
            f"eigenframe at t = {times[worst]:.6g} has condition "
            f"{conds[worst]:.3e} > {ep_cond_cap:.1e}: trajectory passes too "
            "close to an exceptional or degeneracy point",
            condition=float(conds[worst]),
        )

    order, labels = _initial_order(path, values[0])
    values[0] = values[0][order]
    vectors[0] = vectors[0][:, order]
    vectors[0] = _fix_column_phases(vectors[0])

    for k in range(1, m + 1):
        perm = _greedy_match(vectors[k - 1], vectors[k], k)
        values[k] = values[k][perm]
        vectors[k] = vectors[k][:, perm]
        for n in range(path.dim):
            z = np.vdot(vectors[k - 1][:, n], vectors[k][:, n])
            if abs(z) < 1e-12:
                raise BranchAmbiguityError(
                    f"vanishing eigenvector overlap at grid point {k}", grid_index=k)
            vectors[k][:, n] *= np.conj(z) / abs(z)

    # tracked eigenvalues must move much less than the local spectral gap
    if path.dim > 1:
        pair = np.abs(values[:, :, None] - values[:, None, :])
        np.einsum("kii->ki", pair)[:] = np.inf
        min_gap = pair.min(axis=2)
        jump = np.abs(np.diff(values, axis=0))
        bad = jump >= 0.5 * min_gap[:-1]
        if np.any(bad):
            k_bad = int(np.argwhere(bad)[0, 0]) + 1
            raise BranchAmbiguityError(
                f"tracked eigenvalue jump at grid point {k_bad} exceeds half "
                "the spectral gap; refine the grid",
                grid_index=k_bad,
            )

    inverse = np.linalg.inv(vectors)

    recon = np.einsum("kab,kb,kbc->kac", vectors, values, inverse)
    res = np.linalg.norm(hs - recon, axis=(1, 2))
    scale = np.maximum(np.linalg.norm(hs, axis=(1, 2)), 1e-300)
    if np.any(res > RECONSTRUCTION_TOL * scale):
        k_bad = int(np.argmax(res / scale))
        raise NearEPError(
            f"H reconstruction residual {res[k_bad]:.3e} at t = "
            f"{times[k_bad]:.6g} exceeds {RECONSTRUCTION_TOL:.1e} * |H|",
        )

    frame = SpectralFrame(
        path=path,
        times=times,
        lambdas=values,
        frames=vectors,
        inverse_frames=inverse,
        labels=labels,
    )
    if complete:
        cumulative_lambda(frame)
        compute_x1(frame)
        compute_w1(frame)
    return frame


def cumulative_lambda(frame: SpectralFrame) -> SpectralFrame:
    """Fill ``Lambda_n(t_k) = int_{t_0}^{t_k} lambda_n`` (trapezoid rule)."""
    lam = frame.lambdas
    out = np.zeros_like(lam)
    out[1:] = cumulative_trapezoid(lam, frame.times, axis=0)
    frame.Lambda = out
    return frame


def compute_x1(frame: SpectralFrame) -> SpectralFrame:
    """Fill the non-adiabatic generator ``X1 = i U^-1 dU/dt``.

    dU/dt uses second-order central differences (one-sided at the ends),
    matching the trapezoid integrator's order.  Expressed in the physical
    time variable, X1 is independent of the grid spacing for a fixed path.
    """
    u = frame.frames
    h = frame.times[1] - frame.times[0]
    du = np.empty_like(u)
    du[1:-1] = (u[2:] - u[:-2]) / (2.0 * h)
    du[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h)
    du[-1] = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * h)
    frame.X1 = 1j * np.einsum("kab,kbc->kac", frame.inverse_frames, du)
    return frame


def compute_w1(frame: SpectralFrame, gap_tol: float = 1e-8) -> SpectralFrame:
    """Fill ``W1_mn = X1_mn / (lambda_m - lambda_n)`` (zero diagonal) and the
    eigenvalue corrections ``lambda1_n = -X1_nn``.

    Raises NearEPError if any spectral gap falls below
    ``gap_tol * max|lambda|``.
    """
    if frame.X1 is None:
        compute_x1(frame)
    lam = frame.lambdas
    gap = lam[:, :, None] - lam[:, None, :]
    off = ~np.eye(frame.dim, dtype=bool)
    floor = gap_tol * max(float(np.max(np.abs(lam))), 1e-300)
    if np.any(np.abs(gap[:, off]) < floor):
        raise NearEPError(
            f"spectral gap below {floor:.3e} somewhere on the grid; "
            "W1 denominators are unreliable this close to a degeneracy")
    w1 = np.zeros_like(frame.X1)
    w1[:, off] = frame.X1[:, off] / gap[:, off]
    frame.W1 = w1
    frame.lambda1 = -np.einsum("knn->kn", frame.X1).copy()
    return frame


def eigenbasis_coefficients(frame: SpectralFrame, t: float, psi) -> np.ndarray:
    """Coefficients ``U^-1(t) psi`` normalized to unit sum of |.|^2."""
    psi = as_cvector(psi, "psi")
    k = frame.index_of_time(t)
    c = frame.inverse_frames[k] @ psi
    return c / np.linalg.norm(c)


def export_csv(frame: SpectralFrame, path) -> None:
    """One row per grid point: t, Re/Im lambda_n, Re/Im Lambda_n per branch."""
    if frame.Lambda is None:
        cumulative_lambda(frame)
    header = ["t"]
    for lbl in frame.labels:
        header += [f"re_lambda_{lbl}", f"im_lambda_{lbl}"]
    for lbl in frame.labels:
        header += [f"re_Lambda_{lbl}", f"im_Lambda_{lbl}"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k, t in enumerate(frame.times):
            row = [repr(float(t))]
            for n in range(frame.dim):
                row += [repr(float(frame.lambdas[k, n].real)),
                        repr(float(frame.lambdas[k, n].imag))]
            for n in range(frame.dim):
                row += [repr(float(frame.Lambda[k, n].real)),
                        repr(float(frame.Lambda[k, n].imag))]
            writer.writerow(row)
