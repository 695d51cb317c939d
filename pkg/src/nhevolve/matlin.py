"""Dense complex linear algebra for small matrices (N <= 8).

Matrices and vectors are plain ``numpy.ndarray`` values of dtype
``complex128``; :func:`as_cmatrix` / :func:`as_cvector` validate shape and
finiteness on entry.  The 2x2 eigenproblem and matrix exponential are
solved in closed form (the quadratic formula keeps eigenvalue branches
smooth near exceptional points, where iterative solvers get noisy); larger
sizes are delegated to LAPACK via numpy/scipy behind the same contracts.

All functions are pure; returned arrays are freshly allocated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    ArgumentError,
    ConvergenceError,
    MagnitudeError,
    NearEPError,
    SingularMatrixError,
)

MAX_DIM = 8

#: Frames whose eigenvector matrix has a 2-norm condition number above this
#: are rejected as effectively defective (too close to an exceptional point).
EP_CONDITION_CAP = 1e8

#: Default relative residual bound for eigendecompositions.
EIG_RESIDUAL_TOL = 1e-9

#: Default condition-estimate cap for matrix inversion.
INV_CONDITION_CAP = 1e12

#: Infinity-norm bound beyond which exp() entries could overflow float64.
EXP_NORM_CAP = 700.0


def as_cmatrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return ``a`` as a square complex128 matrix."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ArgumentError(f"{name} must be a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(float))):
        raise ArgumentError(f"{name} has non-finite entries")
    return m.copy()


def as_cvector(v, name: str = "vector") -> np.ndarray:
    """Validate and return ``v`` as a complex128 vector."""
    w = np.asarray(v, dtype=complex)
    if w.ndim != 1 or w.shape[0] < 1:
        raise ArgumentError(f"{name} must be a 1-d vector, got shape {w.shape}")
    if not np.all(np.isfinite(w.view(float))):
        raise ArgumentError(f"{name} has non-finite entries")
    return w.copy()


@dataclass(frozen=True)
class EigenDecomposition:
    """Right eigendecomposition ``A @ right_vectors = right_vectors @ diag(values)``.

    Columns of ``right_vectors`` have unit Euclidean norm with the phase of
    the largest-magnitude component fixed real-positive (a local gauge; the
    spectral module re-gauges for continuity along a path).
    ``residual`` is the Frobenius norm of ``A V - V diag``.
    """

    values: np.ndarray
    right_vectors: np.ndarray
    residual: float


def mat_mul(a, b) -> np.ndarray:
    """Matrix product with dimension checking."""
    am = as_cmatrix(a, "a")
    bm = as_cmatrix(b, "b")
    if am.shape != bm.shape:
        raise ArgumentError(f"dimension mismatch: {am.shape} vs {bm.shape}")
    return am @ bm


def mat_inv(a, cond_cap: float = INV_CONDITION_CAP) -> np.ndarray:
    """Inverse of a well-conditioned square matrix.

    Raises
    ------
    SingularMatrixError
        If the matrix is singular or its condition estimate exceeds
        ``cond_cap``; the estimate is attached to the exception.
    """
    m = as_cmatrix(a)
    try:
        cond = float(np.linalg.cond(m))
    except np.linalg.LinAlgError:
        cond = np.inf
    if not np.isfinite(cond) or cond > cond_cap:
        raise SingularMatrixError(
            f"matrix is singular or too ill-conditioned (estimate {cond:.3e}, "
            f"cap {cond_cap:.1e})",
            condition=cond,
        )
    return np.linalg.inv(m)


def _fix_column_phases(vectors: np.ndarray) -> np.ndarray:
    """Unit-normalize columns and make the largest-|.| component real-positive."""
    v = vectors / np.linalg.norm(vectors, axis=0, keepdims=True)
    for n in range(v.shape[1]):
        j = int(np.argmax(np.abs(v[:, n])))
        phase = v[j, n] / abs(v[j, n])
        v[:, n] = v[:, n] / phase
    return v


def _eig_2x2(m: np.ndarray):
    """Closed-form eigenpairs of a 2x2 matrix.

    The branch is fixed so the first eigenvalue is ``mean + sqrt(disc)``
    with the principal square root; for the traceless trajectory
    Hamiltonians this is the branch continuously deformable from
    ``+sqrt(1 + (delta + i g)^2)``.
    """
    (a, b), (c, d) = m
    mean = 0.5 * (a + d)
    disc = 0.25 * (a - d) ** 2 + b * c
    root = np.sqrt(disc + 0j)
    values = np.array([mean + root, mean - root])

    scale = max(np.max(np.abs(m)), 1.0)
    if abs(b) < 1e-14 * scale and abs(c) < 1e-14 * scale:
        # already diagonal; eigenvectors are the basis columns
        order = [0, 1] if abs(a - values[0]) <= abs(d - values[0]) else [1, 0]
        vectors = np.eye(2, dtype=complex)[:, order]
        return values, vectors

    vectors = np.empty((2, 2), dtype=complex)
    for k, lam in enumerate(values):
        # two candidate rows of (A - lam I); take the better-conditioned one
        cand1 = np.array([b, lam - a])
        cand2 = np.array([lam - d, c])
        v = cand1 if np.linalg.norm(cand1) >= np.linalg.norm(cand2) else cand2
        nrm = np.linalg.norm(v)
        if nrm < 1e-300:
            raise NearEPError("2x2 matrix is defective (coincident eigenvectors)")
        vectors[:, k] = v / nrm
    return values, vectors


def eig_general(
    a,
    residual_tol: float = EIG_RESIDUAL_TOL,
    ep_cond_cap: float = EP_CONDITION_CAP,
) -> EigenDecomposition:
    """Eigendecomposition of a general (possibly non-Hermitian) matrix.

    N = 2 uses the closed-form quadratic; N > 2 goes through LAPACK's
    Hessenberg-reduction + shifted-QR path (``numpy.linalg.eig``).

    Raises
    ------
    NearEPError
        If the eigenvector matrix condition number exceeds ``ep_cond_cap``,
        i.e. the matrix is defective up to tolerance.
    ConvergenceError
        If the residual invariant ``|A V - V diag|_F < residual_tol |A|_F``
        cannot be met.
    """
    m = as_cmatrix(a)
    n = m.shape[0]
    if n > MAX_DIM:
        raise ArgumentError(f"matrix dimension {n} exceeds supported maximum {MAX_DIM}")

    if n == 1:
        return EigenDecomposition(m[0].copy(), np.ones((1, 1), dtype=complex), 0.0)
    if n == 2:
        values, vectors = _eig_2x2(m)
    else:
        try:
            values, vectors = np.linalg.eig(m)
        except np.linalg.LinAlgError as exc:  # QR iteration failed
            raise ConvergenceError(f"eigensolver did not converge: {exc}") from exc

    vectors = _fix_column_phases(vectors)

    cond = float(np.linalg.cond(vectors))
    if not np.isfinite(cond) or cond > ep_cond_cap:
        raise NearEPError(
            f"eigenvector frame condition {cond:.3e} exceeds {ep_cond_cap:.1e}: "
            "matrix is defective up to tolerance (near an exceptional point)",
            condition=cond,
        )

    norm_a = np.linalg.norm(m)
    residual = float(np.linalg.norm(m @ vectors - vectors * values[None, :]))
    if residual > residual_tol * max(norm_a, 1e-300):
        raise ConvergenceError(
            f"eigendecomposition residual {residual:.3e} exceeds "
            f"{residual_tol:.1e} * |A|_F = {residual_tol * norm_a:.3e}"
        )
    return EigenDecomposition(values, vectors, residual)


def expm_2x2_batch(ms: np.ndarray) -> np.ndarray:
    """exp() of a batch of 2x2 matrices, shape (..., 2, 2), in closed form.

    Splits off the trace and uses ``exp(B) = cosh(mu) I + sinh(mu)/mu B``
    for traceless ``B`` with ``B^2 = mu^2 I``; ``sinh(mu)/mu`` is evaluated
    by series for small ``|mu|``.
    """
    ms = np.asarray(ms, dtype=complex)
    tr = ms[..., 0, 0] + ms[..., 1, 1]
    b = ms - 0.5 * tr[..., None, None] * np.eye(2)
    mu2 = b[..., 0, 0] ** 2 + b[..., 0, 1] * b[..., 1, 0]
    mu = np.sqrt(mu2)
    small = np.abs(mu) < 1e-6
    safe = np.where(small, 1.0, mu)
    sinc = np.where(small, 1.0 + mu2 / 6.0 + mu2 * mu2 / 120.0, np.sinh(safe) / safe)
    out = np.cosh(mu)[..., None, None] * np.eye(2) + sinc[..., None, None] * b
    return np.exp(0.5 * tr)[..., None, None] * out


def mat_exp(a) -> np.ndarray:
    """Matrix exponential; closed form for N = 2, scaling-and-squaring above.

    Raises
    ------
    MagnitudeError
        If ``|a|_inf`` is large enough that exp() entries could overflow;
        the caller is expected to pre-scale (split the time step).
    """
    m = as_cmatrix(a)
    n = m.shape[0]
    if n > MAX_DIM:
        raise ArgumentError(f"matrix dimension {n} exceeds supported maximum {MAX_DIM}")
    if np.linalg.norm(m, np.inf) > EXP_NORM_CAP:
        raise MagnitudeError(
            f"|a|_inf = {np.linalg.norm(m, np.inf):.3e} exceeds {EXP_NORM_CAP}: "
            "exponential would overflow; pre-scale the argument"
        )
    if n == 2:
        return expm_2x2_batch(m[None])[0]
    return scipy.linalg.expm(m)
