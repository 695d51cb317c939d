"""Hamiltonian families, trajectory parametrizations, and fast perturbations.

The workhorse family is the traceless complex-symmetric 2x2 Hamiltonian

    H(delta, g) = [[delta + i g, -1], [-1, -delta - i g]]

with eigenvalues ``+-sqrt(1 + (delta + i g)^2)`` and exceptional points at
(delta, g) = (0, +-1).  A trajectory moves (delta, g) on a circle of radius
R around (delta0, g0) at angular rate omega, starting at phase phi:

    delta(t) = delta0 - R sin(omega t + phi)
    g(t)     = g0     - R cos(omega t + phi)

A :class:`PerturbationSpec` adds the fast drive
``eps * cos(Omega t) * coupling`` on top of any path.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .matlin import as_cmatrix

#: Exceptional points of the circle2x2 family, as (delta, g) pairs.
EXCEPTIONAL_POINTS = ((0.0, 1.0), (0.0, -1.0))

#: Slowness ratio above which the adiabatic assumption is reported as shaky.
SLOWNESS_WARN_THRESHOLD = 0.1


@dataclass(frozen=True)
class TrajectorySpec:
    """Circle trajectory in the (delta, g) parameter plane."""

    delta0: float
    g0: float
    radius: float
    total_time: float
    omega: float
    phi: float

    def __post_init__(self):
        if not self.total_time > 0:
            raise ArgumentError(f"total_time must be positive, got {self.total_time}")
        if self.radius < 0:
            raise ArgumentError(f"radius must be >= 0, got {self.radius}")

    def delta_g(self, t):
        """(delta(t), g(t)); accepts scalars or arrays."""
        theta = self.omega * np.asarray(t, dtype=float) + self.phi
        return self.delta0 - self.radius * np.sin(theta), self.g0 - self.radius * np.cos(theta)


def default_coupling() -> np.ndarray:
    """Off-diagonal-ones coupling matrix of the standard fast drive."""
    return np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


@dataclass(frozen=True, eq=False)
class PerturbationSpec:
    """Fast deterministic drive ``eps * cos(Omega t) * coupling``."""

    epsilon: float
    drive_freq: float
    coupling: np.ndarray = field(default_factory=default_coupling)

    def __post_init__(self):
        if self.epsilon < 0:
            raise ArgumentError(f"epsilon must be >= 0, got {self.epsilon}")
        object.__setattr__(self, "coupling", as_cmatrix(self.coupling, "coupling"))


@dataclass(frozen=True, eq=False)
class HamiltonianPath:
    """A time-parametrized Hamiltonian t -> H(t) over a finite domain.

    Construct through :meth:`circle`, :meth:`landau_zener`, or
    :meth:`from_table`; instances are immutable and shareable.
    """

    kind: str
    dim: int
    t_start: float
    t_end: float
    trajectory: TrajectorySpec | None = None
    lz_slope: float = 0.0
    lz_coupling: float = 0.0
    table_times: np.ndarray | None = None
    table_matrices: np.ndarray | None = None
    perturbation: PerturbationSpec | None = None

    @classmethod
    def circle(cls, trajectory: TrajectorySpec, perturbation: PerturbationSpec | None = None):
        return cls(
            kind="circle2x2",
            dim=2,
            t_start=0.0,
            t_end=trajectory.total_time,
            trajectory=trajectory,
            perturbation=perturbation,
        )

    @classmethod
    def landau_zener(cls, slope: float, coupling: float, window: float,
                     perturbation: PerturbationSpec | None = None):
        """Linear-sweep two-level crossing over t in [-window/2, window/2]."""
        if slope <= 0 or coupling <= 0 or window <= 0:
            raise ArgumentError("landau_zener requires slope, coupling, window > 0")
        return cls(
            kind="landau_zener",
            dim=2,
            t_start=-window / 2,
            t_end=window / 2,
            lz_slope=slope,
            lz_coupling=coupling,
            perturbation=perturbation,
        )

    @classmethod
    def from_table(cls, times, matrices, perturbation: PerturbationSpec | None = None):
        """Linear entrywise interpolation of sampled matrices."""
        ts = np.asarray(times, dtype=float)
        ms = np.asarray(matrices, dtype=complex)
        if ts.ndim != 1 or len(ts) < 2:
            raise ArgumentError("sampled_table needs at least two time points")
        if np.any(np.diff(ts) <= 0):
            raise ArgumentError("sampled_table times must be strictly increasing")
        if ms.ndim != 3 or ms.shape[0] != len(ts) or ms.shape[1] != ms.shape[2]:
            raise ArgumentError(
                f"matrices must have shape (len(times), N, N), got {ms.shape}")
        if not np.all(np.isfinite(ms.view(float))):
            raise ArgumentError("sampled_table matrices have non-finite entries")
        return cls(
            kind="sampled_table",
            dim=ms.shape[1],
            t_start=float(ts[0]),
            t_end=float(ts[-1]),
            table_times=ts.copy(),
            table_matrices=ms.copy(),
            perturbation=perturbation,
        )

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


def _check_domain(path: HamiltonianPath, ts: np.ndarray):
    tol = 1e-9 * max(1.0, abs(path.t_start), abs(path.t_end))
    if np.any(ts < path.t_start - tol) or np.any(ts > path.t_end + tol):
        raise ArgumentError(
            f"time outside the path domain [{path.t_start}, {path.t_end}]")


def sample_h_batch(path: HamiltonianPath, ts, include_perturbation: bool = False) -> np.ndarray:
    """Sample H(t) (optionally plus the fast drive) at many times at once.

    Returns an array of shape ``(len(ts), N, N)``.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    _check_domain(path, ts)
    if path.kind == "circle2x2":
        delta, g = path.trajectory.delta_g(ts)
        z = delta + 1j * g
        h = np.zeros((len(ts), 2, 2), dtype=complex)
        h[:, 0, 0] = z
        h[:, 1, 1] = -z
        h[:, 0, 1] = -1.0
        h[:, 1, 0] = -1.0
    elif path.kind == "landau_zener":
        h = np.zeros((len(ts), 2, 2), dtype=complex)
        h[:, 0, 0] = 0.5 * path.lz_slope * ts
        h[:, 1, 1] = -0.5 * path.lz_slope * ts
        h[:, 0, 1] = path.lz_coupling
        h[:, 1, 0] = path.lz_coupling
    elif path.kind == "sampled_table":
        tt, mm = path.table_times, path.table_matrices
        idx = np.clip(np.searchsorted(tt, ts, side="right") - 1, 0, len(tt) - 2)
        w = (ts - tt[idx]) / (tt[idx + 1] - tt[idx])
        w = np.clip(w, 0.0, 1.0)[:, None, None]
        h = (1.0 - w) * mm[idx] + w * mm[idx + 1]
    else:  # pragma: no cover - constructors forbid this
        raise ArgumentError(f"unknown path kind {path.kind!r}")

    if include_perturbation and path.perturbation is not None:
        pert = path.perturbation
        drive = pert.epsilon * np.cos(pert.drive_freq * ts)
        h = h + drive[:, None, None] * pert.coupling[None, :, :]
    return h


def sample_h(path: HamiltonianPath, t: float) -> np.ndarray:
    """H(t) without the fast perturbation.  Raises outside the domain."""
    return sample_h_batch(path, [t])[0]


def sample_perturbation(spec: PerturbationSpec, t) -> np.ndarray:
    """The bare drive ``cos(Omega t) * coupling`` (no epsilon factor)."""
    t = np.asarray(t, dtype=float)
    out = np.cos(spec.drive_freq * t)[..., None, None] * spec.coupling
    return out


def closed_form_eigvals(delta, g):
    """Eigenvalue pair (lambda_+, lambda_-) of the circle2x2 Hamiltonian.

    lambda_+ is the principal branch of ``sqrt(1 + (delta + i g)^2)``;
    lambda_- = -lambda_+.  Accepts scalars or arrays.
    """
    z = np.asarray(delta, dtype=float) + 1j * np.asarray(g, dtype=float)
    lam = np.sqrt(1.0 + z * z)
    return lam, -lam


def slowness_diagnostic(path: HamiltonianPath, grid_points: int = 1001,
                        warn: bool = True) -> float:
    """max over the trajectory of |omega| / |lambda_+ - lambda_-|.

    The slow-evolution assumption requires this to be << 1.  Returns NaN
    for path kinds with no circle parametrization.  Warns above
    ``SLOWNESS_WARN_THRESHOLD`` unless ``warn`` is False.
    """
    if path.kind != "circle2x2":
        return float("nan")
    ts = np.linspace(path.t_start, path.t_end, grid_points)
    delta, g = path.trajectory.delta_g(ts)
    lam_p, lam_m = closed_form_eigvals(delta, g)
    gap = np.abs(lam_p - lam_m)
    ratio = float(np.max(abs(path.trajectory.omega) / np.maximum(gap, 1e-300)))
    if warn and ratio > SLOWNESS_WARN_THRESHOLD:
        warnings.warn(
            f"slowness ratio {ratio:.3g} exceeds {SLOWNESS_WARN_THRESHOLD}: "
            "the trajectory is not slow relative to the spectral gap",
            stacklevel=2,
        )
    return ratio
