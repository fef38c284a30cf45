"""Gaussian states as (mean, covariance) pairs and covariance-level utilities.

Conventions used throughout the package:

* quadratures are ordered ``(x_1, p_1, ..., x_n, p_n)``;
* ``x = (a + a^dagger)/sqrt(2)`` so the vacuum has covariance ``I/2``;
* a coherent state ``|alpha>`` has mean ``sqrt(2) * (Re alpha, Im alpha)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ValidationError

SIGMA = np.array([[0.0, 1.0], [-1.0, 0.0]])
ID2 = np.eye(2)

SYMMETRY_TOL = 1e-12
PHYSICALITY_TOL = 1e-10


def omega(n_modes: int) -> np.ndarray:
    """Block-diagonal symplectic form with ``n_modes`` copies of ``SIGMA``."""
    if n_modes < 1:
        raise ValidationError("number of modes must be positive")
    return np.kron(np.eye(n_modes), SIGMA)


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class GaussianState:
    """First and second moments of an ``n``-mode Gaussian state.

    Construction checks symmetry of ``cov`` and the uncertainty principle
    ``cov >= i*Omega/2`` through the symplectic spectrum.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = _frozen(self.mean).reshape(-1)
        cov = _frozen(self.cov)
        if mean.size == 0 or mean.size % 2:
            raise ValidationError("mean must have even, non-zero length")
        if cov.shape != (mean.size, mean.size):
            raise ValidationError(
                f"covariance shape {cov.shape} does not match mean length {mean.size}"
            )
        if not np.allclose(cov, cov.T, atol=SYMMETRY_TOL, rtol=0):
            raise ValidationError("covariance matrix is not symmetric")
        nu = symplectic_spectrum(cov)
        # rounding in the spectrum grows like eps * |cov|^2 for large squeezing
        tol = max(PHYSICALITY_TOL, 64 * np.finfo(float).eps * np.abs(cov).max() ** 2)
        if nu[0] < 0.5 - tol:
            raise ValidationError(
                f"covariance violates the uncertainty principle (min symplectic eigenvalue {nu[0]:.3g})"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2

    def mode_slice(self, mode: int) -> slice:
        _check_mode(mode, self.n_modes)
        return slice(2 * mode, 2 * mode + 2)

    def allclose(self, other: "GaussianState", atol: float = 1e-12) -> bool:
        return (
            self.n_modes == other.n_modes
            and np.allclose(self.mean, other.mean, atol=atol, rtol=0)
            and np.allclose(self.cov, other.cov, atol=atol, rtol=0)
        )


def _check_mode(mode: int, n_modes: int) -> None:
    if not 0 <= mode < n_modes:
        raise ValidationError(f"mode {mode} out of range for a {n_modes}-mode state")


def tmss_moments(xi: float) -> tuple[float, float]:
    """Return ``(c, s)`` with ``c = (1+xi^2)/(1-xi^2)`` and ``s = 2 xi/(1-xi^2)``."""
    if not 0.0 < xi < 1.0:
        raise ValidationError(f"squeezing parameter xi must lie in (0, 1), got {xi}")
    den = 1.0 - xi * xi
    return (1.0 + xi * xi) / den, 2.0 * xi / den


def make_state(kind: str, n_modes: int | None = None, *, alpha: complex = 0.0, xi: float | None = None) -> GaussianState:
    """Build a standard Gaussian state.

    Args:
        kind: ``"vacuum"``, ``"coherent"`` or ``"tmss"``.
        n_modes: mode count. Defaults to 1 for vacuum/coherent and 2 for tmss;
            only the vacuum accepts more than one mode.
        alpha: coherent amplitude.
        xi: two-mode squeezing parameter in ``(0, 1)``.
    """
    if n_modes is not None and n_modes < 1:
        raise ValidationError("number of modes must be positive")
    if kind == "vacuum":
        n = 1 if n_modes is None else n_modes
        return GaussianState(np.zeros(2 * n), 0.5 * np.eye(2 * n))
    if kind == "coherent":
        if n_modes not in (None, 1):
            raise ValidationError("coherent states are single-mode")
        alpha = complex(alpha)
        return GaussianState(np.sqrt(2.0) * np.array([alpha.real, alpha.imag]), 0.5 * ID2)
    if kind == "tmss":
        if n_modes not in (None, 2):
            raise ValidationError("two-mode squeezed states have exactly two modes")
        if xi is None:
            raise ValidationError("tmss requires xi")
        c, s = tmss_moments(xi)
        z = np.diag([1.0, -1.0])
        cov = 0.5 * np.block([[c * ID2, s * z], [s * z, c * ID2]])
        return GaussianState(np.zeros(4), cov)
    raise ValidationError(f"unknown state kind {kind!r}")


def displace(state: GaussianState, mode: int, beta: complex) -> GaussianState:
    """Apply ``D(beta)`` on one mode: shifts the mean by ``sqrt(2)*(Re beta, Im beta)``."""
    sl = state.mode_slice(mode)
    beta = complex(beta)
    mean = state.mean.copy()
    mean[sl] += np.sqrt(2.0) * np.array([beta.real, beta.imag])
    return GaussianState(mean, state.cov)


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(mat)
    if w[0] <= 0:
        raise ValidationError("covariance matrix must be positive definite")
    return (v * np.sqrt(w)) @ v.T


def symplectic_spectrum(cov) -> np.ndarray:
    """Symplectic eigenvalues of a covariance matrix, ascending.

    Uses the Hermitian matrix ``i * S Omega S`` with ``S = cov^{1/2}``, which is
    similar to ``i Omega cov`` and has spectrum ``{+-nu_k}``.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
        raise ValidationError("covariance must be a square matrix of even size")
    if not np.allclose(cov, cov.T, atol=SYMMETRY_TOL, rtol=0):
        raise ValidationError("covariance matrix is not symmetric")
    n = cov.shape[0] // 2
    root = _psd_sqrt(0.5 * (cov + cov.T))
    herm = 1j * root @ omega(n) @ root
    ev = np.linalg.eigvalsh(0.5 * (herm + herm.conj().T))
    return np.sort(ev[n:])


def partial_transpose(cov, modes: Iterable[int]) -> np.ndarray:
    """Flip the sign of the momentum quadrature of ``modes`` (time reversal)."""
    cov = np.asarray(cov, dtype=float)
    flip = np.ones(cov.shape[0])
    for m in modes:
        flip[2 * m + 1] = -1.0
    return cov * np.outer(flip, flip)


def log_negativity(state: GaussianState, partition) -> float:
    """Logarithmic negativity (base 2) across the cut ``partition | rest``.

    Args:
        state: Gaussian state with at least two modes.
        partition: iterable of mode indices (or a single index) to transpose.
    """
    if isinstance(partition, (int, np.integer)):
        partition = [int(partition)]
    modes = sorted(set(int(m) for m in partition))
    if not modes or len(modes) >= state.n_modes:
        raise ValidationError("partition must be a non-empty proper subset of the modes")
    for m in modes:
        _check_mode(m, state.n_modes)
    nu = symplectic_spectrum(partial_transpose(state.cov, modes))
    return float(np.sum(np.maximum(0.0, -np.log2(2.0 * nu))))
