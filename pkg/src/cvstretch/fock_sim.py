"""Truncated Fock-space numerics for the stretching protocol.

Single-mode operators are ``(cutoff+1) x (cutoff+1)`` matrices in the number
basis ``|0>, ..., |cutoff>``. Displacement matrix elements use the closed
Laguerre form, evaluated in log space so rectangular blocks reaching far
beyond the working cutoff stay finite.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import expm
from scipy.special import eval_genlaguerre, gammaln, roots_hermite

from .channels import ChannelKind
from .errors import ConvergenceError, ValidationError

DEFAULT_CUTOFF = 40
NORM_CAPTURE = 1e-6
TMSS_TAIL = 1e-14


@dataclass(frozen=True, eq=False)
class FockVector:
    cutoff: int
    modes: int
    amplitudes: np.ndarray
    norm_deficit: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != (self.cutoff + 1) ** self.modes:
            raise ValidationError("amplitude vector does not match cutoff and mode count")
        if np.vdot(amps, amps).real > 1 + 1e-9:
            raise ValidationError("Fock vector norm exceeds one")
        object.__setattr__(self, "amplitudes", amps)

    def density(self) -> "FockOperator":
        return FockOperator(self.cutoff, self.modes, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class FockOperator:
    cutoff: int
    modes: int
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        dim = (self.cutoff + 1) ** self.modes
        if mat.shape != (dim, dim):
            raise ValidationError(f"operator shape {mat.shape} does not match dimension {dim}")
        object.__setattr__(self, "matrix", mat)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def check_density(self, herm_tol: float = 1e-10, psd_tol: float = 1e-9) -> None:
        """Raise unless the matrix is Hermitian, PSD and has trace at most one."""
        mat = self.matrix
        if not np.allclose(mat, mat.conj().T, atol=herm_tol, rtol=0):
            raise ValidationError("density matrix is not Hermitian")
        if np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))[0] < -psd_tol:
            raise ValidationError("density matrix is not positive semidefinite")
        if self.trace > 1 + psd_tol:
            raise ValidationError("density matrix trace exceeds one")


def _log_factorial(n):
    return gammaln(np.asarray(n, dtype=float) + 1.0)


def displacement_block(beta: complex, n_rows: int, n_cols: int) -> np.ndarray:
    """Matrix elements ``<m|D(beta)|n>`` for ``m < n_rows``, ``n < n_cols``.

    Every entry is exact (no truncation of intermediate sums), so any
    rectangular block can be requested.
    """
    beta = complex(beta)
    m = np.arange(n_rows)[:, None]
    n = np.arange(n_cols)[None, :]
    if beta == 0:
        return np.eye(n_rows, n_cols, dtype=complex)
    r2 = abs(beta) ** 2
    lo = np.minimum(m, n)
    hi = np.maximum(m, n)
    k = hi - lo
    log_mag = 0.5 * (_log_factorial(lo) - _log_factorial(hi)) + k * math.log(abs(beta)) - 0.5 * r2
    lag = eval_genlaguerre(lo, k, r2)
    # below the diagonal the phase comes from beta^k, above from (-conj(beta))^k
    phase_angle = np.where(m >= n, k * np.angle(beta), k * np.angle(-beta.conjugate()))
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.exp(log_mag + 1j * phase_angle) * lag
    if not np.all(np.isfinite(out)):
        raise ConvergenceError(f"displacement matrix elements overflowed for |beta| = {abs(beta):.3g}")
    return out


def displacement_matrix(beta: complex, cutoff: int = DEFAULT_CUTOFF) -> FockOperator:
    """Truncated ``D(beta)``; unitary on the low-photon block only."""
    return FockOperator(cutoff, 1, displacement_block(beta, cutoff + 1, cutoff + 1))


def make_ket(kind: str, cutoff: int = DEFAULT_CUTOFF, *, n: int = 0, alpha: complex = 0.0, xi: float | None = None) -> FockVector:
    """Fock-state, coherent or two-mode squeezed ket truncated at ``cutoff``.

    The truncation loss ``1 - <psi|psi>`` is stored in ``norm_deficit``; a
    warning is issued when it exceeds ``1e-6``.
    """
    if cutoff < 0:
        raise ValidationError("cutoff must be non-negative")
    idx = np.arange(cutoff + 1)
    if kind == "fock":
        if not 0 <= n <= cutoff:
            raise ValidationError(f"photon number {n} outside [0, {cutoff}]")
        amps = np.zeros(cutoff + 1, dtype=complex)
        amps[n] = 1.0
        modes = 1
    elif kind == "coherent":
        alpha = complex(alpha)
        if alpha == 0:
            amps = np.zeros(cutoff + 1, dtype=complex)
            amps[0] = 1.0
        else:
            log_abs = -0.5 * abs(alpha) ** 2 + idx * math.log(abs(alpha)) - 0.5 * _log_factorial(idx)
            amps = np.exp(log_abs + 1j * idx * np.angle(alpha))
        modes = 1
    elif kind == "tmss":
        if xi is None or not 0.0 < xi < 1.0:
            raise ValidationError(f"squeezing parameter xi must lie in (0, 1), got {xi}")
        amps = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
        amps[idx, idx] = tmss_coefficients(xi, cutoff + 1)
        amps = amps.reshape(-1)
        modes = 2
    else:
        raise ValidationError(f"unknown ket kind {kind!r}")
    deficit = max(0.0, 1.0 - float(np.vdot(amps, amps).real))
    if deficit > NORM_CAPTURE:
        warnings.warn(f"cutoff {cutoff} captures only 1 - {deficit:.2e} of the norm", RuntimeWarning, stacklevel=2)
    return FockVector(cutoff, modes, amps, deficit)


def tmss_coefficients(xi: float, size: int) -> np.ndarray:
    """Schmidt coefficients ``sqrt(1 - xi^2) xi^n`` of ``tmss(xi)``, ``n < size``."""
    return math.sqrt(1.0 - xi * xi) * xi ** np.arange(size)


def tmss_rows_needed(xi: float, tail: float = TMSS_TAIL) -> int:
    """Smallest ``L`` with ``xi^(2L) <= tail``: tmss mass beyond ``L`` photons."""
    return max(1, int(math.ceil(math.log(tail) / (2.0 * math.log(xi)))))


def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), 1).astype(complex)


# ---------------------------------------------------------------------------
# channel action by unitary dilation


@lru_cache(maxsize=64)
def _beamsplitter_kraus(eta: float, cutoff: int) -> np.ndarray:
    """``A[k, n-k, n] = <n-k, k| U_BS |n, 0>`` with ``cos^2(theta) = eta``.

    ``U_BS = exp(theta (a^dag b - a b^dag))`` conserves total photon number,
    so it is exponentiated block by block.
    """
    theta = math.acos(math.sqrt(eta))
    kraus = np.zeros((cutoff + 1, cutoff + 1, cutoff + 1))
    for total in range(cutoff + 1):
        j = np.arange(total + 1)
        gen = np.zeros((total + 1, total + 1))
        # basis |total-j, j>
        up = theta * np.sqrt((total - j[:-1]) * (j[:-1] + 1.0))
        gen[j[1:], j[:-1]] = -up
        gen[j[:-1], j[1:]] = up
        col = expm(gen)[:, 0]
        kraus[j, total - j, total] = col
    return kraus


@lru_cache(maxsize=64)
def _squeezer_kraus(kappa: float, cutoff: int, ladder: int) -> np.ndarray:
    """``B[j, n+j, n] = <n+j, j| U_TMS |n, 0>`` with ``cosh^2(r) = kappa``.

    ``U_TMS = exp(r (a^dag b^dag - a b))`` conserves ``n_a - n_b``; each ladder
    ``|n+j, j>`` is exponentiated truncated at ``ladder`` rungs.
    """
    r = math.acosh(math.sqrt(kappa))
    kraus = np.zeros((cutoff + 1, cutoff + 1, cutoff + 1))
    for n in range(cutoff + 1):
        j = np.arange(ladder)
        gen = np.zeros((ladder, ladder))
        up = r * np.sqrt((n + j[:-1] + 1.0) * (j[:-1] + 1.0))
        gen[j[1:], j[:-1]] = up
        gen[j[:-1], j[1:]] = -up
        col = expm(gen)[:, 0]
        keep = n + j <= cutoff
        kraus[j[keep], (n + j)[keep], n] = col[keep]
    return kraus


def _apply_kraus(kraus: np.ndarray, rho: np.ndarray) -> np.ndarray:
    out = np.einsum("kij,jl,kml->im", kraus, rho, kraus.conj(), optimize=True)
    return 0.5 * (out + out.conj().T)


def _random_displacement(rho: np.ndarray, var_x: float, var_p: float, nodes: int = 40) -> np.ndarray:
    """Average ``D(beta) rho D(beta)^dag`` over Gaussian quadrature shifts.

    The mean shifts by ``(dx, dp)`` with variances ``var_x`` and ``var_p``;
    the Gaussian average is evaluated by Gauss-Hermite quadrature.
    """
    t, w = roots_hermite(nodes)
    w = w / math.sqrt(math.pi)
    xs = [(0.0, 1.0)] if var_x == 0 else list(zip(math.sqrt(2.0 * var_x) * t, w))
    ps = [(0.0, 1.0)] if var_p == 0 else list(zip(math.sqrt(2.0 * var_p) * t, w))
    dim = rho.shape[0]
    out = np.zeros_like(rho)
    for dx, wx in xs:
        for dp, wp in ps:
            if wx * wp < 1e-300:
                continue
            d = displacement_block(complex(dx, dp) / math.sqrt(2.0), dim, dim)
            out += (wx * wp) * (d @ rho @ d.conj().T)
    return 0.5 * (out + out.conj().T)


def apply_channel_fock(kind: ChannelKind, rho: FockOperator, cutoff: int | None = None) -> FockOperator:
    """Apply a standard channel to a single-mode density matrix.

    Loss: beam splitter with a vacuum ancilla. Amplification: two-mode
    squeezer with a vacuum ancilla. Excess noise ``N`` and additive noise:
    Gaussian-weighted random displacement. Ancillas are traced out; the output
    is truncated at ``cutoff`` (default: the input cutoff).
    """
    if rho.modes != 1:
        raise ValidationError("apply_channel_fock acts on single-mode operators")
    cutoff = rho.cutoff if cutoff is None else cutoff
    mat = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
    c = min(cutoff, rho.cutoff)
    mat[: c + 1, : c + 1] = rho.matrix[: c + 1, : c + 1]
    if kind.tag == "identity":
        out = mat
    elif kind.is_loss:
        out = _apply_kraus(_beamsplitter_kraus(kind.eta, cutoff), mat)
    elif kind.tag == "amplifier":
        if kind.gain == 1.0:
            out = mat
        else:
            tanh2 = 1.0 - 1.0 / kind.gain
            ladder = cutoff + 1 + int(math.ceil(math.log(1e-18) / math.log(tanh2)))
            out = _apply_kraus(_squeezer_kraus(kind.gain, cutoff, ladder), mat)
    elif kind.tag == "additive_noise":
        out = _random_displacement(mat, kind.noise, 0.0)
    else:
        raise ValidationError(f"unsupported channel kind {kind.tag!r}")
    if kind.excess_noise > 0:
        out = _random_displacement(out, kind.excess_noise, kind.excess_noise)
    return FockOperator(cutoff, 1, out)


# ---------------------------------------------------------------------------
# CV-Bell projection


def bell_kraus(beta: complex, xi: float, n_in: int, n_out: int) -> np.ndarray:
    """Operator ``T`` with ``T rho T^dag = <Phi_beta| rho (x) psi_xi |Phi_beta>``.

    The Bell functional ``<Phi_beta| = (2 pi)^(-1/2) sum_n <n|<n| (1 (x) D(-conj(beta)))``
    is contracted against the Schmidt form of ``tmss(xi)``, giving
    ``T[m, n] = (2 pi)^(-1/2) c_m <n|D(-conj(beta))|m>`` for the first ``n_out``
    output rows. The ``-conj(beta)`` label makes a coherent input ``|a>``
    land on ``|xi (a + beta)>``.
    """
    coeff = tmss_coefficients(xi, n_out)
    d = displacement_block(-complex(beta).conjugate(), n_in, n_out)
    return (d * coeff[None, :]).T / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class BellProjection:
    weight: float
    state: FockOperator
    weight_error: float
    tail_mass: float


def bell_project(beta: complex, xi: float, rho_in: FockOperator, cutoff_out: int | None = None) -> BellProjection:
    """Unnormalised CV-Bell projection of ``rho_in (x) tmss(xi)`` onto outcome ``beta``.

    Returns the outcome weight (a density with respect to ``dx dp``), Bob's
    normalised conditional state truncated at ``cutoff_out``, a bound on the
    relative weight error from truncating the tmss at the internal row count,
    and the conditional-state mass lost above ``cutoff_out``.
    """
    if rho_in.modes != 1:
        raise ValidationError("bell_project takes a single-mode input")
    if not 0.0 < xi < 1.0:
        raise ValidationError(f"squeezing parameter xi must lie in (0, 1), got {xi}")
    cutoff_out = rho_in.cutoff if cutoff_out is None else cutoff_out
    rows = max(cutoff_out + 1, tmss_rows_needed(xi))
    T = bell_kraus(beta, xi, rho_in.cutoff + 1, rows)
    full = T @ rho_in.matrix @ T.conj().T
    weight = float(np.trace(full).real)
    bound = (1.0 - xi * xi) / (2.0 * math.pi) * xi ** (2 * rows) * rho_in.trace
    rel = bound / weight if weight > 0 else math.inf
    if rel > 1e-4:
        raise ConvergenceError(f"Bell projection weight is starved by truncation (relative error {rel:.2e})")
    out = full[: cutoff_out + 1, : cutoff_out + 1] / weight
    out = 0.5 * (out + out.conj().T)
    tail = max(0.0, 1.0 - float(np.trace(out).real))
    return BellProjection(weight, FockOperator(cutoff_out, 1, out), rel, tail)


# ---------------------------------------------------------------------------
# stretching integral


@dataclass(frozen=True)
class Grid:
    """Square quadrature grid in ``(x, p)`` with ``beta = (x + i p)/sqrt(2)``."""

    radius: float
    step: float
    center: tuple[float, float] = (0.0, 0.0)

    @property
    def half_width(self) -> int:
        """Number of steps from the centre to the edge."""
        return int(math.ceil(self.radius / self.step - 1e-12))

    def points(self, half_width: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        n = self.half_width if half_width is None else half_width
        i = np.arange(-n, n + 1)
        ii, jj = np.meshgrid(i, i, indexing="ij")
        return ii.reshape(-1), jj.reshape(-1)

    def beta(self, i, j) -> np.ndarray:
        x = self.center[0] + self.step * np.asarray(i)
        p = self.center[1] + self.step * np.asarray(j)
        return (x + 1j * p) / math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class StretchResult:
    rho: FockOperator
    trace: float
    grid: Grid
    step_history: list = field(default_factory=list)
    tmss_rows: int = 0
    input_tail: float = 0.0


def fock_mean(rho: FockOperator) -> complex:
    """``<a>`` for a single-mode density matrix."""
    return complex(np.trace(rho.matrix @ annihilation(rho.cutoff)))


def fock_moments(rho: FockOperator) -> tuple[np.ndarray, np.ndarray]:
    """Mean and symmetrised covariance of ``(x, p)``; normalised by the trace."""
    a = annihilation(rho.cutoff)
    x = (a + a.conj().T) / math.sqrt(2.0)
    p = (a - a.conj().T) / (1j * math.sqrt(2.0))
    tr = rho.trace
    ops = (x, p)
    mean = np.array([np.trace(rho.matrix @ o).real / tr for o in ops])
    cov = np.empty((2, 2))
    for r, o1 in enumerate(ops):
        for s, o2 in enumerate(ops):
            sym = 0.5 * (o1 @ o2 + o2 @ o1)
            cov[r, s] = np.trace(rho.matrix @ sym).real / tr - mean[r] * mean[s]
    return mean, cov


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("CVSTRETCH_THREADS", "1")))
    except ValueError:
        return 1


def stretch_integrand(plan, beta: complex, rho_in: FockOperator, rows: int | None = None, direct_cutoff: int | None = None) -> np.ndarray:
    """One grid-point term of the stretching integral, on the input cutoff.

    By default the correction ``D(-g beta)`` is moved through the resource
    channel, ``D(-g b) R(X) D(g b) = R(D(-s b) X D(s b))`` with
    ``s = g / gain(R)``, and the *pre-channel* term ``D(-s b) T X T^dag D(s b)``
    is returned; the resource channel is applied once after integration.

    With ``direct_cutoff`` the literal term ``D(-g b) R(T rho T^dag) D(g b)``
    is evaluated at that (large) cutoff instead, for cross-checking.
    """
    from .stretching import correction_scale

    c = rho_in.cutoff
    beta = complex(beta)
    if direct_cutoff is not None:
        T = bell_kraus(beta, plan.xi, c + 1, direct_cutoff + 1)
        cond = FockOperator(direct_cutoff, 1, T @ rho_in.matrix @ T.conj().T)
        out = apply_channel_fock(plan.resource_channel, cond).matrix
        if plan.post_channel is not None:
            out = apply_channel_fock(plan.post_channel, FockOperator(direct_cutoff, 1, out)).matrix
        corr = displacement_block(-plan.gain * beta, c + 1, direct_cutoff + 1)
        return corr @ out @ corr.conj().T
    rows = tmss_rows_needed(plan.xi) if rows is None else rows
    s = correction_scale(plan)
    T = bell_kraus(beta, plan.xi, c + 1, rows)
    back = displacement_block(-s * beta, c + 1, rows)
    M = back @ T
    return M @ rho_in.matrix @ M.conj().T


def _grid_sum(plan, rho_in: FockOperator, betas: np.ndarray, rows: int) -> np.ndarray:
    def term(b):
        return stretch_integrand(plan, b, rho_in, rows=rows)

    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            terms = list(pool.map(term, betas))
    else:
        terms = [term(b) for b in betas]
    if not terms:
        return np.zeros_like(rho_in.matrix)
    # np.sum over the leading axis uses pairwise summation in a fixed order
    return np.sum(np.stack(terms), axis=0)


def default_grid(xi: float, rho_in: FockOperator) -> Grid:
    """Grid centred on the expected outcome, radius five outcome standard deviations."""
    mean, cov = fock_moments(rho_in)
    c = (1.0 + xi * xi) / (1.0 - xi * xi)
    spread = math.sqrt(max(cov[0, 0], cov[1, 1]) + 0.5 * c)
    return Grid(radius=5.0 * spread, step=spread, center=(-mean[0], -mean[1]))


def integrate_stretch(plan, rho_in: FockOperator, grid: Grid | None = None, *, tol: float = 1e-4, max_halvings: int = 4, fixed_step: bool = False) -> StretchResult:
    """Evaluate the outcome-integrated protocol output on a uniform ``(x, p)`` grid.

    Computes ``sum_grid D(-g b) R(T_b rho T_b^dag) D(g b) * step^2`` with the
    correction carried through the resource channel (see
    :func:`stretch_integrand`). Unless ``fixed_step`` is set the step is halved
    until successive results differ by less than ``tol`` in trace distance;
    nested grids reuse the previous points.

    Raises:
        ConvergenceError: the step did not converge or the trace is off by
            more than ``1e-3``.
    """
    if rho_in.modes != 1:
        raise ValidationError("integrate_stretch takes a single-mode input")
    grid = default_grid(plan.xi, rho_in) if grid is None else grid
    if grid.radius <= 0 or grid.step <= 0:
        raise ValidationError("grid radius and step must be positive")
    rows = tmss_rows_needed(plan.xi)

    step = grid.step
    n = grid.half_width
    level = Grid(grid.radius, step, grid.center)
    i, j = level.points(n)
    raw = _grid_sum(plan, rho_in, level.beta(i, j), rows)
    current = raw * step * step
    history = [(step, None)]
    if not fixed_step:
        converged = False
        for _ in range(max_halvings):
            step, n = step / 2.0, 2 * n
            level = Grid(grid.radius, step, grid.center)
            i, j = level.points(n)
            new = (i % 2 != 0) | (j % 2 != 0)
            raw = raw + _grid_sum(plan, rho_in, level.beta(i[new], j[new]), rows)
            candidate = raw * step * step
            change = trace_distance(candidate, current)
            history.append((step, change))
            current = candidate
            if change < tol:
                converged = True
                break
        if not converged:
            raise ConvergenceError(f"grid step did not converge (last change {history[-1][1]:.2e} >= {tol})")
        grid = Grid(n * step, step, grid.center)

    pre = FockOperator(rho_in.cutoff, 1, 0.5 * (current + current.conj().T))
    out = apply_channel_fock(plan.resource_channel, pre)
    if plan.post_channel is not None:
        out = apply_channel_fock(plan.post_channel, out)
    trace = out.trace
    if abs(trace - 1.0) > 1e-3:
        raise ConvergenceError(f"integrated output trace {trace:.6f} deviates from 1 by more than 1e-3")
    tail = float(np.real(rho_in.matrix[-1, -1]))
    return StretchResult(out, trace, grid, history, rows, tail)


# ---------------------------------------------------------------------------
# distances


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    diff = a - b
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(a) b sqrt(a)))^2``."""
    ra = _psd_sqrt(a)
    inner = ra @ b @ ra
    w = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)


def distance(rho1: FockOperator, rho2: FockOperator, metric: str = "trace") -> float:
    """Trace distance ``(1/2)||rho1 - rho2||_1`` or Uhlmann fidelity."""
    if rho1.matrix.shape != rho2.matrix.shape or rho1.modes != rho2.modes:
        raise ValidationError("operators have different dimensions")
    if metric == "trace":
        return trace_distance(rho1.matrix, rho2.matrix)
    if metric == "fidelity":
        return fidelity(rho1.matrix, rho2.matrix)
    raise ValidationError(f"unknown metric {metric!r}")
