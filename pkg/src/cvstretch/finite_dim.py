"""Exact finite-dimensional teleportation stretching with the Weyl-Heisenberg set.

Operators are plain ``numpy`` arrays. Teleportation corrections are indexed by
``k = (a, b)`` with ``sigma_k = X^a Z^b``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

TP_TOL = 1e-12


def weyl(d: int, a: int, b: int) -> np.ndarray:
    """``X^a Z^b`` with ``X|j> = |j+1 mod d>`` and ``Z|j> = w^j |j>``, ``w = exp(2 pi i/d)``."""
    if d < 2:
        raise ValidationError("dimension must be at least 2")
    if not (0 <= a < d and 0 <= b < d):
        raise ValidationError(f"Weyl indices ({a}, {b}) out of range for d = {d}")
    X = np.roll(np.eye(d), 1, axis=0)
    Z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return np.linalg.matrix_power(X, a) @ np.linalg.matrix_power(Z, b)


def weyl_indices(d: int) -> list[tuple[int, int]]:
    return list(itertools.product(range(d), repeat=2))


def teleport(rho: np.ndarray, k: tuple[int, int], d: int) -> np.ndarray:
    """State delivered on outcome ``k``: ``sigma_k rho sigma_k^dag``.

    Each outcome occurs with probability ``1/d^2``; that weight is not included.
    """
    s = weyl(d, *k)
    return s @ rho @ s.conj().T


def check_kraus(kraus, d: int) -> list[np.ndarray]:
    ops = [np.asarray(K, dtype=complex) for K in kraus]
    if not ops or any(K.shape != (d, d) for K in ops):
        raise ValidationError(f"Kraus operators must be {d}x{d} matrices")
    total = sum(K.conj().T @ K for K in ops)
    if not np.allclose(total, np.eye(d), atol=TP_TOL, rtol=0):
        raise ValidationError("Kraus operators are not trace preserving")
    return ops


def apply_kraus(kraus, rho: np.ndarray) -> np.ndarray:
    return sum(K @ rho @ K.conj().T for K in kraus)


@dataclass(frozen=True)
class StretchCertificate:
    stretchable: bool
    corrections: dict | None


def stretch_check(kraus, d: int, tol: float = 1e-10) -> StretchCertificate:
    """Search Weyl corrections ``U_k`` with ``E(sigma_k rho sigma_k^dag) = U_k E(rho) U_k^dag``.

    Equality is tested on the ``d^2`` matrix units, which suffices by
    linearity. Global phases of ``U_k`` drop out of the conjugation, so the
    Weyl set itself is the full candidate list.
    """
    ops = check_kraus(kraus, d)
    units = []
    for i, j in itertools.product(range(d), repeat=2):
        e = np.zeros((d, d), dtype=complex)
        e[i, j] = 1.0
        units.append(e)
    images = [apply_kraus(ops, e) for e in units]
    candidates = {k: weyl(d, *k) for k in weyl_indices(d)}
    corrections = {}
    for k, s in candidates.items():
        lhs = [apply_kraus(ops, s @ e @ s.conj().T) for e in units]
        for kk, u in candidates.items():
            if all(np.allclose(l, u @ im @ u.conj().T, atol=tol, rtol=0) for l, im in zip(lhs, images)):
                corrections[k] = kk
                break
        else:
            return StretchCertificate(False, None)
    return StretchCertificate(True, corrections)


def max_entangled(d: int) -> np.ndarray:
    """Normalised ``sum_j |j>|j> / sqrt(d)``."""
    return np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)


def choi_finite(kraus, d: int) -> np.ndarray:
    """``(I (x) E)(phi_0)`` for the normalised maximally entangled ``phi_0``."""
    ops = check_kraus(kraus, d)
    phi = max_entangled(d)
    rho = np.outer(phi, phi.conj())
    out = sum(np.kron(np.eye(d), K) @ rho @ np.kron(np.eye(d), K).conj().T for K in ops)
    return out / np.trace(out).real


def bell_state(d: int, k: tuple[int, int]) -> np.ndarray:
    """``(1 (x) conj(sigma_k)) |phi_0>``, chosen so that outcome ``k`` transfers ``sigma_k``."""
    return np.kron(np.eye(d), weyl(d, *k).conj()) @ max_entangled(d)


def simulate_stretching(kraus, rho: np.ndarray, d: int, corrections: dict) -> np.ndarray:
    """Run the LOCC protocol on ``rho (x) choi_finite(E)`` and return Bob's averaged output.

    Alice measures ``A A'`` in the Bell basis; Bob applies ``U_k^dag`` for the
    correction ``U_k = sigma_{corrections[k]}``.
    """
    resource = choi_finite(kraus, d)
    joint = np.kron(rho, resource).reshape((d,) * 6)
    out = np.zeros((d, d), dtype=complex)
    for k in weyl_indices(d):
        phi = bell_state(d, k).reshape(d, d)
        # <phi_k|_{AA'} joint |phi_k>_{AA'}
        cond = np.einsum("ab,abcdef,de->cf", phi.conj(), joint, phi)
        u = weyl(d, *corrections[k])
        out += u.conj().T @ cond @ u
    return out


def depolarizing(p: float, d: int = 2) -> list[np.ndarray]:
    """``rho -> (1-p) rho + p I/d`` as a Weyl mixture."""
    if not 0 <= p <= 1:
        raise ValidationError("depolarizing probability must be in [0, 1]")
    probs = np.full(d * d, p / d**2)
    probs[0] += 1 - p
    return weyl_channel(probs, d)


def weyl_channel(probs, d: int) -> list[np.ndarray]:
    """Mixture ``sum_k p_k sigma_k rho sigma_k^dag``; ``probs`` ordered by ``k = a*d + b``.

    For ``d = 2`` this is the Pauli channel with ``(p_I, p_X, p_Z, p_XZ)``.
    """
    probs = np.asarray(probs, dtype=float)
    if probs.shape != (d * d,) or np.any(probs < 0) or abs(probs.sum() - 1) > TP_TOL:
        raise ValidationError(f"need {d * d} non-negative probabilities summing to one")
    return [np.sqrt(p) * weyl(d, a, b) for p, (a, b) in zip(probs, weyl_indices(d)) if p > 0]


def amplitude_damping(gamma: float) -> list[np.ndarray]:
    if not 0 <= gamma <= 1:
        raise ValidationError("damping rate must be in [0, 1]")
    return [
        np.array([[1.0, 0.0], [0.0, np.sqrt(1 - gamma)]], dtype=complex),
        np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]], dtype=complex),
    ]
