"""Single-mode Gaussian channels in the ``(K, m, alpha)`` triplet picture.

A channel maps first and second moments as ``d -> K^T d + m`` and
``cov -> K^T cov K + alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .errors import ValidationError
from .gaussian_core import ID2, PHYSICALITY_TOL, SIGMA, GaussianState, make_state

CLASSIFY_TOL = 1e-10
KINDS = ("pure_loss", "thermal_loss", "amplifier", "additive_noise", "identity", "other")


@dataclass(frozen=True)
class ChannelKind:
    """Tagged standard-form channel description.

    ``eta`` is the loss transmissivity, ``gain`` the amplifier gain ``kappa``,
    ``excess_noise`` the extra isotropic noise ``N`` and ``noise`` the
    single-quadrature variance of an additive-noise channel.
    """

    tag: str
    eta: float | None = None
    gain: float | None = None
    excess_noise: float = 0.0
    noise: float | None = None

    def __post_init__(self):
        if self.tag not in KINDS:
            raise ValidationError(f"unknown channel kind {self.tag!r}")
        if self.excess_noise < 0:
            raise ValidationError("excess noise N must be >= 0")
        if self.tag in ("pure_loss", "thermal_loss"):
            if self.eta is None or not 0.0 < self.eta < 1.0:
                raise ValidationError(f"loss transmissivity eta must lie in (0, 1), got {self.eta}")
            if self.tag == "pure_loss" and self.excess_noise != 0.0:
                raise ValidationError("pure_loss carries no excess noise; use thermal_loss")
        elif self.tag == "amplifier":
            if self.gain is None or self.gain < 1.0:
                raise ValidationError(f"amplifier gain kappa must be >= 1, got {self.gain}")
        elif self.tag == "additive_noise":
            if self.noise is None or self.noise < 0:
                raise ValidationError(f"additive noise nu must be >= 0, got {self.noise}")

    @classmethod
    def pure_loss(cls, eta: float) -> "ChannelKind":
        return cls("pure_loss", eta=float(eta))

    @classmethod
    def thermal_loss(cls, eta: float, excess_noise: float = 0.0) -> "ChannelKind":
        return cls("thermal_loss", eta=float(eta), excess_noise=float(excess_noise))

    @classmethod
    def amplifier(cls, gain: float, excess_noise: float = 0.0) -> "ChannelKind":
        return cls("amplifier", gain=float(gain), excess_noise=float(excess_noise))

    @classmethod
    def additive_noise(cls, noise: float) -> "ChannelKind":
        return cls("additive_noise", noise=float(noise))

    @classmethod
    def identity(cls) -> "ChannelKind":
        return cls("identity")

    @property
    def is_loss(self) -> bool:
        return self.tag in ("pure_loss", "thermal_loss")

    def isclose(self, other: "ChannelKind", tol: float = 1e-9) -> bool:
        """Compare kinds, treating thermal_loss with N = 0 as pure_loss."""
        if self.is_loss and other.is_loss:
            return abs(self.eta - other.eta) <= tol and abs(self.excess_noise - other.excess_noise) <= tol
        if self.tag != other.tag:
            return False
        for a, b in ((self.gain, other.gain), (self.noise, other.noise)):
            if (a is None) != (b is None) or (a is not None and abs(a - b) > tol):
                return False
        return abs(self.excess_noise - other.excess_noise) <= tol

    def to_dict(self) -> dict[str, Any]:
        if self.is_loss:
            return {"kind": self.tag, "eta": self.eta, "excess_noise": self.excess_noise}
        if self.tag == "amplifier":
            return {"kind": "amplifier", "gain": self.gain, "excess_noise": self.excess_noise}
        if self.tag == "additive_noise":
            return {"kind": "additive_noise", "noise": self.noise}
        return {"kind": self.tag}


def _det2(a: np.ndarray) -> float:
    return float(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])


def _min_eig_sym2(a: np.ndarray) -> float:
    half_tr = 0.5 * float(a[0, 0] + a[1, 1])
    half_diff = 0.5 * float(a[0, 0] - a[1, 1])
    return half_tr - math.hypot(half_diff, float(a[0, 1]))


@dataclass(frozen=True, eq=False)
class GaussianChannelTriplet:
    """Triplet ``(K, m, alpha)``; ``alpha`` must be symmetric PSD.

    Physicality of the pair ``(K, alpha)`` is not enforced here so that
    unphysical candidates can be represented and tested with :func:`is_physical`.
    """

    K: np.ndarray
    m: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        K = np.array(self.K, dtype=float)
        m = np.array(self.m, dtype=float).reshape(-1)
        alpha = np.array(self.alpha, dtype=float)
        if K.shape != (2, 2) or alpha.shape != (2, 2) or m.shape != (2,):
            raise ValidationError("triplet needs K and alpha of shape (2, 2) and m of length 2")
        if not abs(alpha[0, 1] - alpha[1, 0]) <= 1e-12:
            raise ValidationError("alpha must be symmetric")
        if _min_eig_sym2(alpha) < -1e-12:
            raise ValidationError("alpha must be positive semidefinite")
        for arr in (K, m, alpha):
            arr.setflags(write=False)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "alpha", alpha)

    def allclose(self, other: "GaussianChannelTriplet", atol: float = 1e-12) -> bool:
        return all(
            np.allclose(a, b, atol=atol, rtol=0)
            for a, b in ((self.K, other.K), (self.m, other.m), (self.alpha, other.alpha))
        )

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "triplet", "K": self.K.tolist(), "m": self.m.tolist(), "alpha": self.alpha.tolist()}


def make_channel(kind: ChannelKind) -> GaussianChannelTriplet:
    """Triplet of a standard-form channel (``m = 0`` throughout)."""
    zero = np.zeros(2)
    if kind.is_loss:
        eta = kind.eta
        return GaussianChannelTriplet(math.sqrt(eta) * ID2, zero, ((1 - eta) / 2 + kind.excess_noise) * ID2)
    if kind.tag == "amplifier":
        k = kind.gain
        return GaussianChannelTriplet(math.sqrt(k) * ID2, zero, ((k - 1) / 2 + kind.excess_noise) * ID2)
    if kind.tag == "additive_noise":
        return GaussianChannelTriplet(ID2, zero, np.diag([kind.noise, 0.0]))
    if kind.tag == "identity":
        return GaussianChannelTriplet(ID2, zero, np.zeros((2, 2)))
    raise ValidationError("kind 'other' has no canonical triplet")


def is_physical(channel: GaussianChannelTriplet) -> tuple[bool, float]:
    """Complete-positivity test for a single-mode triplet.

    For 2x2 matrices ``K^T sigma K = det(K) sigma``, so the matrix condition
    ``alpha >= (i/2)(sigma - K^T sigma K)`` reduces to
    ``2 sqrt(det alpha) >= |1 - det K|`` together with ``alpha >= 0``.

    Returns:
        ``(ok, margin)`` with ``margin = 2 sqrt(det alpha) - |1 - det K|``.
    """
    det_a = _det2(channel.alpha)
    margin = 2.0 * math.sqrt(max(det_a, 0.0)) - abs(1.0 - _det2(channel.K))
    psd = _min_eig_sym2(channel.alpha) >= -1e-12
    return bool(psd and margin >= -PHYSICALITY_TOL), margin


def _require_physical(channel: GaussianChannelTriplet) -> None:
    ok, margin = is_physical(channel)
    if not ok:
        raise ValidationError(f"channel is not physical (margin {margin:.3g} < 0)")


def apply(channel: GaussianChannelTriplet, state: GaussianState, mode: int = 0) -> GaussianState:
    """Act with ``channel`` on one mode of ``state``; other modes are untouched."""
    _require_physical(channel)
    sl = state.mode_slice(mode)
    n = 2 * state.n_modes
    K = np.eye(n)
    K[sl, sl] = channel.K
    alpha = np.zeros((n, n))
    alpha[sl, sl] = channel.alpha
    m = np.zeros(n)
    m[sl] = channel.m
    cov = K.T @ state.cov @ K + alpha
    return GaussianState(K.T @ state.mean + m, 0.5 * (cov + cov.T))


def compose(first: GaussianChannelTriplet, second: GaussianChannelTriplet) -> GaussianChannelTriplet:
    """Triplet of ``second o first`` (``first`` acts on the state first)."""
    _require_physical(first)
    _require_physical(second)
    K2 = second.K
    alpha = K2.T @ first.alpha @ K2 + second.alpha
    return GaussianChannelTriplet(first.K @ K2, K2.T @ first.m + second.m, 0.5 * (alpha + alpha.T))


def _scalar_multiple_of_identity(mat: np.ndarray, tol: float = CLASSIFY_TOL) -> float | None:
    scale = max(1.0, float(np.max(np.abs(mat))))
    c = 0.5 * (mat[0, 0] + mat[1, 1])
    if np.allclose(mat, c * ID2, atol=tol * scale, rtol=0):
        return float(c)
    return None


def classify(channel: GaussianChannelTriplet) -> ChannelKind:
    """Pattern-match a triplet onto the standard kinds used by the stretch plans.

    The displacement ``m`` is ignored. Ties go to the more specific kind, so a
    loss channel at the quantum limit is reported as ``pure_loss``.
    """
    k = _scalar_multiple_of_identity(channel.K)
    a = _scalar_multiple_of_identity(channel.alpha)
    if k is None or k <= 0:
        return ChannelKind("other")
    scale = max(1.0, float(np.max(np.abs(channel.alpha))))
    if abs(k - 1.0) <= CLASSIFY_TOL:
        if np.allclose(channel.alpha, 0.0, atol=CLASSIFY_TOL * scale, rtol=0):
            return ChannelKind.identity()
        al = channel.alpha
        if abs(al[0, 1]) <= CLASSIFY_TOL * scale and abs(al[1, 1]) <= CLASSIFY_TOL * scale:
            return ChannelKind.additive_noise(float(al[0, 0]))
        if a is not None and a > 0:
            return ChannelKind.amplifier(1.0, a)
        return ChannelKind("other")
    if a is None:
        return ChannelKind("other")
    t = k * k
    if t < 1.0:
        excess = a - (1.0 - t) / 2.0
        if excess < -CLASSIFY_TOL * scale:
            return ChannelKind("other")
        if abs(excess) <= CLASSIFY_TOL * scale:
            return ChannelKind.pure_loss(t)
        return ChannelKind.thermal_loss(t, excess)
    excess = a - (t - 1.0) / 2.0
    if excess < -CLASSIFY_TOL * scale:
        return ChannelKind("other")
    return ChannelKind.amplifier(t, excess if excess > CLASSIFY_TOL * scale else 0.0)


def covariance_gain(channel: GaussianChannelTriplet) -> float:
    """Scale ``g`` with ``E(D(beta) rho D(beta)^dag) = D(g beta) E(rho) D(g beta)^dag``.

    Defined for ``K = g * I`` with ``g > 0`` (loss, amplifier, identity and
    additive-noise channels).
    """
    g = _scalar_multiple_of_identity(channel.K)
    if g is None or g <= 0:
        raise ValidationError("channel is not displacement-covariant with a scalar gain (K is not g*I)")
    return g


def choi(channel: GaussianChannelTriplet, xi: float) -> GaussianState:
    """Finite-energy Choi state: ``channel`` applied to mode 1 of ``tmss(xi)``."""
    return apply(channel, make_state("tmss", xi=xi), mode=1)


def hermitian_physicality_matrix(channel: GaussianChannelTriplet) -> np.ndarray:
    """The Hermitian matrix ``alpha - (i/2)(sigma - K^T sigma K)``."""
    K = channel.K
    return channel.alpha - 0.5j * (SIGMA - K.T @ SIGMA @ K)


def kind_from_dict(spec: Mapping[str, Any]) -> ChannelKind:
    """Parse a JSON channel spec into a :class:`ChannelKind`.

    A ``"triplet"`` spec is classified; other kinds are read from their fields.
    """
    kind = spec.get("kind")
    try:
        if kind == "pure_loss":
            return ChannelKind.pure_loss(spec["eta"])
        if kind == "thermal_loss":
            n = float(spec.get("excess_noise", 0.0))
            return ChannelKind.thermal_loss(spec["eta"], n)
        if kind == "amplifier":
            return ChannelKind.amplifier(spec["gain"], float(spec.get("excess_noise", 0.0)))
        if kind == "additive_noise":
            return ChannelKind.additive_noise(spec["noise"])
        if kind == "identity":
            return ChannelKind.identity()
        if kind == "triplet":
            return classify(triplet_from_dict(spec))
    except KeyError as exc:
        raise ValidationError(f"channel spec of kind {kind!r} is missing field {exc.args[0]!r}") from None
    except TypeError as exc:
        raise ValidationError(f"malformed channel spec: {exc}") from None
    raise ValidationError(f"unknown channel kind {kind!r}")


def triplet_from_dict(spec: Mapping[str, Any]) -> GaussianChannelTriplet:
    """Parse a JSON channel spec into a triplet."""
    if spec.get("kind") == "triplet":
        try:
            return GaussianChannelTriplet(spec["K"], spec.get("m", [0.0, 0.0]), spec["alpha"])
        except KeyError as exc:
            raise ValidationError(f"triplet spec is missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed triplet spec: {exc}") from None
    return make_channel(kind_from_dict(spec))
