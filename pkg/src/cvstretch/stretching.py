"""Stretch plans and a Gaussian-level Monte-Carlo simulator of the LOCC protocol.

The protocol: Alice performs a CV-Bell measurement on the input mode and one
half of ``tmss(xi)``; the other half is sent through the resource channel; Bob
displaces the output by ``-g*beta`` after learning the outcome ``beta``.

Outcome labelling: the Bell measurement reads ``u = x_A - x_A'`` and
``v = p_A + p_A'`` and reports ``beta = -(u + i v)/sqrt(2)``. With this label a
coherent input ``|a>`` leaves Bob's mode in ``|xi (a + beta)>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import (
    ChannelKind,
    GaussianChannelTriplet,
    apply,
    classify,
    compose,
    covariance_gain,
    make_channel,
)
from .errors import ValidationError
from .gaussian_core import GaussianState, make_state

CHUNK = 1 << 14
MEASURED = np.array(
    [
        [1.0, 0.0, -1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 1.0, 0.0, 0.0],
    ]
)


@dataclass(frozen=True)
class StretchPlan:
    """Parameters of the finite-energy stretching protocol for one target channel.

    ``post_channel`` is an optional local operation applied by Bob after the
    correction displacement (used for the additive-noise target).
    """

    target: ChannelKind
    xi: float
    resource_channel: ChannelKind
    gain: float
    achieved: ChannelKind
    exact: bool
    residual_noise: float
    post_channel: ChannelKind | None = None

    def to_dict(self) -> dict:
        out = {
            "target": self.target.to_dict(),
            "xi": self.xi,
            "resource_channel": self.resource_channel.to_dict(),
            "gain": self.gain,
            "achieved": self.achieved.to_dict(),
            "exact": self.exact,
            "residual_noise": self.residual_noise,
        }
        if self.post_channel is not None:
            out["post_channel"] = self.post_channel.to_dict()
        return out


def make_plan(target: ChannelKind, xi: float) -> StretchPlan:
    """Choose resource channel and correction gain for ``target``.

    Loss targets are reproduced exactly with resource transmissivity
    ``eta/xi^2``; amplifiers and additive noise pick up residual noise
    ``kappa (1 - xi^2)/xi^2``.
    """
    xi = float(xi)
    if not 0.0 < xi < 1.0:
        raise ValidationError(f"squeezing parameter xi must lie in (0, 1), got {xi}")
    t = xi * xi
    if target.is_loss:
        if t <= target.eta:
            raise ValidationError(
                f"loss target needs xi^2 > eta, got xi^2 = {t:.6g} <= eta = {target.eta:.6g}"
            )
        eta_r = target.eta / t
        if target.excess_noise == 0.0:
            resource = ChannelKind.pure_loss(eta_r)
        else:
            resource = ChannelKind.thermal_loss(eta_r, target.excess_noise)
        return StretchPlan(target, xi, resource, math.sqrt(target.eta), target, True, 0.0)
    if target.tag == "amplifier":
        kappa = target.gain
        residual = kappa * (1.0 - t) / t
        resource = ChannelKind.amplifier(kappa / t, target.excess_noise)
        achieved = ChannelKind.amplifier(kappa, target.excess_noise + residual)
        return StretchPlan(target, xi, resource, math.sqrt(kappa), achieved, False, residual)
    if target.tag == "additive_noise":
        residual = (1.0 - t) / t
        resource = ChannelKind.amplifier(1.0 / t)
        achieved_triplet = compose(make_channel(ChannelKind.amplifier(1.0, residual)), make_channel(target))
        return StretchPlan(
            target, xi, resource, 1.0, classify(achieved_triplet), False, residual, post_channel=target
        )
    raise ValidationError(f"no stretch plan for target kind {target.tag!r}")


def achieved_channel(plan: StretchPlan) -> GaussianChannelTriplet:
    """Triplet realised by the protocol.

    The Bell measurement with ``tmss(xi)`` acts as ``pure_loss(xi^2)`` once the
    outcome displacement is undone; the resource channel and any local
    post-processing follow.
    """
    channel = compose(make_channel(ChannelKind.pure_loss(plan.xi**2)), make_channel(plan.resource_channel))
    if plan.post_channel is not None:
        channel = compose(channel, make_channel(plan.post_channel))
    return channel


@dataclass(frozen=True)
class BellStatistics:
    """Gaussian statistics of the Bell outcome ``z = (u, v)`` and Bob's conditional mode.

    Bob's conditional mean is ``cond_offset + cond_gain @ z``; the conditional
    covariance ``cond_cov`` does not depend on ``z``.
    """

    z_mean: np.ndarray
    z_cov: np.ndarray
    cond_gain: np.ndarray
    cond_offset: np.ndarray
    cond_cov: np.ndarray

    def outcome_density(self, beta: complex) -> float:
        """Density of outcome ``beta`` with respect to ``dx dp``, ``beta = (x + ip)/sqrt(2)``."""
        beta = complex(beta)
        z = -math.sqrt(2.0) * np.array([beta.real, beta.imag])
        r = z - self.z_mean
        quad = r @ np.linalg.solve(self.z_cov, r)
        return float(np.exp(-0.5 * quad) / (2.0 * np.pi * math.sqrt(np.linalg.det(self.z_cov))))

    def conditional_state(self, beta: complex) -> GaussianState:
        beta = complex(beta)
        z = -math.sqrt(2.0) * np.array([beta.real, beta.imag])
        return GaussianState(self.cond_offset + self.cond_gain @ z, self.cond_cov)


def bell_statistics(state: GaussianState, xi: float) -> BellStatistics:
    """Gaussian conditioning of ``state (x) tmss(xi)`` on the commuting EPR quadratures."""
    if state.n_modes != 1:
        raise ValidationError("the stretching protocol takes a single-mode input")
    res = make_state("tmss", xi=xi)
    cov = np.zeros((6, 6))
    cov[:2, :2] = state.cov
    cov[2:, 2:] = res.cov
    mean = np.concatenate([state.mean, res.mean])
    z_mean = MEASURED @ mean
    z_cov = MEASURED @ cov @ MEASURED.T
    cross = cov[4:, :] @ MEASURED.T
    cond_gain = cross @ np.linalg.inv(z_cov)
    cond_cov = cov[4:, 4:] - cond_gain @ cross.T
    return BellStatistics(
        z_mean, z_cov, cond_gain, mean[4:] - cond_gain @ z_mean, 0.5 * (cond_cov + cond_cov.T)
    )


@dataclass(frozen=True)
class MonteCarloResult:
    empirical_mean: np.ndarray
    empirical_cov: np.ndarray
    stderr_mean: np.ndarray
    stderr_cov: np.ndarray
    n_samples: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "empirical_mean": self.empirical_mean.tolist(),
            "empirical_cov": self.empirical_cov.tolist(),
            "stderr_mean": self.stderr_mean.tolist(),
            "stderr_cov": self.stderr_cov.tolist(),
            "n_samples": self.n_samples,
            "seed": self.seed,
        }


def simulate_locc_gaussian(plan: StretchPlan, state: GaussianState, n_samples: int, seed: int) -> MonteCarloResult:
    """Sample the protocol outcome by outcome and average the output moments.

    Every sample draws a Bell outcome, conditions Bob's mode, sends it through
    the resource channel and applies the correction ``D(-g beta)``. The output
    is the outcome-averaged mixture: its covariance is the (common)
    conditional covariance plus the scatter of the conditional means.

    Samples are drawn in fixed-size chunks, each from its own child stream of
    ``numpy.random.SeedSequence(seed)``, so results depend only on
    ``(n_samples, seed)``.
    """
    if n_samples < 1000:
        raise ValidationError("n_samples must be at least 1000")
    if state.n_modes != 1:
        raise ValidationError("the stretching protocol takes a single-mode input")
    stats = bell_statistics(state, plan.xi)
    resource = make_channel(plan.resource_channel)
    K, m = resource.K, resource.m
    out_cov = K.T @ stats.cond_cov @ K + resource.alpha
    g = plan.gain
    post = make_channel(plan.post_channel) if plan.post_channel is not None else None

    # conditional mean after resource and correction: offset + slope @ z
    slope = K.T @ stats.cond_gain + g * np.eye(2)
    offset = K.T @ stats.cond_offset + m
    if post is not None:
        slope = post.K.T @ slope
        offset = post.K.T @ offset + post.m
        out_cov = post.K.T @ out_cov @ post.K + post.alpha

    chol = np.linalg.cholesky(stats.z_cov)
    n_chunks = -(-n_samples // CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    means = np.empty((n_samples, 2))
    for i, child in enumerate(children):
        lo = i * CHUNK
        hi = min(n_samples, lo + CHUNK)
        noise = np.random.default_rng(child).standard_normal((hi - lo, 2))
        z = stats.z_mean + noise @ chol.T
        means[lo:hi] = offset + z @ slope.T

    mu = means.mean(axis=0)
    dev = means - mu
    prods = dev[:, :, None] * dev[:, None, :]
    scatter = prods.mean(axis=0)
    emp_cov = out_cov + 0.5 * (scatter + scatter.T)
    sqrt_n = math.sqrt(n_samples)
    return MonteCarloResult(
        empirical_mean=mu,
        empirical_cov=emp_cov,
        stderr_mean=dev.std(axis=0) / sqrt_n,
        stderr_cov=prods.std(axis=0) / sqrt_n,
        n_samples=n_samples,
        seed=seed,
    )


def predicted_output(plan: StretchPlan, state: GaussianState) -> GaussianState:
    """Moments the protocol should reproduce: the achieved channel applied to ``state``."""
    return apply(achieved_channel(plan), state)


def correction_scale(plan: StretchPlan) -> float:
    """Displacement scale that moves the correction through the resource channel.

    ``D(-g beta) R(X) D(g beta) = R(D(-s beta) X D(s beta))`` with
    ``s = g / covariance_gain(R)``.
    """
    return plan.gain / covariance_gain(make_channel(plan.resource_channel))
