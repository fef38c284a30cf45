"""Repeaterless rate-loss bound and finite-energy Choi-state entanglement sweeps.

The sweeps use the logarithmic negativity of ``(I (x) E)(tmss(xi))``, a
computable entanglement monotone. They illustrate how the finite-energy
resource approaches its ``xi -> 1`` limit; they do not evaluate the relative
entropy of entanglement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .channels import ChannelKind, choi, make_channel
from .errors import ValidationError
from .gaussian_core import log_negativity


def plob_bound(eta: float) -> float:
    """``-log2(1 - eta)`` bits per channel use."""
    if not 0.0 <= eta < 1.0:
        raise ValidationError(f"transmissivity must lie in [0, 1), got {eta}")
    return -math.log2(1.0 - eta)


@dataclass(frozen=True)
class SweepRow:
    xi: float
    eta: float
    excess_noise: float
    log_negativity: float


def loss_kind(eta: float, excess_noise: float = 0.0) -> ChannelKind:
    if excess_noise == 0.0:
        return ChannelKind.pure_loss(eta)
    return ChannelKind.thermal_loss(eta, excess_noise)


def negativity_sweep(eta: float, excess_noise: float, xi_list) -> list[SweepRow]:
    """Log-negativity of the finite-energy Choi state of ``E_eta^N`` for each ``xi``."""
    xis = [float(x) for x in xi_list]
    if any(b < a for a, b in zip(xis, xis[1:])):
        raise ValidationError("xi values must be sorted ascending")
    channel = make_channel(loss_kind(eta, excess_noise))
    return [SweepRow(x, eta, excess_noise, log_negativity(choi(channel, x), [0])) for x in xis]
