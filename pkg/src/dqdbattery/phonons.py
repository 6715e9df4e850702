"""Ohmic phonon bath and the dephasing rates it induces on the double dot."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .ergotropy import QubitHamiltonian

WEAK_COUPLING_LIMIT = 0.01


class WeakCouplingWarning(UserWarning):
    """Coupling outside the regime where the closed-form rates were derived."""


@dataclass(frozen=True)
class PhononParams:
    g: float = 4e-4
    omega_c: float = 500.0
    beta: float = 1.0
    enabled: bool = True

    def __post_init__(self):
        if not self.enabled:
            return
        if not (math.isfinite(self.g) and self.g >= 0.0):
            raise ValueError(f"phonon coupling g={self.g!r} must be finite and >= 0")
        if not (math.isfinite(self.omega_c) and self.omega_c > 0.0):
            raise ValueError(f"cutoff omega_c={self.omega_c!r} must be > 0")
        if not (math.isfinite(self.beta) and self.beta > 0.0):
            raise ValueError(f"inverse temperature beta={self.beta!r} must be > 0")
        if self.g > WEAK_COUPLING_LIMIT:
            warnings.warn(
                f"g={self.g} exceeds {WEAK_COUPLING_LIMIT}; dephasing rates assume weak coupling",
                WeakCouplingWarning,
                stacklevel=3,
            )

    @classmethod
    def from_temperature(cls, g: float, omega_c: float, kT: float, enabled: bool = True) -> "PhononParams":
        if not kT > 0.0:
            raise ValueError(f"temperature kT={kT!r} must be > 0")
        return cls(g=g, omega_c=omega_c, beta=1.0 / kT, enabled=enabled)

    @property
    def kT(self) -> float:
        return 1.0 / self.beta

    @classmethod
    def off(cls) -> "PhononParams":
        return cls(g=0.0, enabled=False)


@dataclass(frozen=True)
class PhononRates:
    gamma: float = 0.0
    gamma_p: float = 0.0
    gamma_b: float = 0.0

    def __mul__(self, k: float) -> "PhononRates":
        return PhononRates(self.gamma * k, self.gamma_p * k, self.gamma_b * k)

    __rmul__ = __mul__


NO_PHONONS = PhononRates()


def coth(x: float) -> float:
    """``coth(x)`` for ``x > 0`` written as ``1 + 2/(e^{2x} - 1)``.

    Avoids overflow for large arguments and cancellation for small ones.
    """
    if x <= 0.0:
        raise ValueError("coth argument must be positive")
    if x < 1e-6:
        return 1.0 / x + x / 3.0
    if x > 1.0:
        q = math.exp(-2.0 * x)
        return 1.0 + 2.0 * q / (1.0 - q)
    return 1.0 + 2.0 / math.expm1(2.0 * x)


def spectral_density(omega: float, p: PhononParams) -> float:
    """Ohmic density ``g * omega * exp(-omega / omega_c)``."""
    if omega < 0.0:
        raise ValueError("frequency must be non-negative")
    if math.isinf(omega):
        return 0.0
    return p.g * omega * math.exp(-omega / p.omega_c)


def dephasing_rates(h: QubitHamiltonian, p: PhononParams) -> PhononRates:
    """Closed-form rates ``(gamma, gamma_p, gamma_b)`` entering the coherence rows."""
    if not p.enabled or p.g == 0.0:
        return NO_PHONONS
    delta = h.delta
    if delta == 0.0:
        raise ValueError("dephasing rates are singular at zero gap (eps = Tc = 0)")
    eps, tc, g, beta = h.epsilon, h.tc, p.g, p.beta
    damp = math.exp(-delta / p.omega_c)
    c = coth(0.5 * beta * delta)
    gamma = g * math.pi * tc * damp
    gamma_p = g * math.pi / delta**2 * (eps**2 / beta + 2.0 * tc**2 * delta * damp * c)
    gamma_b = g * math.pi * tc / delta**2 * (2.0 * eps / beta - eps * delta * damp * c)
    return PhononRates(gamma, gamma_p, gamma_b)
