"""Congestion cost family: g, the integrand H, its derivative and conjugate.

The congestion function is ``g(z) = a * z**(q-1) + c0`` with exponent
``q > 1``, scale ``a > 0`` and congestion-free floor ``c0 >= 0``.  Two modes:

* ``SOCIAL_COST``:  H(z) = z * g(z)            (system-optimal routing)
* ``EQUILIBRIUM``:  H(z) = integral of g on [0, z]  (Beckmann potential,
  whose minimizers are the Wardrop equilibria)

Both give ``H(z) = A * z**q + c0 * z`` for a mode-dependent ``A``, which
keeps H, H' and the Fenchel conjugate H* in closed form.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import NegativeDensity, NegativeMetric


class Mode(enum.Enum):
    SOCIAL_COST = "social_cost"
    EQUILIBRIUM = "equilibrium"


@dataclass(frozen=True)
class CongestionModel:
    q: float
    a: float = 1.0
    c0: float = 0.0
    mode: Mode = Mode.EQUILIBRIUM

    def __post_init__(self):
        if not self.q > 1:
            raise ValueError(f"q must exceed 1 (got {self.q})")
        if not self.a > 0:
            raise ValueError(f"a must be positive (got {self.a})")
        if self.c0 < 0:
            raise ValueError(f"c0 must be nonnegative (got {self.c0})")

    @property
    def power_coeff(self) -> float:
        """A in H(z) = A z^q + c0 z."""
        return self.a if self.mode is Mode.SOCIAL_COST else self.a / self.q

    @property
    def q_conj(self) -> float:
        return self.q / (self.q - 1.0)

    def g(self, z):
        z = _check_nonneg(z, NegativeDensity, "density")
        return _as_input(self.a * np.power(z, self.q - 1.0) + self.c0, z)


def h_eval(model: CongestionModel, z):
    """H(z); accepts scalars or arrays, requires z >= 0."""
    z = _check_nonneg(z, NegativeDensity, "density")
    return _as_input(model.power_coeff * np.power(z, model.q) + model.c0 * z, z)


def h_prime(model: CongestionModel, z):
    """H'(z): g(z) in equilibrium mode, g(z) + z g'(z) in social-cost mode."""
    z = _check_nonneg(z, NegativeDensity, "density")
    coeff = model.a * model.q if model.mode is Mode.SOCIAL_COST else model.a
    return _as_input(coeff * np.power(z, model.q - 1.0) + model.c0, z)


def h_conj(model: CongestionModel, xi):
    """Fenchel conjugate H*(xi) = sup_{z>=0} (xi z - H(z)), closed form.

    For xi <= c0 the supremum sits at z = 0; otherwise at the stationary
    point of the power family.
    """
    xi = _check_nonneg(xi, NegativeMetric, "metric value")
    A = model.power_coeff
    q = model.q
    excess = np.maximum(np.asarray(xi, dtype=np.float64) - model.c0, 0.0)
    zstar = np.power(excess / (q * A), 1.0 / (q - 1.0))
    return _as_input(excess * zstar * (q - 1.0) / q, xi)


def young_gap(model: CongestionModel, z, xi):
    """H(z) + H*(xi) - xi z, nonnegative, zero iff xi = H'(z)."""
    return h_eval(model, z) + h_conj(model, xi) - np.asarray(xi) * np.asarray(z)


def _check_nonneg(values, exc, what):
    arr = np.asarray(values, dtype=np.float64)
    if (arr < 0).any():
        raise exc(f"negative {what}: min = {arr.min()}")
    return arr


def _as_input(result, reference):
    """Return a float for 0-d inputs, the array otherwise."""
    return float(result) if np.ndim(reference) == 0 else result
