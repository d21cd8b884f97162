"""Closed-form gas dynamics kernels for the damped p-system.

The barotropic pressure law p(u) = u**(-gamma) / gamma (gamma > 1) gives
sound speed c(u) = u**(-(gamma+1)/2) and integrated sound speed
eta(u) = (2 / (gamma-1)) * u**(-(gamma-1)/2).  Riemann invariants are

    r = v - eta(u) + 2/(gamma-1),
    s = v + eta(u) - 2/(gamma-1),

normalised so the constant state (u, v) = (1, 0) maps to (r, s) = (0, 0).
The damping weight A(t) = exp(int_0^t lam / (2 (1+tau)**mu) dtau) has an
elementary antiderivative for every mu >= 0 and is evaluated in closed
form, never by quadrature.

All functions are pure and accept floats or numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "VacuumError",
    "Parameters",
    "GasState",
    "RiemannPair",
    "pressure",
    "sound_speed",
    "eta",
    "eta_inv",
    "to_riemann",
    "from_riemann",
    "damping_coefficient",
    "log_damping_weight",
    "damping_weight",
    "theta_gamma",
]


class VacuumError(ValueError):
    """Specific volume left its guarded positive range (vacuum approach)."""


@dataclass(frozen=True)
class Parameters:
    """Physical constants of an experiment plus numerical floors.

    gamma   : adiabatic exponent, strictly greater than 1
    lam     : damping strength; the friction coefficient is lam/(1+t)**mu
    mu      : damping decay exponent
    epsilon : perturbation amplitude of the initial data
    u_floor : positivity floor enforced on the specific volume
    """

    gamma: float = 1.4
    lam: float = 1.0
    mu: float = 0.5
    epsilon: float = 0.01
    u_floor: float = 0.1

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError("gamma must exceed 1")
        if self.lam < 0.0:
            raise ValueError("lambda must be nonnegative")
        if self.mu < 0.0:
            raise ValueError("mu must be nonnegative")
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be nonnegative")
        if not self.u_floor > 0.0:
            raise ValueError("u_floor must be positive")


@dataclass
class GasState:
    """Primitive state: specific volume u (positive) and velocity v."""

    u: float | np.ndarray
    v: float | np.ndarray


@dataclass
class RiemannPair:
    """Invariant pair: r rides the minus family, s the plus family."""

    r: float | np.ndarray
    s: float | np.ndarray


def _require_floor(u, p: Parameters):
    if np.any(np.asarray(u) < p.u_floor):
        raise VacuumError(f"specific volume below positivity floor {p.u_floor}")


def pressure(u, p: Parameters):
    """Barotropic pressure u**(-gamma)/gamma, strictly decreasing in u."""
    _require_floor(u, p)
    return np.asarray(u, dtype=float) ** (-p.gamma) / p.gamma


def sound_speed(u, p: Parameters):
    """Characteristic speed c = sqrt(-p'(u)) = u**(-(gamma+1)/2)."""
    _require_floor(u, p)
    return np.asarray(u, dtype=float) ** (-(p.gamma + 1.0) / 2.0)


def eta(u, p: Parameters):
    """Integrated sound speed int_u^inf c(xi) dxi = (2/(gamma-1)) u**(-(gamma-1)/2)."""
    _require_floor(u, p)
    g = p.gamma
    return (2.0 / (g - 1.0)) * np.asarray(u, dtype=float) ** (-(g - 1.0) / 2.0)


def eta_inv(e, p: Parameters):
    """Inverse of eta; maps a positive integrated speed back to u."""
    e = np.asarray(e, dtype=float)
    if np.any(e <= 0.0):
        raise VacuumError("integrated sound speed must be positive (vacuum)")
    g = p.gamma
    return (0.5 * (g - 1.0) * e) ** (-2.0 / (g - 1.0))


def to_riemann(g: GasState, p: Parameters) -> RiemannPair:
    """Map (u, v) to the invariant pair (r, s)."""
    k = 2.0 / (p.gamma - 1.0)
    e = eta(g.u, p)
    return RiemannPair(r=g.v - e + k, s=g.v + e - k)


def from_riemann(rp: RiemannPair, p: Parameters) -> GasState:
    """Map (r, s) back to (u, v); raises VacuumError if the implied eta <= 0."""
    k = 2.0 / (p.gamma - 1.0)
    e = 0.5 * (np.asarray(rp.s, dtype=float) - np.asarray(rp.r, dtype=float)) + k
    if np.any(e <= 0.0):
        raise VacuumError("invariant pair implies nonpositive eta (vacuum)")
    v = 0.5 * (np.asarray(rp.r, dtype=float) + np.asarray(rp.s, dtype=float))
    return GasState(u=eta_inv(e, p), v=v)


def damping_coefficient(t, p: Parameters):
    """Friction coefficient lam / (1+t)**mu acting on the velocity."""
    return p.lam * (1.0 + np.asarray(t, dtype=float)) ** (-p.mu)


def log_damping_weight(t, p: Parameters):
    """log A(t) where A(t) = exp(int_0^t lam / (2 (1+tau)**mu) dtau).

    Closed forms: (lam/2) * log(1+t) at mu = 1, otherwise
    (lam/2) * ((1+t)**(1-mu) - 1) / (1-mu), written with expm1 so the
    mu -> 1 limit is continuous.
    """
    t = np.asarray(t, dtype=float)
    if p.lam == 0.0:
        return np.zeros_like(t)
    if abs(p.mu - 1.0) < 1e-12:
        return 0.5 * p.lam * np.log1p(t)
    em = 1.0 - p.mu
    return 0.5 * p.lam * np.expm1(em * np.log1p(t)) / em


def damping_weight(t, p: Parameters):
    """Damping weight A(t); A(0) = 1, nondecreasing for lam > 0."""
    return np.exp(log_damping_weight(t, p))


def theta_gamma(u, p: Parameters):
    """Antiderivative of sqrt(c), normalised to vanish at u = 1.

    Equals (4/(3-gamma)) (u**((3-gamma)/4) - 1) away from gamma = 3 and
    log u there; the expm1 form keeps the gamma -> 3 limit smooth.  The
    branch switch at |gamma - 3| < 1e-9 avoids catastrophic cancellation.
    """
    _require_floor(u, p)
    lu = np.log(np.asarray(u, dtype=float))
    if abs(p.gamma - 3.0) < 1e-9:
        return lu
    a = (3.0 - p.gamma) / 4.0
    return np.expm1(a * lu) / a
