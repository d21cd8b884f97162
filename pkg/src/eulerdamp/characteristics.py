"""Characteristic curves and the weighted-gradient Riccati dynamics.

Curves solve dx/dt = +-c(u(t,x)) through a recorded solution history.
Along a minus curve the weighted gradient y = A(t) sqrt(c) rx obeys

    dy/dt = -A(t)**-1 * ((gamma+1)/4) * u**((gamma-3)/4) * y**2
            - lam * q / (2 (1+t)**mu),

with the cross quantity q = A sqrt(c) sx read from the grid solution
(symmetrically for q along plus curves).  Both the curve and the
Riccati variable are integrated with two-stage Heun, one substep per
recorded history interval, and a blow-up is refined by bisection on the
terminal segment.  The no-damping closed form 1/y(t) = 1/y0 + int kappa
provides the blow-up oracle used to validate the grid solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .core import (
    Parameters,
    damping_coefficient,
    damping_weight,
    log_damping_weight,
    sound_speed,
    theta_gamma,
)
from .solver import HistoryCoverageError, RiemannField, SolutionHistory

__all__ = [
    "CharTrace",
    "trace",
    "trace_many",
    "riccati_integrate",
    "lax_oracle_blowup_time",
    "simple_wave_oracle_lifespan",
    "verify_theta_identity",
    "theta_transport_residual",
    "weighted_gradient_along",
]

_trapz = getattr(np, "trapezoid", np.trapz)

REACHED_HORIZON = "reached_horizon"
RICCATI_BLOWUP = "riccati_blowup"
LEFT_DOMAIN = "left_domain"

BLOW_MAGNITUDE = 1e8          # |y| threshold, i.e. 1/tol_riccati
BLOW_TIME_TOL = 1e-6


@dataclass
class CharTrace:
    """One characteristic curve with carried quantities.

    Nodes hold (t, x, u, y, q); y is always the minus-family weighted
    gradient A sqrt(c) rx and q the plus-family one.  For sign='minus'
    y is Riccati-integrated and q interpolated from the grid, and vice
    versa for sign='plus'.
    """

    sign: str
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    y: np.ndarray
    q: np.ndarray
    terminated: str
    t_blow: float | None = None


def _riccati_kappa(u, p: Parameters):
    return 0.25 * (p.gamma + 1.0) * np.asarray(u, dtype=float) ** ((p.gamma - 3.0) / 4.0)


def _weighted(history: SolutionHistory, name: str, t: float, x, p: Parameters):
    """A(t) sqrt(c) times an interpolated gradient field."""
    u = history.sample("u", t, x)
    g = history.sample(name, t, x)
    return float(damping_weight(t, p)) * np.sqrt(sound_speed(u, p)) * g


def trace_many(history: SolutionHistory, p: Parameters, x0, t0: float,
               sign: str, horizon: float) -> list[CharTrace]:
    """Trace curves from every x0 simultaneously; returns one CharTrace each."""
    if sign not in ("plus", "minus"):
        raise ValueError("sign must be 'plus' or 'minus'")
    times = np.asarray(history.times)
    if horizon > history.t_end + 1e-9 * max(1.0, history.t_end):
        raise _coverage_error(horizon, history)
    if t0 < history.t_start - 1e-12:
        raise _coverage_error(t0, history)
    horizon = min(horizon, history.t_end)

    inner = times[(times > t0 + 1e-14) & (times < horizon - 1e-14)]
    node_t = np.concatenate([[t0], inner, [horizon]])
    n_nodes, n_seeds = node_t.size, np.asarray(x0, dtype=float).size

    grid = history.grid
    speed_sign = 1.0 if sign == "plus" else -1.0
    periodic = grid.boundary == "periodic"

    xs = np.full((n_nodes, n_seeds), np.nan)
    us = np.full((n_nodes, n_seeds), np.nan)
    ys = np.full((n_nodes, n_seeds), np.nan)
    qs = np.full((n_nodes, n_seeds), np.nan)

    x = np.asarray(x0, dtype=float).copy()
    xs[0] = x
    us[0] = history.sample("u", t0, x)
    ys[0] = _weighted(history, "rx", t0, x, p)
    qs[0] = _weighted(history, "sx", t0, x, p)
    w = ys[0].copy() if sign == "minus" else qs[0].copy()

    active = np.ones(n_seeds, dtype=bool)
    end_idx = np.full(n_seeds, n_nodes - 1, dtype=int)
    term = np.array([REACHED_HORIZON] * n_seeds, dtype=object)
    t_blow = np.full(n_seeds, np.nan)

    def speed(t, xq):
        return speed_sign * sound_speed(history.sample("u", t, xq), p)

    def w_rate(t, xq, wq):
        a_inv = math.exp(-float(log_damping_weight(t, p)))
        u_here = history.sample("u", t, xq)
        cross_name = "sx" if sign == "minus" else "rx"
        cross = _weighted(history, cross_name, t, xq, p)
        return (-a_inv * _riccati_kappa(u_here, p) * wq * wq
                - 0.5 * float(damping_coefficient(t, p)) * cross)

    for k in range(n_nodes - 1):
        if not np.any(active):
            break
        ta, tb = node_t[k], node_t[k + 1]
        h = tb - ta
        idx = np.nonzero(active)[0]
        xa, wa = x[idx], w[idx]

        k1x = speed(ta, xa)
        k1w = w_rate(ta, xa, wa)
        xp = xa + h * k1x
        wp = wa + h * k1w
        if periodic:
            xp = grid.x_min + np.mod(xp - grid.x_min, grid.length)
        else:
            xp = np.clip(xp, grid.x_min, grid.x_max)
        k2x = speed(tb, xp)
        k2w = w_rate(tb, xp, wp)
        xb = xa + 0.5 * h * (k1x + k2x)
        wb = wa + 0.5 * h * (k1w + k2w)

        left = np.zeros(idx.size, dtype=bool)
        if periodic:
            xb = grid.x_min + np.mod(xb - grid.x_min, grid.length)
        else:
            left = (xb < grid.x_min) | (xb > grid.x_max)
            xb = np.clip(xb, grid.x_min, grid.x_max)

        blown = ~np.isfinite(wb) | (np.abs(wb) > BLOW_MAGNITUDE)
        for pos, j in enumerate(idx):
            if blown[pos]:
                tb_j = _refine_blow(history, p, sign, ta, x[j], w[j], h)
                term[j] = RICCATI_BLOWUP
                t_blow[j] = tb_j
                end_idx[j] = k
                active[j] = False
            elif left[pos]:
                term[j] = LEFT_DOMAIN
                end_idx[j] = k + 1
                x[j], w[j] = xb[pos], wb[pos]
                xs[k + 1, j] = xb[pos]
                us[k + 1, j] = history.sample("u", tb, xb[pos])
                ys[k + 1, j] = (wb[pos] if sign == "minus"
                                else _weighted(history, "rx", tb, xb[pos], p))
                qs[k + 1, j] = (wb[pos] if sign == "plus"
                                else _weighted(history, "sx", tb, xb[pos], p))
                active[j] = False
            else:
                x[j], w[j] = xb[pos], wb[pos]

        live = np.nonzero(active)[0]
        if live.size:
            xs[k + 1, live] = x[live]
            us[k + 1, live] = history.sample("u", tb, x[live])
            if sign == "minus":
                ys[k + 1, live] = w[live]
                qs[k + 1, live] = _weighted(history, "sx", tb, x[live], p)
            else:
                qs[k + 1, live] = w[live]
                ys[k + 1, live] = _weighted(history, "rx", tb, x[live], p)

    out = []
    for j in range(n_seeds):
        m = end_idx[j] + 1
        out.append(CharTrace(
            sign=sign, t=node_t[:m].copy(), x=xs[:m, j].copy(),
            u=us[:m, j].copy(), y=ys[:m, j].copy(), q=qs[:m, j].copy(),
            terminated=str(term[j]),
            t_blow=None if math.isnan(t_blow[j]) else float(t_blow[j])))
    return out


def _coverage_error(t, history):
    return HistoryCoverageError(
        f"t={t} outside recorded history [{history.t_start}, {history.t_end}]")


def _refine_blow(history, p, sign, ta, xa, wa, h_max) -> float:
    """Bisect the crossing of |w| = BLOW_MAGNITUDE inside [ta, ta+h_max]."""
    grid = history.grid
    speed_sign = 1.0 if sign == "plus" else -1.0
    cross_name = "sx" if sign == "minus" else "rx"

    def crossed(h):
        n_sub = 4
        t_cur, x_cur, w_cur = ta, xa, wa
        dt = h / n_sub
        for _ in range(n_sub):
            def rate(t, xq, wq):
                a_inv = math.exp(-float(log_damping_weight(t, p)))
                u_here = history.sample("u", t, xq)
                cross = _weighted(history, cross_name, t, xq, p)
                return (-a_inv * float(_riccati_kappa(u_here, p)) * wq * wq
                        - 0.5 * float(damping_coefficient(t, p)) * cross)

            c1 = speed_sign * float(sound_speed(history.sample("u", t_cur, x_cur), p))
            r1 = rate(t_cur, x_cur, w_cur)
            x_pred = x_cur + dt * c1
            if grid.boundary == "periodic":
                x_pred = grid.x_min + math.fmod(x_pred - grid.x_min + grid.length,
                                                grid.length)
            else:
                x_pred = min(max(x_pred, grid.x_min), grid.x_max)
            w_pred = w_cur + dt * r1
            c2 = speed_sign * float(sound_speed(history.sample("u", t_cur + dt, x_pred), p))
            r2 = rate(t_cur + dt, x_pred, w_pred)
            x_cur = x_cur + 0.5 * dt * (c1 + c2)
            if grid.boundary == "periodic":
                x_cur = grid.x_min + math.fmod(x_cur - grid.x_min + grid.length,
                                               grid.length)
            else:
                x_cur = min(max(x_cur, grid.x_min), grid.x_max)
            w_cur = w_cur + 0.5 * dt * (r1 + r2)
            t_cur += dt
            if not math.isfinite(w_cur) or abs(w_cur) > BLOW_MAGNITUDE:
                return True
        return False

    lo, hi = 0.0, h_max
    while hi - lo > BLOW_TIME_TOL:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if crossed(mid):
            hi = mid
        else:
            lo = mid
    return ta + hi


def trace(start: tuple[float, float], sign: str, history: SolutionHistory,
          p: Parameters, horizon: float) -> CharTrace:
    """Trace a single curve launched at start = (t0, x0)."""
    t0, x0 = start
    return trace_many(history, p, np.asarray([x0]), t0, sign, horizon)[0]


def riccati_integrate(times, u_of_t, cross_of_t, y0: float, p: Parameters,
                      blow_magnitude: float = BLOW_MAGNITUDE):
    """Integrate the weighted-gradient equation along a known background.

    times is an increasing array, u_of_t and cross_of_t are callables
    giving the background u and the cross-family weighted gradient.
    Returns (y array aligned with times, t_blow or None); past a blow-up
    the remaining entries are nan.
    """
    times = np.asarray(times, dtype=float)
    y = np.full(times.size, np.nan)
    y[0] = y0
    cur = float(y0)

    def rate(t, w):
        a_inv = math.exp(-float(log_damping_weight(t, p)))
        return (-a_inv * float(_riccati_kappa(u_of_t(t), p)) * w * w
                - 0.5 * float(damping_coefficient(t, p)) * float(cross_of_t(t)))

    for k in range(times.size - 1):
        ta, tb = times[k], times[k + 1]
        h = tb - ta
        r1 = rate(ta, cur)
        wp = cur + h * r1
        r2 = rate(tb, wp)
        new = cur + 0.5 * h * (r1 + r2)
        if not math.isfinite(new) or abs(new) > blow_magnitude:
            lo, hi = 0.0, h
            while hi - lo > BLOW_TIME_TOL:
                mid = 0.5 * (lo + hi)
                if mid == lo or mid == hi:
                    break
                r1m = rate(ta, cur)
                wpm = cur + mid * r1m
                r2m = rate(ta + mid, wpm)
                ym = cur + 0.5 * mid * (r1m + r2m)
                if not math.isfinite(ym) or abs(ym) > blow_magnitude:
                    hi = mid
                else:
                    lo = mid
            return y, float(ta + hi)
        cur = new
        y[k + 1] = cur
    return y, None


def lax_oracle_blowup_time(y0: float, u_along_curve, p: Parameters,
                           t_max: float = 1e9) -> float | None:
    """No-damping blow-up oracle: root of 1/y0 + int_0^t kappa(u) dtau = 0.

    Valid only for lam = 0, where the weighted-gradient equation is the
    pure quadratic one and integrates in closed form.  Returns None for
    y0 >= 0 (no finite root) or when the root lies beyond t_max.
    """
    if p.lam != 0.0:
        raise ValueError("oracle requires lambda = 0")
    if y0 >= 0.0:
        return None
    target = 1.0 / abs(y0)

    def phi(t):
        if t <= 0.0:
            return 0.0
        val, _ = quad(lambda tau: float(_riccati_kappa(u_along_curve(tau), p)),
                      0.0, t, epsrel=1e-12, epsabs=1e-14, limit=200)
        return val

    hi = 1.0
    while phi(hi) < target:
        hi *= 2.0
        if hi > t_max:
            return None
    lo = 0.0 if hi == 1.0 else hi / 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if phi(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def simple_wave_oracle_lifespan(field: RiemannField, p: Parameters,
                                stride: int = 8) -> float | None:
    """Oracle lifespan for lam = 0, minimised over seeded minus curves.

    Seeds every stride-th cell at the field's time; u is taken constant
    along each curve (exact for s-constant simple waves, where the minus
    family transports u unchanged).  Returns the earliest finite root.
    """
    if p.lam != 0.0:
        raise ValueError("oracle requires lambda = 0")
    u0 = field.specific_volume(p)
    y0 = np.sqrt(sound_speed(u0, p)) * field.rx
    best = None
    for j in range(0, field.grid.n_cells, stride):
        u_j = float(u0[j])
        t_j = lax_oracle_blowup_time(float(y0[j]), lambda tau, uj=u_j: uj, p)
        if t_j is not None and (best is None or t_j < best):
            best = t_j
    return best


def verify_theta_identity(trace_: CharTrace, p: Parameters) -> float:
    """Residual of the integration-by-parts identity along a minus trace.

    Both sides are evaluated with trapezoidal quadrature over the trace
    nodes: the weighted cross-gradient integral on the left against the
    boundary term plus the weighted potential integral on the right.
    """
    if trace_.sign != "minus":
        raise ValueError("identity is stated along minus curves")
    t, u, q = trace_.t, trace_.u, trace_.q
    one_t = 1.0 + t
    theta = theta_gamma(u, p)
    a_of_t = damping_weight(t, p)
    lhs = _trapz(q * one_t ** (-p.mu), t)
    weight = a_of_t * one_t ** (-p.mu) * (p.mu / one_t
                                          - 0.5 * p.lam * one_t ** (-p.mu))
    boundary = (float(a_of_t[-1]) * float(theta[-1]) * float(one_t[-1]) ** (-p.mu)
                - float(theta[0]))
    rhs = _trapz(weight * theta, t) + boundary
    return abs(float(lhs - rhs))


def theta_transport_residual(trace_: CharTrace, p: Parameters) -> float:
    """Residual of d(theta)/dt = sqrt(c) sx along a minus trace."""
    if trace_.sign != "minus":
        raise ValueError("transport identity holds along minus curves")
    t, u, q = trace_.t, trace_.u, trace_.q
    sqrt_c_sx = q * np.exp(-log_damping_weight(t, p))
    theta = theta_gamma(u, p)
    return abs(float(_trapz(sqrt_c_sx, t) - (theta[-1] - theta[0])))


def weighted_gradient_along(trace_: CharTrace, history: SolutionHistory,
                            p: Parameters) -> np.ndarray:
    """A sqrt(c) rx (or sx for plus traces) re-interpolated at the trace nodes.

    Independent of the Riccati-integrated values carried by the trace,
    so comparing the two checks grid dynamics against the curve ODE.
    """
    name = "rx" if trace_.sign == "minus" else "sx"
    out = np.empty(trace_.t.size)
    for k in range(trace_.t.size):
        out[k] = _weighted(history, name, float(trace_.t[k]),
                           np.asarray([trace_.x[k]]), p)[0]
    return out
