"""Quantitative post-processing: decay fits, lifespans, bound checks.

Turns raw run outcomes into the numbers the experiments assert on:
log-log least-squares decay exponents, numerical lifespans and their
scaling fits in the perturbation amplitude, the damping-integral bound
verification, the sup-norm monotonicity check, and the (mu, lambda)
global/blow-up classification map.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .core import Parameters, log_damping_weight
from .solver import (
    BLOWUP,
    GLOBAL,
    Grid,
    InitialData,
    RunOutcome,
    SnapshotPolicy,
    run,
)

__all__ = [
    "FitResult",
    "DegenerateWindowError",
    "fit_decay_exponent",
    "measure_lifespan",
    "fit_lifespan_scaling",
    "weighted_damping_integral",
    "check_lemma_decA",
    "check_lemma_esP",
    "predicted_regime",
    "threshold_map",
]


class DegenerateWindowError(ValueError):
    """Too few samples (or too narrow a window) to fit."""


@dataclass(frozen=True)
class FitResult:
    """Least-squares fit of a power/exponential law.

    exponent is the fitted slope, constant the fitted prefactor,
    residual_rms the RMS residual in the fitted (log) coordinates.
    """

    exponent: float
    constant: float
    residual_rms: float
    window: tuple[float, float]
    r_squared: float

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "constant": self.constant,
            "residual_rms": self.residual_rms,
            "window": list(self.window),
            "r_squared": self.r_squared,
        }


def _linear_fit(x: np.ndarray, y: np.ndarray, window) -> FitResult:
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    resid = y - fitted
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return FitResult(
        exponent=float(slope),
        constant=float(np.exp(intercept)),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        window=(float(window[0]), float(window[1])),
        r_squared=r2,
    )


def fit_decay_exponent(times, values, window) -> FitResult:
    """Slope of log(value) against log(1+t) over the window.

    Requires at least 8 positive samples inside the window and a window
    spanning at least one decade in (1+t).
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = window
    mask = (times >= lo) & (times <= hi) & (values > 0.0) & np.isfinite(values)
    if int(mask.sum()) < 8:
        raise DegenerateWindowError(
            f"only {int(mask.sum())} usable samples in window [{lo}, {hi}]")
    t_in = times[mask]
    if (1.0 + t_in.max()) / (1.0 + t_in.min()) < 10.0:
        raise DegenerateWindowError("window must span at least one decade in (1+t)")
    return _linear_fit(np.log1p(t_in), np.log(values[mask]), window)


def measure_lifespan(outcome: RunOutcome) -> float | None:
    """Numerical lifespan: the blow-up time, None for global or vacuum runs."""
    if outcome.status.kind == BLOWUP:
        return outcome.status.t
    return None


def fit_lifespan_scaling(pairs, law: str = "power") -> FitResult:
    """Fit lifespans against amplitudes.

    pairs is a list of (epsilon, t_star).  law='power' fits log T* vs
    log eps (slope is the scaling exponent); law='exponential' fits
    log T* vs 1/eps.  Needs at least 4 amplitudes spanning a decade for
    the power law.
    """
    if law not in ("power", "exponential"):
        raise ValueError("law must be 'power' or 'exponential'")
    clean = [(float(e), float(t)) for e, t in pairs if t is not None and t > 0]
    if len(clean) < 4:
        raise DegenerateWindowError("need at least 4 (epsilon, T*) pairs")
    eps = np.asarray([e for e, _ in clean])
    tstar = np.asarray([t for _, t in clean])
    if law == "power":
        if eps.max() / eps.min() < 10.0:
            raise DegenerateWindowError("amplitudes must span at least one decade")
        return _linear_fit(np.log(eps), np.log(tstar),
                           (eps.min(), eps.max()))
    return _linear_fit(1.0 / eps, np.log(tstar), (eps.min(), eps.max()))


def weighted_damping_integral(t: float, p: Parameters) -> float:
    """(1+t)**mu * A(t)**-1 * int_0^t A(s) (1+s)**(-2 mu) ds.

    Evaluated on the log-transformed variable w = log(1+s) with the
    exponent shifted by log A(t), so the integrand stays bounded however
    large the weight grows.  Adaptive quadrature, relative tol 1e-8.
    """
    if t <= 0.0:
        return 0.0
    log_a_t = float(log_damping_weight(t, p))

    def integrand(w):
        s = math.expm1(w)
        return math.exp(float(log_damping_weight(s, p)) - log_a_t
                        + (1.0 - 2.0 * p.mu) * w)

    # the weight ratio concentrates the mass within ~100 (1+t)**mu / lam
    # of the upper limit; seed the subdivision there
    w_max = math.log1p(t)
    pts = None
    if p.lam > 0.0:
        s_cut = t - 100.0 * (1.0 + t) ** p.mu / p.lam
        if 0.0 < s_cut < t:
            pts = [math.log1p(s_cut)]
    val, _ = quad(integrand, 0.0, w_max, epsrel=1e-8, epsabs=1e-300,
                  limit=400, points=pts)
    return (1.0 + t) ** p.mu * val


def _in_lemma_region(p: Parameters) -> bool:
    return (0.0 <= p.mu < 1.0 and p.lam > 0.0) or (p.mu == 1.0 and p.lam > 2.0)


def check_lemma_decA(p: Parameters, t_max: float, n_quad: int = 64):
    """Sup of the weighted damping integral over a log-spaced t-grid.

    Only defined on the parameter region where the bound holds
    ((0 <= mu < 1, lam > 0) or (mu = 1, lam > 2)); outside it the
    expression grows without bound and the call is rejected.  Returns
    (sup_value, argmax_t).
    """
    if not _in_lemma_region(p):
        raise ValueError(
            "outside bound region: need 0 <= mu < 1 with lambda > 0, "
            "or mu = 1 with lambda > 2")
    if t_max <= 0.0:
        return 0.0, 0.0
    ts = np.logspace(-3, math.log10(t_max), int(n_quad))
    vals = np.asarray([weighted_damping_integral(float(t), p) for t in ts])
    k = int(np.argmax(vals))
    return float(vals[k]), float(ts[k])


def check_lemma_esP(outcome: RunOutcome, slack: float = 1e-6) -> bool:
    """True iff sup|r| + sup|s| never exceeds its initial value plus slack."""
    phi = outcome.sup_r + outcome.sup_s
    if phi.size == 0:
        return True
    return bool(np.all(phi <= phi[0] + slack))


def predicted_regime(mu: float, lam: float) -> str:
    """Analytic global/blow-up partition; 'boundary' where the regions meet."""
    if mu == 1.0 and lam == 2.0:
        return "boundary"
    if (0.0 <= mu < 1.0 and lam > 0.0) or (mu == 1.0 and lam > 2.0):
        return GLOBAL
    if (mu > 1.0 and lam > 0.0) or (mu == 1.0 and 0.0 <= lam < 2.0):
        return BLOWUP
    return "boundary"


def _threshold_point_job(args) -> dict:
    """One (mu, lambda) classification; module level so pools can pickle it."""
    (mu, lam, eps, horizon, grid, data, gamma, u_floor, cfl,
     blowup_factor, settle_factor, interval) = args
    p = Parameters(gamma=gamma, lam=float(lam), mu=float(mu), epsilon=eps,
                   u_floor=u_floor)
    out = run(data, grid, p, horizon,
              recorder=SnapshotPolicy(series_interval=interval),
              cfl=cfl, blowup_factor=blowup_factor,
              settle_factor=settle_factor)
    return {
        "mu": float(mu),
        "lambda": float(lam),
        "status": out.status.kind,
        "t": out.status.t,
        "predicted": predicted_regime(float(mu), float(lam)),
    }


def threshold_map(mu_values, lambda_values, *, eps: float, horizon: float,
                  grid: Grid, data: InitialData, gamma: float = 1.4,
                  u_floor: float = 0.1, cfl: float = 0.5,
                  blowup_factor: float = 10.0,
                  settle_factor: float | None = None,
                  series_interval: float | None = None,
                  workers: int = 1) -> list[dict]:
    """Classify each (mu, lambda) grid point as global-to-horizon or blow-up.

    Runs the same negative-gradient data at every point.  Rows come back
    in deterministic (mu-major) order with the observed status, the
    termination time, and the analytic prediction for comparison; with
    workers > 1 the independent runs fan out to a process pool and are
    reduced in submission order, never completion order.
    """
    interval = series_interval if series_interval is not None else horizon
    jobs = [(mu, lam, eps, horizon, grid, data, gamma, u_floor, cfl,
             blowup_factor, settle_factor, interval)
            for mu in mu_values for lam in lambda_values]
    if workers <= 1 or len(jobs) <= 1:
        return [_threshold_point_job(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_threshold_point_job, jobs, chunksize=1))
