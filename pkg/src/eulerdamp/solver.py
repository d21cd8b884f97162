"""Upwind solver for the Riemann-invariant form of the damped p-system.

State per time level: the invariant fields (r, s) and their spatial
derivatives (rx, sx), evolved as independent unknowns on a fixed 1D
grid.  The minus family (r, rx) is transported at speed -c, the plus
family (s, sx) at +c, with minmod-limited upwind differences and
two-stage Heun time integration.  Damping acts pointwise on the pair
sums (r+s and rx+sx); it is applied as an exact exponential substep on
either side of the transport stage (Strang split) with the friction
coefficient sampled at substep midpoints.  The gradient fields carry in
addition the quadratic steepening source that drives finite-time
blow-up, so the breakdown mechanism is represented directly instead of
being differenced out of r and s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from . import _kernels
from .core import (
    Parameters,
    VacuumError,
    damping_coefficient,
    eta,
    eta_inv,
    log_damping_weight,
    sound_speed,
)

__all__ = [
    "Grid",
    "InitialData",
    "SnapshotPolicy",
    "RiemannField",
    "RunStatus",
    "RunOutcome",
    "SolutionHistory",
    "HistoryCoverageError",
    "CflError",
    "init",
    "step",
    "run",
    "GLOBAL",
    "BLOWUP",
    "VACUUM",
    "CFL_FAILURE",
]

BOUNDARIES = ("periodic", "extrapolate")
FAMILIES = ("sine", "gaussian_bump", "monotone_tanh", "simple_wave_s_const")

GLOBAL = "global"
BLOWUP = "blowup"
VACUUM = "vacuum"
CFL_FAILURE = "cfl_failure"


class CflError(RuntimeError):
    """Stable time step underflowed dt_min."""


class HistoryCoverageError(RuntimeError):
    """A space-time sample fell outside the recorded history."""


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered 1D grid."""

    x_min: float
    x_max: float
    n_cells: int
    boundary: str = "periodic"

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")
        if self.n_cells < 16:
            raise ValueError("n_cells must be at least 16")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx


@dataclass(frozen=True)
class InitialData:
    """Small perturbation of the constant state (u, v) = (1, 0).

    u(0,x) = 1 + epsilon * u_scale * phi(x) and v(0,x) = epsilon *
    v_scale * psi(x) with phi, psi picked by `family`.  The
    simple_wave_s_const family slaves v to u so that s vanishes
    identically (v_scale is ignored there).  Derivatives are analytic,
    so the gradient fields start exact.
    """

    family: str = "sine"
    wavenumber: float = 1.0
    width: float = 1.0
    center: float = 0.0
    phase: float = 0.0
    v_phase: float = 0.0
    u_scale: float = 1.0
    v_scale: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        if self.family in ("gaussian_bump", "monotone_tanh") and not self.width > 0:
            raise ValueError("width must be positive")

    def profile(self, x: np.ndarray, p: Parameters):
        """Return (u, v, ux, vx) at positions x."""
        eps = p.epsilon
        if self.family == "sine":
            au = self.wavenumber * x + self.phase
            av = self.wavenumber * x + self.v_phase
            u = 1.0 + eps * self.u_scale * np.sin(au)
            v = eps * self.v_scale * np.sin(av)
            ux = eps * self.u_scale * self.wavenumber * np.cos(au)
            vx = eps * self.v_scale * self.wavenumber * np.cos(av)
        elif self.family == "gaussian_bump":
            z = (x - self.center) / self.width
            g = np.exp(-(z**2))
            u = 1.0 + eps * self.u_scale * g
            v = eps * self.v_scale * g
            dg = -2.0 * z * g / self.width
            ux = eps * self.u_scale * dg
            vx = eps * self.v_scale * dg
        elif self.family == "monotone_tanh":
            z = (x - self.center) / self.width
            th = np.tanh(z)
            dth = (1.0 - th**2) / self.width
            u = 1.0 + eps * self.u_scale * th
            v = eps * self.v_scale * th
            ux = eps * self.u_scale * dth
            vx = eps * self.v_scale * dth
        else:  # simple_wave_s_const
            au = self.wavenumber * x + self.phase
            u = 1.0 + eps * self.u_scale * np.sin(au)
            ux = eps * self.u_scale * self.wavenumber * np.cos(au)
            if np.any(u < p.u_floor):
                raise VacuumError("initial specific volume below floor")
            v = 2.0 / (p.gamma - 1.0) - eta(u, p)
            vx = sound_speed(u, p) * ux
        return u, v, ux, vx


@dataclass(frozen=True)
class SnapshotPolicy:
    """What a run records: sup-norm series cadence and optional field history.

    history_stride counts solver steps between stored field snapshots;
    with stride * cfl <= 1 a characteristic crosses at most one cell per
    stored interval, which is what the trace integrator assumes.
    """

    series_interval: float = 1.0
    store_history: bool = False
    history_stride: int = 2

    def __post_init__(self):
        if not self.series_interval > 0:
            raise ValueError("series_interval must be positive")
        if self.history_stride < 1:
            raise ValueError("history_stride must be at least 1")


@dataclass(frozen=True)
class RunStatus:
    """Run classification: kind in {global, blowup, vacuum, cfl_failure}."""

    kind: str
    t: float


@dataclass
class RiemannField:
    """Grid state at one time level."""

    grid: Grid
    t: float
    r: np.ndarray
    s: np.ndarray
    rx: np.ndarray
    sx: np.ndarray

    def specific_volume(self, p: Parameters) -> np.ndarray:
        e = 0.5 * (self.s - self.r) + 2.0 / (p.gamma - 1.0)
        if np.any(e <= 0.0):
            raise VacuumError("field implies nonpositive eta (vacuum)")
        u = eta_inv(e, p)
        if np.any(u < p.u_floor):
            raise VacuumError(f"specific volume below floor {p.u_floor}")
        return u

    def velocity(self) -> np.ndarray:
        return 0.5 * (self.r + self.s)

    def copy(self) -> "RiemannField":
        return RiemannField(self.grid, self.t, self.r.copy(), self.s.copy(),
                            self.rx.copy(), self.sx.copy())


def init(data: InitialData, grid: Grid, p: Parameters) -> RiemannField:
    """Build the t = 0 field; gradients come from analytic derivatives."""
    x = grid.centers()
    u, v, ux, vx = data.profile(x, p)
    if np.any(u < p.u_floor):
        raise VacuumError("initial specific volume below floor")
    k = 2.0 / (p.gamma - 1.0)
    e = eta(u, p)
    c = sound_speed(u, p)
    r = v - e + k
    s = v + e - k
    rx = vx + c * ux
    sx = vx - c * ux
    return RiemannField(grid, 0.0, r, s, rx, sx)


# ----------------------------------------------------------------------
# spatial discretisation
# ----------------------------------------------------------------------

def _pad(q: np.ndarray, boundary: str) -> np.ndarray:
    """Two ghost cells on each side; works on (n,) and stacked (k, n) arrays."""
    if boundary == "periodic":
        return np.concatenate([q[..., -2:], q, q[..., :2]], axis=-1)
    return np.concatenate([q[..., :1], q[..., :1], q, q[..., -1:], q[..., -1:]],
                          axis=-1)


# Slope limiter steepness: 1 is classic minmod, 2 the monotonized-central
# variant.  The steeper member clips travelling extrema far less, which
# long damped runs need so the forming gradient spike is not dissipated
# away before it can be detected; it stays TVD at the CFL numbers used.
_LIMITER_THETA = 2.0


def _minmod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Generalized minmod of neighbour differences (theta-limited slope)."""
    th = _LIMITER_THETA
    same = a * b > 0.0
    mag = np.minimum(np.minimum(th * np.abs(a), th * np.abs(b)),
                     0.5 * np.abs(a + b))
    return np.where(same, np.sign(a) * mag, 0.0)


def _upwind_derivative(q: np.ndarray, dx: float, boundary: str, minus: bool):
    """Limited upwind x-derivative of q (last axis; stacked rows allowed).

    Right-biased for the minus family (transport speed -c), left-biased
    for the plus family (+c).  Second order on smooth data away from
    extrema where the limited slope clips.
    """
    n = q.shape[-1]
    qp = _pad(q, boundary)
    diff = qp[..., 1:] - qp[..., :-1]                  # cell differences
    m = _minmod(diff[..., :-1], diff[..., 1:])         # slope of cell j-1
    if minus:
        return (diff[..., 2:n + 2]
                - 0.5 * (m[..., 2:n + 2] - m[..., 1:n + 1])) / dx
    return (diff[..., 1:n + 1] + 0.5 * (m[..., 1:n + 1] - m[..., 0:n])) / dx


def _transport_rates(fld_r, fld_s, fld_rx, fld_sx, grid: Grid, p: Parameters):
    """Advection plus quadratic-source rates for all four fields.

    The damping terms are handled by the exponential substep, not here.
    Raises VacuumError if the stage state leaves the guarded u-range.
    The two fields of each characteristic family share one stacked
    upwinding pass.
    """
    e = 0.5 * (fld_s - fld_r) + 2.0 / (p.gamma - 1.0)
    if e.min() <= 0.0:
        raise VacuumError("stage state implies nonpositive eta (vacuum)")
    u = (0.5 * (p.gamma - 1.0) * e) ** (-2.0 / (p.gamma - 1.0))
    if u.min() < p.u_floor:
        raise VacuumError(f"stage specific volume below floor {p.u_floor}")
    c = u ** (-(p.gamma + 1.0) / 2.0)

    d_minus = _upwind_derivative(np.stack((fld_r, fld_rx)), grid.dx,
                                 grid.boundary, minus=True)
    d_plus = _upwind_derivative(np.stack((fld_s, fld_sx)), grid.dx,
                                grid.boundary, minus=False)

    quad = -(p.gamma + 1.0) / (4.0 * u)
    f_r = c * d_minus[0]
    f_s = -c * d_plus[0]
    f_rx = c * d_minus[1] + quad * fld_rx * (fld_rx - fld_sx)
    f_sx = -c * d_plus[1] + quad * fld_sx * (fld_sx - fld_rx)
    return f_r, f_s, f_rx, f_sx


def _damping_substep(r, s, rx, sx, t0: float, h: float, p: Parameters):
    """Exact exponential damping over [t0, t0+h], coefficient at the midpoint.

    The pair sums obey m' = -(lam/(1+t)**mu) m while the differences are
    untouched, so the substep is a pointwise linear map with unit
    operator norm in the sup-sum metric.
    """
    if p.lam == 0.0 or h == 0.0:
        return r, s, rx, sx
    g = math.exp(-float(damping_coefficient(t0 + 0.5 * h, p)) * h)
    m = 0.5 * (r + s) * g
    d = 0.5 * (r - s)
    m2 = 0.5 * (rx + sx) * g
    d2 = 0.5 * (rx - sx)
    return m + d, m - d, m2 + d2, m2 - d2


def stable_dt(field: RiemannField, p: Parameters, cfl: float) -> float:
    """CFL time step cfl * dx / max c(u)."""
    u = field.specific_volume(p)
    c_max = float(np.max(sound_speed(u, p)))
    return cfl * field.grid.dx / c_max


def step(field: RiemannField, p: Parameters, cfl: float,
         dt_cap: float | None = None, dt_min: float = 1e-12) -> RiemannField:
    """Advance one time level and return the new field.

    dt = cfl*dx/max(c), optionally capped (used to land on a horizon).
    Raises VacuumError when u leaves its floor and CflError when the
    step underflows dt_min.  Blow-up thresholding is the caller's job
    (see `run`), since the threshold is run configuration.

    Uses the compiled kernel when numba is present; the numpy path below
    is the reference implementation and fallback.
    """
    if not 0.0 < cfl <= 0.9:
        raise ValueError("cfl must lie in (0, 0.9]")

    if _kernels.HAVE_NUMBA:
        r = np.array(field.r, dtype=np.float64)
        s = np.array(field.s, dtype=np.float64)
        rx = np.array(field.rx, dtype=np.float64)
        sx = np.array(field.sx, dtype=np.float64)
        status, dt = _kernels.step_kernel(
            r, s, rx, sx, field.t, cfl,
            -1.0 if dt_cap is None else float(dt_cap), dt_min,
            p.gamma, p.u_floor, p.lam, p.mu, field.grid.dx,
            field.grid.boundary == "periodic")
        if status == 1:
            raise VacuumError("specific volume left the guarded range")
        if status == 2:
            raise CflError(f"time step {dt:.3e} fell below dt_min {dt_min:.3e}")
        return RiemannField(field.grid, field.t + dt, r, s, rx, sx)

    dt = stable_dt(field, p, cfl)
    if dt_cap is not None:
        dt = min(dt, dt_cap)
    if dt < dt_min:
        raise CflError(f"time step {dt:.3e} fell below dt_min {dt_min:.3e}")

    grid, t = field.grid, field.t
    r, s, rx, sx = _damping_substep(field.r, field.s, field.rx, field.sx,
                                    t, 0.5 * dt, p)

    f1 = _transport_rates(r, s, rx, sx, grid, p)
    pred = (r + dt * f1[0], s + dt * f1[1], rx + dt * f1[2], sx + dt * f1[3])
    f2 = _transport_rates(*pred, grid, p)
    r = r + 0.5 * dt * (f1[0] + f2[0])
    s = s + 0.5 * dt * (f1[1] + f2[1])
    rx = rx + 0.5 * dt * (f1[2] + f2[2])
    sx = sx + 0.5 * dt * (f1[3] + f2[3])

    r, s, rx, sx = _damping_substep(r, s, rx, sx, t + 0.5 * dt, 0.5 * dt, p)
    return RiemannField(grid, t + dt, r, s, rx, sx)


# ----------------------------------------------------------------------
# recorded history (for characteristic tracing)
# ----------------------------------------------------------------------

class SolutionHistory:
    """Read-only space-time record of a run with bilinear sampling.

    Snapshots are stored at the recorder's step stride; sampling is
    linear in t between snapshots and linear in x between cell centers
    (periodic wrap or clamped, matching the grid's boundary).
    """

    def __init__(self, grid: Grid, p: Parameters):
        self.grid = grid
        self.params = p
        self.times: list[float] = []
        self._data: dict[str, list[np.ndarray]] = {
            "r": [], "s": [], "rx": [], "sx": [], "u": []}

    def record(self, field: RiemannField, u: np.ndarray | None = None):
        if self.times and field.t <= self.times[-1] + 1e-14:
            return
        if u is None:
            u = field.specific_volume(self.params)
        self.times.append(field.t)
        self._data["r"].append(field.r.copy())
        self._data["s"].append(field.s.copy())
        self._data["rx"].append(field.rx.copy())
        self._data["sx"].append(field.sx.copy())
        self._data["u"].append(np.asarray(u).copy())

    @property
    def t_start(self) -> float:
        return self.times[0]

    @property
    def t_end(self) -> float:
        return self.times[-1]

    def _interp_x(self, arr: np.ndarray, x: np.ndarray) -> np.ndarray:
        grid = self.grid
        n = grid.n_cells
        a = (np.asarray(x, dtype=float) - grid.x_min) / grid.dx - 0.5
        if grid.boundary == "periodic":
            a = np.mod(a, n)
            j = np.floor(a).astype(int)
            w = a - j
            return (1.0 - w) * arr[j % n] + w * arr[(j + 1) % n]
        a = np.clip(a, 0.0, n - 1.0)
        j = np.clip(np.floor(a).astype(int), 0, n - 2)
        w = np.clip(a - j, 0.0, 1.0)
        return (1.0 - w) * arr[j] + w * arr[j + 1]

    def sample(self, name: str, t: float, x):
        """Field value(s) at time t and position(s) x."""
        times = self.times
        tol = 1e-9 * max(1.0, abs(times[-1]))
        if t < times[0] - tol or t > times[-1] + tol:
            raise HistoryCoverageError(
                f"t={t} outside recorded interval [{times[0]}, {times[-1]}]")
        k = int(np.searchsorted(times, t, side="right")) - 1
        k = max(0, min(k, len(times) - 2)) if len(times) > 1 else 0
        data = self._data[name]
        if len(times) == 1:
            return self._interp_x(data[0], np.asarray(x, dtype=float))
        t0, t1 = times[k], times[k + 1]
        w = 0.0 if t1 == t0 else min(max((t - t0) / (t1 - t0), 0.0), 1.0)
        x = np.asarray(x, dtype=float)
        v0 = self._interp_x(data[k], x)
        v1 = self._interp_x(data[k + 1], x)
        return (1.0 - w) * v0 + w * v1


@dataclass
class RunOutcome:
    """Classification and sup-norm time series of one run.

    sup_rt / sup_st are the time-derivative proxies c*rx - k(t)(r+s)/...
    reconstructed from the characteristic form at each sample time.
    """

    status: RunStatus
    times: np.ndarray
    sup_r: np.ndarray
    sup_s: np.ndarray
    sup_rx: np.ndarray
    sup_sx: np.ndarray
    sup_rt: np.ndarray
    sup_st: np.ndarray
    params: Parameters
    grid: Grid
    data: InitialData | None
    cfl: float
    blowup_threshold: float
    t_star_low: float | None = None
    history: SolutionHistory | None = None
    series_fields: tuple[str, ...] = dataclass_field(
        default=("t", "sup_r", "sup_s", "sup_rx", "sup_sx", "sup_rt", "sup_st"),
        repr=False)


def _sup(a: np.ndarray) -> float:
    return float(np.max(np.abs(a)))


def _sample_sups(field: RiemannField, p: Parameters, buffers):
    u = field.specific_volume(p)
    c = sound_speed(u, p)
    k = 0.5 * float(damping_coefficient(field.t, p))
    rt = c * field.rx - k * (field.r + field.s)
    st = -c * field.sx - k * (field.r + field.s)
    buffers["t"].append(field.t)
    buffers["sup_r"].append(_sup(field.r))
    buffers["sup_s"].append(_sup(field.s))
    buffers["sup_rx"].append(_sup(field.rx))
    buffers["sup_sx"].append(_sup(field.sx))
    buffers["sup_rt"].append(_sup(rt))
    buffers["sup_st"].append(_sup(st))


def run(data: InitialData, grid: Grid, p: Parameters, horizon: float,
        recorder: SnapshotPolicy | None = None, cfl: float = 0.5,
        blowup_factor: float = 10.0, low_factor: float | None = None,
        settle_factor: float | None = None,
        dt_min: float = 1e-12) -> RunOutcome:
    """Integrate to the horizon or to the first classified failure.

    Outcomes are never raised: vacuum, CFL underflow and gradient
    blow-up all come back as the RunOutcome status.

    Blow-up fires when the weighted gradient sup-norm
    W(t) = A(t) * max(|rx|, |sx|) exceeds blowup_factor times its
    running minimum (seeded with max(initial gradient sup-norm,
    epsilon)).  W is, up to the order-one sqrt(c) factor, exactly the
    quantity the steepening mechanism drives to infinity in finite time,
    and it stays O(initial) in the global regimes, so growth of W by a
    moderate factor is the scale-free breakdown signal.  Comparisons run
    in log space (the weight can overflow on long runs) and are skipped
    once the gradients sit at the round-off floor, where the weight
    would otherwise amplify noise.  For undamped runs A = 1 and the rule
    reduces to a plain threshold over the initial gradient level.

    The factor must stay below the largest growth the grid can resolve:
    when W has grown by F the spike has narrowed like (1/F)**1.5 in x,
    so grids track growth only up to roughly dx**(-2/3).  The first
    crossing of the lower low_factor threshold (half the main one by
    default) is kept as t_star_low for sensitivity reporting.

    settle_factor, when given, ends the run early as global once the
    gradient sup-norm has decayed below settle_factor times its initial
    scale: the fields are then numerically dead and, with friction the
    only remaining dynamics, cannot re-steepen.  Used by long parameter
    sweeps where strongly damped runs would otherwise integrate noise
    to the horizon.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if low_factor is None:
        low_factor = 0.5 * blowup_factor
    recorder = recorder or SnapshotPolicy()

    buffers = {k: [] for k in
               ("t", "sup_r", "sup_s", "sup_rx", "sup_sx", "sup_rt", "sup_st")}
    history = SolutionHistory(grid, p) if recorder.store_history else None

    def outcome(status, thr, t_low):
        return RunOutcome(
            status=status,
            times=np.asarray(buffers["t"]),
            sup_r=np.asarray(buffers["sup_r"]),
            sup_s=np.asarray(buffers["sup_s"]),
            sup_rx=np.asarray(buffers["sup_rx"]),
            sup_sx=np.asarray(buffers["sup_sx"]),
            sup_rt=np.asarray(buffers["sup_rt"]),
            sup_st=np.asarray(buffers["sup_st"]),
            params=p, grid=grid, data=data, cfl=cfl,
            blowup_threshold=thr, t_star_low=t_low, history=history)

    try:
        field = init(data, grid, p)
    except VacuumError:
        return outcome(RunStatus(VACUUM, 0.0), math.nan, None)

    grad0 = max(_sup(field.rx), _sup(field.sx))
    base0 = max(grad0, p.epsilon)
    noise_cutoff = 1e-8 * base0
    settle_cutoff = settle_factor * base0 if settle_factor is not None else -1.0
    log_w_min = math.log(base0) if base0 > 0.0 else None
    log_high = math.log(blowup_factor)
    log_low = math.log(low_factor)

    _sample_sups(field, p, buffers)
    if history is not None:
        history.record(field)
    next_sample = recorder.series_interval
    t_low = None
    n_steps = 0
    tol = 1e-12 * max(1.0, horizon)

    while True:
        remaining = horizon - field.t
        if remaining <= tol:
            status = RunStatus(GLOBAL, horizon)
            break
        try:
            field = step(field, p, cfl, dt_cap=remaining, dt_min=dt_min)
        except VacuumError:
            status = RunStatus(VACUUM, field.t)
            break
        except CflError:
            status = RunStatus(CFL_FAILURE, field.t)
            break
        n_steps += 1

        g = max(_sup(field.rx), _sup(field.sx))
        if not math.isfinite(g):
            if t_low is None:
                t_low = field.t
            status = RunStatus(BLOWUP, field.t)
            break
        if g < settle_cutoff:
            status = RunStatus(GLOBAL, horizon)
            break
        if log_w_min is not None and g > noise_cutoff:
            log_w = float(log_damping_weight(field.t, p)) + math.log(g)
            if t_low is None and log_w - log_w_min > log_low:
                t_low = field.t
            if log_w - log_w_min > log_high:
                status = RunStatus(BLOWUP, field.t)
                break
            if log_w < log_w_min:
                log_w_min = log_w

        if history is not None and n_steps % recorder.history_stride == 0:
            history.record(field)
        if field.t >= next_sample - tol:
            _sample_sups(field, p, buffers)
            while next_sample <= field.t + tol:
                next_sample += recorder.series_interval

    # always record the terminal state (when it is still representable)
    if buffers["t"] and abs(buffers["t"][-1] - field.t) > tol:
        try:
            _sample_sups(field, p, buffers)
        except (VacuumError, FloatingPointError):
            pass
    if history is not None:
        try:
            history.record(field)
        except VacuumError:
            pass

    thr = blowup_factor * math.exp(log_w_min) if log_w_min is not None else math.nan
    return outcome(status, thr, t_low)
