"""Compiled fast path for the grid solver's time step.

Mirrors the numpy reference implementation in solver.py operation for
operation (same expression trees, same libm calls) so both paths agree
to the last bit in practice.  If numba is unavailable the solver falls
back to the numpy path transparently.

Status codes returned by step_kernel: 0 ok, 1 vacuum, 2 dt underflow.
"""

import math

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a soft dependency
    njit = None

HAVE_NUMBA = njit is not None

if HAVE_NUMBA:

    @njit(cache=True)
    def _fetch(q, i, n, periodic):
        if periodic:
            return q[i % n]
        if i < 0:
            return q[0]
        if i > n - 1:
            return q[n - 1]
        return q[i]

    @njit(cache=True)
    def _gminmod(a, b):
        # generalized minmod, theta = 2 (monotonized central)
        if a * b > 0.0:
            mag = 2.0 * abs(a)
            mb = 2.0 * abs(b)
            if mb < mag:
                mag = mb
            mc = 0.5 * abs(a + b)
            if mc < mag:
                mag = mc
            return mag if a > 0.0 else -mag
        return 0.0

    @njit(cache=True)
    def _rates(r, s, rx, sx, gamma, u_floor, dx, periodic,
               fr, fs, frx, fsx, u, c, mr, ms, mrx, msx):
        n = r.size
        k_off = 2.0 / (gamma - 1.0)
        pw = -2.0 / (gamma - 1.0)
        ce = -(gamma + 1.0) / 2.0
        half_gm1 = 0.5 * (gamma - 1.0)
        for i in range(n):
            e = 0.5 * (s[i] - r[i]) + k_off
            if e <= 0.0:
                return 1
            ui = (half_gm1 * e) ** pw
            if ui < u_floor:
                return 1
            u[i] = ui
            c[i] = ui ** ce
        # limited slopes for cells -1 .. n (stored shifted by +1)
        for cell in range(-1, n + 1):
            qm = _fetch(r, cell - 1, n, periodic)
            q0 = _fetch(r, cell, n, periodic)
            qp = _fetch(r, cell + 1, n, periodic)
            mr[cell + 1] = _gminmod(q0 - qm, qp - q0)
            qm = _fetch(s, cell - 1, n, periodic)
            q0 = _fetch(s, cell, n, periodic)
            qp = _fetch(s, cell + 1, n, periodic)
            ms[cell + 1] = _gminmod(q0 - qm, qp - q0)
            qm = _fetch(rx, cell - 1, n, periodic)
            q0 = _fetch(rx, cell, n, periodic)
            qp = _fetch(rx, cell + 1, n, periodic)
            mrx[cell + 1] = _gminmod(q0 - qm, qp - q0)
            qm = _fetch(sx, cell - 1, n, periodic)
            q0 = _fetch(sx, cell, n, periodic)
            qp = _fetch(sx, cell + 1, n, periodic)
            msx[cell + 1] = _gminmod(q0 - qm, qp - q0)
        for i in range(n):
            rp = _fetch(r, i + 1, n, periodic)
            sm = _fetch(s, i - 1, n, periodic)
            rxp = _fetch(rx, i + 1, n, periodic)
            sxm = _fetch(sx, i - 1, n, periodic)
            d_r = (rp - r[i] - 0.5 * (mr[i + 2] - mr[i + 1])) / dx
            d_s = (s[i] - sm + 0.5 * (ms[i + 1] - ms[i])) / dx
            d_rx = (rxp - rx[i] - 0.5 * (mrx[i + 2] - mrx[i + 1])) / dx
            d_sx = (sx[i] - sxm + 0.5 * (msx[i + 1] - msx[i])) / dx
            quad = -(gamma + 1.0) / (4.0 * u[i])
            fr[i] = c[i] * d_r
            fs[i] = -c[i] * d_s
            frx[i] = c[i] * d_rx + quad * rx[i] * (rx[i] - sx[i])
            fsx[i] = -c[i] * d_sx + quad * sx[i] * (sx[i] - rx[i])
        return 0

    @njit(cache=True)
    def _damp(r, s, rx, sx, g):
        n = r.size
        for i in range(n):
            m = 0.5 * (r[i] + s[i]) * g
            d = 0.5 * (r[i] - s[i])
            r[i] = m + d
            s[i] = m - d
            m2 = 0.5 * (rx[i] + sx[i]) * g
            d2 = 0.5 * (rx[i] - sx[i])
            rx[i] = m2 + d2
            sx[i] = m2 - d2

    @njit(cache=True)
    def step_kernel(r, s, rx, sx, ws, t, cfl, dt_cap, dt_min,
                    gamma, u_floor, lam, mu, dx, periodic):
        """Advance one Strang/Heun level in place; returns (status, dt).

        ws is an (18, n+2) float64 workspace reused across steps so the
        kernel allocates nothing per call.
        """
        n = r.size
        k_off = 2.0 / (gamma - 1.0)
        pw = -2.0 / (gamma - 1.0)
        ce = -(gamma + 1.0) / 2.0
        half_gm1 = 0.5 * (gamma - 1.0)
        c_max = 0.0
        for i in range(n):
            e = 0.5 * (s[i] - r[i]) + k_off
            if e <= 0.0:
                return 1, 0.0
            ui = (half_gm1 * e) ** pw
            if ui < u_floor:
                return 1, 0.0
            ci = ui ** ce
            if ci > c_max:
                c_max = ci
        dt = cfl * dx / c_max
        if dt_cap > 0.0 and dt > dt_cap:
            dt = dt_cap
        if dt < dt_min:
            return 2, dt

        if lam > 0.0:
            g = math.exp(-lam * (1.0 + t + 0.25 * dt) ** (-mu) * (0.5 * dt))
            _damp(r, s, rx, sx, g)

        u = ws[0, :n]
        c = ws[1, :n]
        f1r = ws[2, :n]
        f1s = ws[3, :n]
        f1rx = ws[4, :n]
        f1sx = ws[5, :n]
        f2r = ws[6, :n]
        f2s = ws[7, :n]
        f2rx = ws[8, :n]
        f2sx = ws[9, :n]
        pr = ws[10, :n]
        ps = ws[11, :n]
        prx = ws[12, :n]
        psx = ws[13, :n]
        mr = ws[14]
        ms = ws[15]
        mrx = ws[16]
        msx = ws[17]

        bad = _rates(r, s, rx, sx, gamma, u_floor, dx, periodic,
                     f1r, f1s, f1rx, f1sx, u, c, mr, ms, mrx, msx)
        if bad != 0:
            return 1, dt
        for i in range(n):
            pr[i] = r[i] + dt * f1r[i]
            ps[i] = s[i] + dt * f1s[i]
            prx[i] = rx[i] + dt * f1rx[i]
            psx[i] = sx[i] + dt * f1sx[i]
        bad = _rates(pr, ps, prx, psx, gamma, u_floor, dx, periodic,
                     f2r, f2s, f2rx, f2sx, u, c, mr, ms, mrx, msx)
        if bad != 0:
            return 1, dt
        for i in range(n):
            r[i] = r[i] + 0.5 * dt * (f1r[i] + f2r[i])
            s[i] = s[i] + 0.5 * dt * (f1s[i] + f2s[i])
            rx[i] = rx[i] + 0.5 * dt * (f1rx[i] + f2rx[i])
            sx[i] = sx[i] + 0.5 * dt * (f1sx[i] + f2sx[i])

        if lam > 0.0:
            g = math.exp(
                -lam * (1.0 + t + 0.75 * dt) ** (-mu) * (0.5 * dt))
            _damp(r, s, rx, sx, g)
        return 0, dt

else:  # pragma: no cover - exercised only without numba
    step_kernel = None
