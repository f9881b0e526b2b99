"""Compiled closed-loop integrator.

Scalar re-statement of ``terrain``, ``guidance`` and ``dynamics`` for speed;
``tests/test_kernel_consistency.py`` checks the two against each other.
Each run in a batch is advanced independently, so a run's trajectory does not
depend on which batch it was computed in.
"""
import math

import numpy as np
from numba import njit

# telemetry row layout
T, R, V, M = 0, 1, 4, 7
A_CMD, A_APP, A_P = 8, 11, 14
ZEM, ZEV, P, DIV = 17, 20, 23, 26
S1, S2, PHI = 29, 32, 35
RHO_Z, D, TGO = 38, 39, 42
LAND, DIV_NET = 43, 46
N_FIELDS = 49

OGL, OTALG, MSS = 0, 1, 2
RUNNING, LANDED, TIME_UP, FUEL, NONFINITE, IMPACT = 0, 1, 2, 3, 4, 5


@njit(cache=True)
def _rho_h(axis, rz, H, ALPHA, BETA, GAMMA, LAM):
    n = H.shape[1] - 1
    j = n
    for k in range(n):
        if rz <= H[axis, k + 1]:
            j = k
            break
    return BETA[axis, j] * (rz + GAMMA[axis, j]) ** (1.0 / LAM[axis, j]) + ALPHA[axis, j]


@njit(cache=True)
def _ground(r, H, W):
    n = H.shape[1] - 1
    g = 0.0
    for axis in range(2):
        a = abs(r[axis])
        k = n
        for j in range(n):
            if a <= W[axis, j + 1]:
                k = j
                break
        if H[axis, k] > g:
            g = H[axis, k]
    return g


@njit(cache=True)
def _rho_z(r, H, W, delta, rule):
    if rule == 0:
        return _ground(r, H, W) + delta
    n = H.shape[1] - 1
    rz = r[2]
    if rz >= H[0, n]:
        return H[0, n] + delta
    lat = max(abs(r[0]), abs(r[1]))
    for j in range(1, n + 1):
        if H[0, j - 1] <= rz <= H[0, j] and W[0, j - 1] <= lat <= W[0, j]:
            return H[0, j - 1] + delta
    return delta


@njit(cache=True)
def _guide(law, r, v, t, row, t_f, g, l1, l2, l3, gp, r_f, v_f,
           H, W, ALPHA, BETA, GAMMA, LAM, delta, rule):
    """Fill the guidance columns of ``row`` for state (r, v) at time t."""
    lam_, k1, k2, apmax, eps, tgo_min = gp[0], gp[1], gp[2], gp[3], gp[4], gp[5]
    tgo = max(t_f - t, tgo_min)
    row[TGO] = tgo
    rz = max(r[2], 0.0)
    for a in range(2):
        side = -1.0 if np.signbit(r[a]) else 1.0
        row[D + a] = r[a] - side * _rho_h(a, rz, H, ALPHA, BETA, GAMMA, LAM)
    rho_z = _rho_z(r, H, W, delta, rule)
    row[RHO_Z] = rho_z
    row[D + 2] = r[2] - rho_z
    for i in range(3):
        # gravity-inclusive ZEM/ZEV and the OGL acceleration built from them
        zem_g = r_f[i] - (r[i] + v[i] * tgo + 0.5 * g[i] * tgo * tgo)
        zev_g = v_f[i] - (v[i] + g[i] * tgo)
        land = 6.0 / (tgo * tgo) * zem_g - 2.0 / tgo * zev_g
        row[LAND + i] = land
        s1 = r[i] - r_f[i]
        s2 = (v[i] - v_f[i]) + (lam_ / tgo) * s1
        row[S1 + i] = s1
        row[S2 + i] = s2
        if law == OGL:
            p = 0.0
        else:
            di = row[D + i]
            q = di * di + l1[i]
            p = l2[i] * l3[i] * di * math.exp(-l2[i] / q) / (q * q)
        div = p * tgo * tgo / 12.0
        row[P + i] = p
        row[DIV + i] = div
        if law == MSS:
            zem = r_f[i] - (r[i] + v[i] * tgo)
            zev = v_f[i] - v[i]
            phi = k1 * abs(p) * tgo * tgo / 12.0 + k2 * apmax
            sw = min(max(s2 / eps, -1.0), 1.0)
            a_otalg = 6.0 / (tgo * tgo) * zem - 2.0 / tgo * zev + div
            row[A_CMD + i] = a_otalg - phi * sw - g[i]
            row[ZEM + i] = zem
            row[ZEV + i] = zev
            row[PHI + i] = phi
            row[DIV_NET + i] = div - k1 * abs(div) * sw
        else:
            row[A_CMD + i] = land + div
            row[ZEM + i] = zem_g
            row[ZEV + i] = zev_g
            row[PHI + i] = 0.0
            row[DIV_NET + i] = div


@njit(cache=True)
def advance(law, r, v, m, a_lag, a_app, a_p, status, step, t_now, n_pen, min_clear,
            noise, c0, n_max, dt, t_f, stop_alt,
            g, isp_ge, T_max, decay, pert_coeff, pert_scale, dry_mass,
            l1, l2, l3, gp, r_f, v_f,
            H, W, ALPHA, BETA, GAMMA, LAM, delta, rule,
            record, log):
    """Advance every running member of the batch through steps [c0, c0 + len(noise chunk)).

    State arrays are updated in place. ``status`` leaves RUNNING once a run
    lands (altitude rule), reaches t_f, runs out of fuel or goes non-finite.
    """
    n_runs = r.shape[0]
    c1 = c0 + noise.shape[1]
    row = np.zeros(N_FIELDS)
    acc = np.zeros(3)
    for n in range(n_runs):
        while status[n] == RUNNING and step[n] < c1:
            k = step[n]
            t = t_now[n]
            ri = r[n]
            vi = v[n]
            _guide(law, ri, vi, t, row, t_f, g, l1, l2, l3, gp, r_f, v_f,
                   H, W, ALPHA, BETA, GAMMA, LAM, delta, rule)
            # thrust limit, engine lag, noise
            a_lim = T_max / m[n]
            nrm = math.sqrt(row[A_CMD] ** 2 + row[A_CMD + 1] ** 2 + row[A_CMD + 2] ** 2)
            scale = a_lim / nrm if nrm > a_lim else 1.0
            s_pert = pert_coeff * math.sin(math.pi * t / pert_scale) if pert_coeff != 0.0 else 0.0
            for i in range(3):
                a_ideal = row[A_CMD + i] * scale
                a_lag[n, i] = a_ideal + (a_lag[n, i] - a_ideal) * decay
                a_app[n, i] = a_lag[n, i] * noise[n, k - c0, i]
                a_p[n, i] = s_pert * a_app[n, i]
                acc[i] = a_app[n, i] + g[i] + a_p[n, i]
            burn = math.sqrt(a_app[n, 0] ** 2 + a_app[n, 1] ** 2 + a_app[n, 2] ** 2) / isp_ge
            if record:
                row[T] = t
                for i in range(3):
                    row[R + i] = ri[i]
                    row[V + i] = vi[i]
                    row[A_APP + i] = a_app[n, i]
                    row[A_P + i] = a_p[n, i]
                row[M] = m[n]
                log[n, k, :] = row
            # step length: full dt unless the altitude stop is crossed inside it
            h = dt
            rz_end = ri[2] + vi[2] * dt + 0.5 * acc[2] * dt * dt
            landed = rz_end <= stop_alt
            if landed:
                lo, hi = 0.0, dt
                for _ in range(80):
                    mid = 0.5 * (lo + hi)
                    if ri[2] + vi[2] * mid + 0.5 * acc[2] * mid * mid <= stop_alt:
                        hi = mid
                    else:
                        lo = mid
                h = hi
            # classical RK4 with zero-order hold on the accelerations
            m0 = m[n]
            k1m = -burn * m0
            k2m = -burn * (m0 + 0.5 * h * k1m)
            k3m = -burn * (m0 + 0.5 * h * k2m)
            k4m = -burn * (m0 + h * k3m)
            m[n] = m0 + h / 6.0 * (k1m + 2 * k2m + 2 * k3m + k4m)
            for i in range(3):
                k1r = vi[i]
                k2r = vi[i] + 0.5 * h * acc[i]
                k3r = vi[i] + 0.5 * h * acc[i]
                k4r = vi[i] + h * acc[i]
                ri[i] = ri[i] + h / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r)
                vi[i] = vi[i] + h / 6.0 * (acc[i] + 2 * acc[i] + 2 * acc[i] + acc[i])
            step[n] = k + 1
            t_now[n] = t + h if landed else (k + 1) * dt
            clear = ri[2] - _ground(ri, H, W)
            if clear <= 0.0:
                n_pen[n] += 1
            if clear < min_clear[n]:
                min_clear[n] = clear
            ok = math.isfinite(m[n])
            for i in range(3):
                ok = ok and math.isfinite(ri[i]) and math.isfinite(vi[i])
            if not ok:
                status[n] = NONFINITE
            elif clear <= 0.0:
                status[n] = IMPACT
            elif m[n] <= dry_mass:
                status[n] = FUEL
            elif landed:
                status[n] = LANDED
            elif k + 1 >= n_max:
                status[n] = TIME_UP
            if status[n] != RUNNING and status[n] != NONFINITE and record:
                _guide(law, ri, vi, t_now[n], row, t_f, g, l1, l2, l3, gp, r_f, v_f,
                       H, W, ALPHA, BETA, GAMMA, LAM, delta, rule)
                row[T] = t_now[n]
                for i in range(3):
                    row[R + i] = ri[i]
                    row[V + i] = vi[i]
                    row[A_APP + i] = a_app[n, i]
                    row[A_P + i] = a_p[n, i]
                row[M] = m[n]
                log[n, k + 1, :] = row
