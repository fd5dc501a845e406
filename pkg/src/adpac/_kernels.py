"""Compiled inner loops for per-frame energy minimization.

The numpy implementations in energy.py are the reference; these kernels
reproduce them on plain arrays so a frame's full descent (up to thousands of
iterations) runs without Python overhead. Tests assert both paths agree.
"""
from __future__ import annotations

import numpy as np
from numba import njit

AREA_GUARD = 1e-6
RADIUS_FLOOR = 0.5

STATUS_CONVERGED = 0
STATUS_MAX_ITERS = 1
STATUS_NONFINITE = 2
STATUS_GROWN = 3  # contour outgrew the search disk; caller re-prepares geometry


@njit(cache=True)
def _bilinear(field, x, y):
    h, w = field.shape
    if x < 0.0:
        x = 0.0
    elif x > w - 1.0:
        x = w - 1.0
    if y < 0.0:
        y = 0.0
    elif y > h - 1.0:
        y = h - 1.0
    x0 = int(np.floor(x))
    y0 = int(np.floor(y))
    x1 = min(x0 + 1, w - 1)
    y1 = min(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    top = field[y0, x0] * (1.0 - fx) + field[y0, x1] * fx
    bot = field[y1, x0] * (1.0 - fx) + field[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


@njit(cache=True)
def _refresh_stats(rho, pix_val, pix_r, pix_sector, pix_k, pix_frac,
                   frame_mean, u, v):
    """Sector means from the precomputed in-disk pixel lists; returns fallbacks."""
    n = rho.size
    sum_in = np.zeros(n)
    cnt_in = np.zeros(n)
    sum_out = np.zeros(n)
    cnt_out = np.zeros(n)
    for p in range(pix_val.size):
        k = pix_k[p]
        kp = k + 1
        if kp == n:
            kp = 0
        boundary = rho[k] * (1.0 - pix_frac[p]) + rho[kp] * pix_frac[p]
        s = pix_sector[p]
        if pix_r[p] <= boundary:
            sum_in[s] += pix_val[p]
            cnt_in[s] += 1.0
        else:
            sum_out[s] += pix_val[p]
            cnt_out[s] += 1.0
    fallbacks = 0
    for s in range(n):
        if cnt_in[s] > 0.0:
            u[s] = sum_in[s] / cnt_in[s]
        else:
            u[s] = frame_mean
            fallbacks += 1
        if cnt_out[s] > 0.0:
            v[s] = sum_out[s] / cnt_out[s]
        else:
            v[s] = frame_mean
            fallbacks += 1
    return fallbacks


@njit(cache=True)
def run_descent(rho, search_radius, cx, cy, cos_t, sin_t, phi0,
                img, ix, iy, gx, gy,
                alpha_n, beta_n, gamma_n, kappa_n, zeta_n, ref_i,
                g_alpha, g_beta, g_gamma, g_kappa, g_zeta, nu_signed,
                mu1, mu2, step_cap, tol, max_iters, stats_refresh,
                pix_val, pix_r, pix_sector, pix_k, pix_frac, frame_mean):
    """Iterative Hadamard descent on rho (in place).

    Sector statistics refresh every stats_refresh iterations; edge/intensity
    samples and all banded products refresh every iteration. Returns
    (iterations_done, last_max_dr, status, stats_fallbacks).
    """
    n = rho.size
    c1 = np.cos(phi0)
    c2 = np.cos(2.0 * phi0)
    sin_half = np.sin(0.5 * phi0)
    half_area = 0.5 * phi0 * search_radius * search_radius
    u = np.zeros(n)
    v = np.zeros(n)
    iota = np.zeros(n)
    grad = np.zeros(n)
    fallbacks = 0
    it = 0
    max_dr = 0.0
    status = STATUS_MAX_ITERS
    while it < max_iters:
        if it % stats_refresh == 0:
            fallbacks += _refresh_stats(rho, pix_val, pix_r, pix_sector,
                                        pix_k, pix_frac, frame_mean, u, v)
            for m in range(n):
                mp = m + 1 if m + 1 < n else 0
                mm = m - 1 if m > 0 else n - 1
                a_in = 0.25 * sin_half * rho[m] * (rho[mp] + 2.0 * rho[m] + rho[mm])
                a_out = half_area - a_in
                if a_in < AREA_GUARD or a_out < AREA_GUARD:
                    iota[m] = 0.0
                else:
                    pi_m = _bilinear(img, cx + rho[m] * cos_t[m], cy + rho[m] * sin_t[m])
                    iota[m] = (-0.5 * kappa_n[m] * sin_half * (u[m] - v[m])
                               * ((pi_m - u[m]) / a_in + (pi_m - v[m]) / a_out))
        it += 1
        ok = True
        for m in range(n):
            mp = m + 1 if m + 1 < n else 0
            mm = m - 1 if m > 0 else n - 1
            mp2 = mp + 1 if mp + 1 < n else 0
            mm2 = mm - 1 if mm > 0 else n - 1
            x = cx + rho[m] * cos_t[m]
            y = cy + rho[m] * sin_t[m]
            curv = ((8.0 * alpha_n[m] + 2.0 * alpha_n[mm] + 2.0 * alpha_n[mp]) * rho[m]
                    - 4.0 * (alpha_n[m] + alpha_n[mm]) * c1 * rho[mm]
                    - 4.0 * (alpha_n[m] + alpha_n[mp]) * c1 * rho[mp]
                    + 2.0 * alpha_n[mm] * c2 * rho[mm2]
                    + 2.0 * alpha_n[mp] * c2 * rho[mp2])
            cont = (2.0 * (beta_n[m] + beta_n[mm]) * rho[m]
                    - 2.0 * beta_n[mm] * c1 * rho[mm]
                    - 2.0 * beta_n[m] * c1 * rho[mp])
            varg = ((iota[m] + iota[mm]) * rho[mm] + 4.0 * iota[m] * rho[m]
                    + (iota[m] + iota[mp]) * rho[mp])
            edge = -gamma_n[m] * (_bilinear(gx, x, y) * cos_t[m]
                                  + _bilinear(gy, x, y) * sin_t[m])
            chi = (zeta_n[m] * (_bilinear(img, x, y) - ref_i[m])
                   * (_bilinear(ix, x, y) * cos_t[m] + _bilinear(iy, x, y) * sin_t[m]))
            g = (g_alpha * curv + g_beta * cont + g_kappa * varg
                 + g_gamma * edge + g_zeta * chi + nu_signed)
            grad[m] = g
            if not np.isfinite(g):
                ok = False
        if not ok:
            status = STATUS_NONFINITE
            break
        max_dr = 0.0
        grown = False
        for m in range(n):
            move = mu1 * (1.0 + mu2 * rho[m]) * grad[m]
            if move > step_cap:
                move = step_cap
            elif move < -step_cap:
                move = -step_cap
            new = rho[m] - move
            if new < RADIUS_FLOOR:
                new = RADIUS_FLOOR
            dr = abs(new - rho[m])
            if dr > max_dr:
                max_dr = dr
            rho[m] = new
            if new > search_radius:
                grown = True
        if max_dr < tol:
            status = STATUS_CONVERGED
            break
        if grown:
            status = STATUS_GROWN
            break
    return it, max_dr, status, fallbacks
