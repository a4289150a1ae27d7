"""Numba kernels backing the finite-volume solver and the structure function.

Layout conventions:

* fields are (4, n, n), component axis leading;
* face arrays RF/LF hold the right/left face traces of cells -1..n (index
  cell+1), so the flux at interface k (between cells k-1 and k, k = 0..n)
  reads RF[..., k, ...] and LF[..., k+1, ...]; the -1 and n slots are
  periodic copies of cells n-1 and 0;
* the x-sweep strides faces along axis 1, the y-sweep along axis 2.

All arrays passed to kernels are full C-contiguous buffers, with periodic
wrap handled by peeled boundary iterations; kernels use
error_model="numpy" (IEEE division) so LLVM vectorizes the division- and
sqrt-heavy inner loops. No fastmath: results are bitwise reproducible.
"""

import numpy as np
from numba import njit

WENO_EPS = 1e-6

_JIT = dict(cache=True, error_model="numpy")


# ---------------------------------------------------------------------------
# face traces

@njit(inline="always", **_JIT)
def _mc_faces(um1, u0, up1):
    dm = u0 - um1
    dp = up1 - u0
    ctr = 0.5 * (dm + dp)
    m = min(abs(ctr), 2.0 * min(abs(dm), abs(dp)))
    sigma = np.copysign(m, ctr) if dm * dp > 0.0 else 0.0
    return u0 + 0.5 * sigma, u0 - 0.5 * sigma


@njit(inline="always", **_JIT)
def _weno_faces(um1, u0, up1):
    # two-point WENO, third-order linear weights (1/3, 2/3), eps = 1e-6
    dm = u0 - um1
    dp = up1 - u0
    A = (WENO_EPS + dm * dm) ** 2
    B = (WENO_EPS + dp * dp) ** 2
    right = u0 + 0.5 * (B * dm + 2.0 * A * dp) / (B + 2.0 * A)
    left = u0 - 0.5 * (A * dp + 2.0 * B * dm) / (A + 2.0 * B)
    return right, left


# The trace and flux kernels are written out explicitly (not through a
# factory): numba's on-disk cache keys functions by qualified name, so
# factory-generated variants collide and never hit the cache.

@njit(**_JIT)
def traces_x_mc(u, RF, LF):
    # RF/LF[c, i+1, j] = faces of cell i; rows 0 and n+1 filled by wrap
    n = u.shape[1]
    for c in range(4):
        for i in range(1, n - 1):
            for j in range(n):
                r, l = _mc_faces(u[c, i - 1, j], u[c, i, j], u[c, i + 1, j])
                RF[c, i + 1, j] = r
                LF[c, i + 1, j] = l
        for j in range(n):
            r, l = _mc_faces(u[c, n - 1, j], u[c, 0, j], u[c, 1, j])
            RF[c, 1, j] = r
            LF[c, 1, j] = l
            r, l = _mc_faces(u[c, n - 2, j], u[c, n - 1, j], u[c, 0, j])
            RF[c, n, j] = r
            LF[c, n, j] = l
        for j in range(n):
            RF[c, 0, j] = RF[c, n, j]
            LF[c, 0, j] = LF[c, n, j]
            RF[c, n + 1, j] = RF[c, 1, j]
            LF[c, n + 1, j] = LF[c, 1, j]


@njit(**_JIT)
def traces_x_weno(u, RF, LF):
    n = u.shape[1]
    for c in range(4):
        for i in range(1, n - 1):
            for j in range(n):
                r, l = _weno_faces(u[c, i - 1, j], u[c, i, j], u[c, i + 1, j])
                RF[c, i + 1, j] = r
                LF[c, i + 1, j] = l
        for j in range(n):
            r, l = _weno_faces(u[c, n - 1, j], u[c, 0, j], u[c, 1, j])
            RF[c, 1, j] = r
            LF[c, 1, j] = l
            r, l = _weno_faces(u[c, n - 2, j], u[c, n - 1, j], u[c, 0, j])
            RF[c, n, j] = r
            LF[c, n, j] = l
        for j in range(n):
            RF[c, 0, j] = RF[c, n, j]
            LF[c, 0, j] = LF[c, n, j]
            RF[c, n + 1, j] = RF[c, 1, j]
            LF[c, n + 1, j] = LF[c, 1, j]


@njit(**_JIT)
def traces_y_mc(u, RF, LF):
    n = u.shape[1]
    for c in range(4):
        for i in range(n):
            for j in range(1, n - 1):
                r, l = _mc_faces(u[c, i, j - 1], u[c, i, j], u[c, i, j + 1])
                RF[c, i, j + 1] = r
                LF[c, i, j + 1] = l
            r, l = _mc_faces(u[c, i, n - 1], u[c, i, 0], u[c, i, 1])
            RF[c, i, 1] = r
            LF[c, i, 1] = l
            r, l = _mc_faces(u[c, i, n - 2], u[c, i, n - 1], u[c, i, 0])
            RF[c, i, n] = r
            LF[c, i, n] = l
            RF[c, i, 0] = RF[c, i, n]
            LF[c, i, 0] = LF[c, i, n]
            RF[c, i, n + 1] = RF[c, i, 1]
            LF[c, i, n + 1] = LF[c, i, 1]


@njit(**_JIT)
def traces_y_weno(u, RF, LF):
    n = u.shape[1]
    for c in range(4):
        for i in range(n):
            for j in range(1, n - 1):
                r, l = _weno_faces(u[c, i, j - 1], u[c, i, j], u[c, i, j + 1])
                RF[c, i, j + 1] = r
                LF[c, i, j + 1] = l
            r, l = _weno_faces(u[c, i, n - 1], u[c, i, 0], u[c, i, 1])
            RF[c, i, 1] = r
            LF[c, i, 1] = l
            r, l = _weno_faces(u[c, i, n - 2], u[c, i, n - 1], u[c, i, 0])
            RF[c, i, n] = r
            LF[c, i, n] = l
            RF[c, i, 0] = RF[c, i, n]
            LF[c, i, 0] = LF[c, i, n]
            RF[c, i, n + 1] = RF[c, i, 1]
            LF[c, i, n + 1] = LF[c, i, 1]


@njit(**_JIT)
def copy_faces_x(u, RF, LF):
    # piecewise-constant traces: both faces equal the cell value
    n = u.shape[1]
    for c in range(4):
        for i in range(n):
            for j in range(n):
                v = u[c, i, j]
                RF[c, i + 1, j] = v
                LF[c, i + 1, j] = v
        for j in range(n):
            RF[c, 0, j] = RF[c, n, j]
            LF[c, 0, j] = LF[c, n, j]
            RF[c, n + 1, j] = RF[c, 1, j]
            LF[c, n + 1, j] = LF[c, 1, j]


@njit(**_JIT)
def copy_faces_y(u, RF, LF):
    n = u.shape[1]
    for c in range(4):
        for i in range(n):
            for j in range(n):
                v = u[c, i, j]
                RF[c, i, j + 1] = v
                LF[c, i, j + 1] = v
            RF[c, i, 0] = RF[c, i, n]
            LF[c, i, 0] = LF[c, i, n]
            RF[c, i, n + 1] = RF[c, i, 1]
            LF[c, i, n + 1] = LF[c, i, 1]


# ---------------------------------------------------------------------------
# two-state fluxes (scalar cores shared by the x/y sweeps)

@njit(inline="always", **_JIT)
def _rusanov_core(rL, mnL, mtL, eL, rR, mnR, mtR, eR, gamma):
    gm1 = gamma - 1.0
    riL = 1.0 / rL
    riR = 1.0 / rR
    wnL = mnL * riL
    wtL = mtL * riL
    wnR = mnR * riR
    wtR = mtR * riR
    pL = gm1 * (eL - 0.5 * (mnL * wnL + mtL * wtL))
    pR = gm1 * (eR - 0.5 * (mnR * wnR + mtR * wtR))
    cL = np.sqrt(gamma * pL * riL)
    cR = np.sqrt(gamma * pR * riR)
    s = max(abs(wnL) + cL, abs(wnR) + cR)
    f0 = 0.5 * (mnL + mnR) - 0.5 * s * (rR - rL)
    fn = 0.5 * ((mnL * wnL + pL) + (mnR * wnR + pR)) - 0.5 * s * (mnR - mnL)
    ft = 0.5 * (mnL * wtL + mnR * wtR) - 0.5 * s * (mtR - mtL)
    fe = 0.5 * ((eL + pL) * wnL + (eR + pR) * wnR) - 0.5 * s * (eR - eL)
    return f0, fn, ft, fe


@njit(inline="always", **_JIT)
def _hll_core(rL, mnL, mtL, eL, rR, mnR, mtR, eR, gamma):
    # two-wave HLL with Davis speed estimates, in the equivalent
    # branch-free form F = fL - q*((fR-fL) - sR+*(uR-uL)), q = sL-/(sR+ - sL-)
    gm1 = gamma - 1.0
    riL = 1.0 / rL
    riR = 1.0 / rR
    wnL = mnL * riL
    wtL = mtL * riL
    wnR = mnR * riR
    wtR = mtR * riR
    pL = gm1 * (eL - 0.5 * (mnL * wnL + mtL * wtL))
    pR = gm1 * (eR - 0.5 * (mnR * wnR + mtR * wtR))
    cL = np.sqrt(gamma * pL * riL)
    cR = np.sqrt(gamma * pR * riR)
    sL = min(min(wnL - cL, wnR - cR), 0.0)
    sR = max(max(wnL + cL, wnR + cR), 0.0)
    q = sL / (sR - sL)
    f0 = mnL - q * ((mnR - mnL) - sR * (rR - rL))
    a = mnL * wnL + pL
    b = mnR * wnR + pR
    fn = a - q * ((b - a) - sR * (mnR - mnL))
    a = mnL * wtL
    b = mnR * wtR
    ft = a - q * ((b - a) - sR * (mtR - mtL))
    a = (eL + pL) * wnL
    b = (eR + pR) * wnR
    fe = a - q * ((b - a) - sR * (eR - eL))
    return f0, fn, ft, fe


@njit(inline="always", **_JIT)
def _hllc_core(rL, mnL, mtL, eL, rR, mnR, mtR, eR, gamma):
    # HLLC with the contact-restoring middle states (Davis outer speeds)
    gm1 = gamma - 1.0
    riL = 1.0 / rL
    riR = 1.0 / rR
    wnL = mnL * riL
    wtL = mtL * riL
    wnR = mnR * riR
    wtR = mtR * riR
    pL = gm1 * (eL - 0.5 * (mnL * wnL + mtL * wtL))
    pR = gm1 * (eR - 0.5 * (mnR * wnR + mtR * wtR))
    cL = np.sqrt(gamma * pL * riL)
    cR = np.sqrt(gamma * pR * riR)
    sL = min(wnL - cL, wnR - cR)
    sR = max(wnL + cL, wnR + cR)
    if sL >= 0.0:
        return mnL, mnL * wnL + pL, mnL * wtL, (eL + pL) * wnL
    if sR <= 0.0:
        return mnR, mnR * wnR + pR, mnR * wtR, (eR + pR) * wnR
    qL = rL * (sL - wnL)
    qR = rR * (sR - wnR)
    ss = (pR - pL + wnL * qL - wnR * qR) / (qL - qR)
    if ss >= 0.0:
        coef = qL / (sL - ss)
        es = coef * (eL * riL + (ss - wnL) * (ss + pL / qL))
        return (mnL + sL * (coef - rL),
                (mnL * wnL + pL) + sL * (coef * ss - mnL),
                mnL * wtL + sL * (coef * wtL - mtL),
                (eL + pL) * wnL + sL * (es - eL))
    coef = qR / (sR - ss)
    es = coef * (eR * riR + (ss - wnR) * (ss + pR / qR))
    return (mnR + sR * (coef - rR),
            (mnR * wnR + pR) + sR * (coef * ss - mnR),
            mnR * wtR + sR * (coef * wtR - mtR),
            (eR + pR) * wnR + sR * (es - eR))


@njit(**_JIT)
def flux_x_rusanov(RF, LF, gamma, mn, mt, F):
    K, J = F.shape[1], F.shape[2]
    for k in range(K):
        for j in range(J):
            f0, fn, ft, fe = _rusanov_core(
                RF[0, k, j], RF[mn, k, j], RF[mt, k, j], RF[3, k, j],
                LF[0, k + 1, j], LF[mn, k + 1, j], LF[mt, k + 1, j], LF[3, k + 1, j],
                gamma)
            F[0, k, j] = f0
            F[mn, k, j] = fn
            F[mt, k, j] = ft
            F[3, k, j] = fe


@njit(**_JIT)
def flux_x_hll(RF, LF, gamma, mn, mt, F):
    K, J = F.shape[1], F.shape[2]
    for k in range(K):
        for j in range(J):
            f0, fn, ft, fe = _hll_core(
                RF[0, k, j], RF[mn, k, j], RF[mt, k, j], RF[3, k, j],
                LF[0, k + 1, j], LF[mn, k + 1, j], LF[mt, k + 1, j], LF[3, k + 1, j],
                gamma)
            F[0, k, j] = f0
            F[mn, k, j] = fn
            F[mt, k, j] = ft
            F[3, k, j] = fe


@njit(**_JIT)
def flux_x_hllc(RF, LF, gamma, mn, mt, F):
    K, J = F.shape[1], F.shape[2]
    for k in range(K):
        for j in range(J):
            f0, fn, ft, fe = _hllc_core(
                RF[0, k, j], RF[mn, k, j], RF[mt, k, j], RF[3, k, j],
                LF[0, k + 1, j], LF[mn, k + 1, j], LF[mt, k + 1, j], LF[3, k + 1, j],
                gamma)
            F[0, k, j] = f0
            F[mn, k, j] = fn
            F[mt, k, j] = ft
            F[3, k, j] = fe


@njit(**_JIT)
def flux_y_rusanov(RF, LF, gamma, mn, mt, F):
    I, K = F.shape[1], F.shape[2]
    for i in range(I):
        for k in range(K):
            f0, fn, ft, fe = _rusanov_core(
                RF[0, i, k], RF[mn, i, k], RF[mt, i, k], RF[3, i, k],
                LF[0, i, k + 1], LF[mn, i, k + 1], LF[mt, i, k + 1], LF[3, i, k + 1],
                gamma)
            F[0, i, k] = f0
            F[mn, i, k] = fn
            F[mt, i, k] = ft
            F[3, i, k] = fe


@njit(**_JIT)
def flux_y_hll(RF, LF, gamma, mn, mt, F):
    I, K = F.shape[1], F.shape[2]
    for i in range(I):
        for k in range(K):
            f0, fn, ft, fe = _hll_core(
                RF[0, i, k], RF[mn, i, k], RF[mt, i, k], RF[3, i, k],
                LF[0, i, k + 1], LF[mn, i, k + 1], LF[mt, i, k + 1], LF[3, i, k + 1],
                gamma)
            F[0, i, k] = f0
            F[mn, i, k] = fn
            F[mt, i, k] = ft
            F[3, i, k] = fe


@njit(**_JIT)
def flux_y_hllc(RF, LF, gamma, mn, mt, F):
    I, K = F.shape[1], F.shape[2]
    for i in range(I):
        for k in range(K):
            f0, fn, ft, fe = _hllc_core(
                RF[0, i, k], RF[mn, i, k], RF[mt, i, k], RF[3, i, k],
                LF[0, i, k + 1], LF[mn, i, k + 1], LF[mt, i, k + 1], LF[3, i, k + 1],
                gamma)
            F[0, i, k] = f0
            F[mn, i, k] = fn
            F[mt, i, k] = ft
            F[3, i, k] = fe


# ---------------------------------------------------------------------------
# SSP stage update with positivity floors

@njit(**_JIT)
def div_update(u, u0, Fx, Fy, dt_over_delta, blend, out):
    """out = blend*u0 + (1-blend)*(u - dt/delta * div F)."""
    n = u.shape[1]
    a = 1.0 - blend
    for c in range(4):
        for i in range(n):
            for j in range(n):
                v = u[c, i, j] - dt_over_delta * (
                    Fx[c, i + 1, j] - Fx[c, i, j] + Fy[c, i, j + 1] - Fy[c, i, j])
                out[c, i, j] = blend * u0[c, i, j] + a * v


@njit(**_JIT)
def floor_and_speed(out, gamma, rho_floor, p_floor, splane):
    """Floor rho and p in place (E rebuilt from the floored p), write the
    per-cell wave speed |w|_max + c, and return the floored-cell count."""
    n = out.shape[1]
    gm1 = gamma - 1.0
    floored = 0
    for i in range(n):
        for j in range(n):
            r = out[0, i, j]
            mx = out[1, i, j]
            my = out[2, i, j]
            e = out[3, i, j]
            fl_r = r < rho_floor
            floored += fl_r
            r = max(r, rho_floor)
            ri = 1.0 / r
            ke = 0.5 * (mx * mx + my * my) * ri
            p = gm1 * (e - ke)
            fl_p = p < p_floor
            floored += fl_p
            p = max(p, p_floor)
            e_fl = p / gm1 + ke
            e = e_fl if fl_p else e
            out[0, i, j] = r
            out[3, i, j] = e
            splane[i, j] = max(abs(mx), abs(my)) * ri + np.sqrt(gamma * p * ri)
    return floored


@njit(**_JIT)
def speed_plane(u, gamma, splane):
    """Per-cell wave speed max(|wx|, |wy|) + c, no floors."""
    n = u.shape[1]
    gm1 = gamma - 1.0
    for i in range(n):
        for j in range(n):
            r = u[0, i, j]
            mx = u[1, i, j]
            my = u[2, i, j]
            e = u[3, i, j]
            ri = 1.0 / r
            p = gm1 * (e - 0.5 * (mx * mx + my * my) * ri)
            splane[i, j] = max(abs(mx), abs(my)) * ri + np.sqrt(gamma * p * ri)


# ---------------------------------------------------------------------------
# lattice structure function helper

@njit(**_JIT)
def offset_abs_pow_rowsums(a, dx, dy, p, rows):
    """rows[i] = sum_j |a[(i+dx)%n, (j+dy)%n] - a[i, j]|**p  (0 <= dx,dy < n)."""
    n = a.shape[0]
    cut = n - dy
    for i in range(n):
        ii = i + dx
        if ii >= n:
            ii -= n
        acc = 0.0
        if p == 1.0:
            for j in range(cut):
                acc += abs(a[ii, j + dy] - a[i, j])
            for j in range(cut, n):
                acc += abs(a[ii, j + dy - n] - a[i, j])
        elif p == 2.0:
            for j in range(cut):
                d = a[ii, j + dy] - a[i, j]
                acc += d * d
            for j in range(cut, n):
                d = a[ii, j + dy - n] - a[i, j]
                acc += d * d
        else:
            for j in range(cut):
                acc += abs(a[ii, j + dy] - a[i, j]) ** p
            for j in range(cut, n):
                acc += abs(a[ii, j + dy - n] - a[i, j]) ** p
        rows[i] = acc
