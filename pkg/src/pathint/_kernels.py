"""Compiled O(n^2) loops behind :mod:`pathint.fracops` and :mod:`pathint.glsint`.

Every routine integrates a piecewise reconstruction of the samples against
a singular power kernel exactly per segment (or per cell pair); nothing
here samples the kernel at the diagonal.  ``linear`` selects the
piecewise-linear reconstruction, otherwise the reconstruction is constant
on ``[t_j, t_{j+1})`` with value ``f[j]``.

Row results are accumulated in index order so output does not depend on
scheduling.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)
GL8_X = 0.5 * (_GL8_X + 1.0)
GL8_W = 0.5 * _GL8_W
_GL4_X, _GL4_W = np.polynomial.legendre.leggauss(4)
GL4_X = 0.5 * (_GL4_X + 1.0)
GL4_W = 0.5 * _GL4_W


@njit(cache=True)
def dpow(a, h, q):
    """``(a + h)**q - a**q`` for ``a >= 0, h > 0`` without cancellation."""
    if a <= 0.0:
        return h**q
    return a**q * math.expm1(q * math.log1p(h / a))


@njit(cache=True)
def abs_affine_power(c0, m, x0, x1, e):
    """``int_{x0}^{x1} |c0 + m x| x^e dx`` for ``0 <= x0 < x1``.

    The affine factor is split at its root; ``e > -1`` is required when
    ``x0 == 0`` and the affine factor does not vanish there.
    """
    if m != 0.0:
        r = -c0 / m
        if x0 < r < x1:
            return abs_affine_power(c0, m, x0, r, e) + abs_affine_power(c0, m, r, x1, e)
    h = x1 - x0
    val = c0 * dpow(x0, h, e + 1.0) / (e + 1.0) + m * dpow(x0, h, e + 2.0) / (e + 2.0)
    return abs(val)


# ---------------------------------------------------------------------------
# left-sided Riemann-Liouville integral and Weyl derivative


@njit(cache=True)
def _is_uniform(t):
    h = (t[-1] - t[0]) / (t.size - 1)
    for i in range(t.size - 1):
        if abs(t[i + 1] - t[i] - h) > 1e-12 * h:
            return False
    return True


@njit(cache=True)
def _dpow_table(t, q):
    """``dpow(d h, h, q)`` for cell offsets ``d``; empty unless the grid is uniform.

    On a uniform grid the left-operator kernels depend on ``k - 1 - j`` only,
    so tabulating removes the transcendental calls from the inner loop.
    """
    if not _is_uniform(t):
        return np.empty(0)
    n = t.size
    h = (t[-1] - t[0]) / (n - 1)
    out = np.empty(n)
    for d in range(n):
        out[d] = dpow(d * h, h, q)
    return out


@njit(cache=True)
def rl_integral_left(t, f, beta, linear):
    n = t.size
    out = np.zeros(n)
    g = math.gamma(beta)
    tb = _dpow_table(t, beta)
    tb1 = _dpow_table(t, beta + 1.0)
    tab = tb.size > 0
    for k in range(1, n):
        s = t[k]
        acc = 0.0
        for j in range(k):
            h = t[j + 1] - t[j]
            a = s - t[j + 1]
            if tab:
                p0 = tb[k - 1 - j]
                p1 = tb1[k - 1 - j]
            else:
                p0 = dpow(a, h, beta)
                p1 = dpow(a, h, beta + 1.0)
            if linear:
                m = (f[j + 1] - f[j]) / h
                # f(u) = (f[j+1] + m a) - m x with x = s - u in [a, a+h]
                c = f[j + 1] + m * a
                acc += c * p0 / beta - m * p1 / (beta + 1.0)
            else:
                acc += f[j] * p0 / beta
        out[k] = acc / g
    return out


@njit(cache=True)
def weyl_left(t, f, beta, linear):
    """``D^beta_{0+} f`` at grid points ``t[1:]``; ``out[0]`` copies ``out[1]``.

    For the constant reconstruction the value at ``t_k`` is the left limit,
    so a jump located exactly at ``t_k`` does not enter.
    """
    n = t.size
    out = np.zeros(n)
    g = math.gamma(1.0 - beta)
    tm = _dpow_table(t, -beta)
    tq = _dpow_table(t, 1.0 - beta)
    tab = tm.size > 0
    for k in range(1, n):
        s = t[k]
        fs = f[k] if linear else f[k - 1]
        acc = 0.0
        for j in range(k):
            h = t[j + 1] - t[j]
            a = s - t[j + 1]
            if linear:
                m = (f[j + 1] - f[j]) / h
                if j == k - 1:
                    acc += m * h ** (1.0 - beta) / (1.0 - beta)
                else:
                    c0 = f[k] - f[j + 1] - m * a
                    if tab:
                        acc += -c0 * tm[k - 1 - j] / beta + m * tq[k - 1 - j] / (1.0 - beta)
                    else:
                        acc += -c0 * dpow(a, h, -beta) / beta + m * dpow(a, h, 1.0 - beta) / (1.0 - beta)
            elif j < k - 1:
                w = tm[k - 1 - j] if tab else dpow(a, h, -beta)
                acc += -(fs - f[j]) * w / beta
        out[k] = (fs / s**beta + beta * acc) / g
    out[0] = out[1]
    return out


@njit(cache=True)
def weyl_right(t, g, K, beta, linear):
    """``D^{1-beta}_{t-} g_{t-}`` at ``t[0..K]`` with ``t = t[K]``; zero at ``t[K]``.

    Real-valued convention: the value for ``g(s) = s`` is
    ``(t - s)^beta / Gamma(1 + beta)``.
    """
    out = np.zeros(K + 1)
    gam = math.gamma(beta)
    gt = g[K] if linear else g[K - 1]
    T = t[K]
    for k in range(K):
        s = t[k]
        acc = 0.0
        for j in range(k, K):
            h = t[j + 1] - t[j]
            a = t[j] - s
            if linear:
                m = (g[j + 1] - g[j]) / h
                if j == k:
                    acc += m * (1.0 - beta) * h**beta / beta
                else:
                    c0 = g[j] - g[k] - m * a
                    acc += -c0 * dpow(a, h, beta - 1.0) + m * (1.0 - beta) * dpow(a, h, beta) / beta
            elif j > k:
                acc += -(g[j] - g[k]) * dpow(a, h, beta - 1.0)
        out[k] = ((gt - g[k]) * (T - s) ** (beta - 1.0) + acc) / gam
    return out


# ---------------------------------------------------------------------------
# product integration of power-law atoms against a linear interpolant


@njit(cache=True)
def cell_weights(a, h, e, gx, gw):
    """Weights ``(P, Q)`` with ``int_a^{a+h} x^e L(x) dx = P L(a) + Q L(a+h)``, ``L`` linear."""
    s1 = dpow(a, h, e + 1.0) / (e + 1.0)
    if a < 4.0 * h:
        s2 = dpow(a, h, e + 2.0) / (e + 2.0)
        q = (s2 - a * s1) / h
    else:
        q = 0.0
        for r in range(gx.size):
            q += gw[r] * (a + h * gx[r]) ** e * gx[r]
        q *= h
    return s1 - q, q


@njit(cache=True)
def atom_product(t, R, K, coef, e, gx, gw):
    """``sum_j coef[j] int_{t_j}^{t_K} (s - t_j)^e R_lin(s) ds``; zero coefficients skipped."""
    total = 0.0
    for j in range(K):
        c = coef[j]
        if c == 0.0:
            continue
        acc = 0.0
        for i in range(j, K):
            p, q = cell_weights(t[i] - t[j], t[i + 1] - t[i], e, gx, gw)
            acc += p * R[i] + q * R[i + 1]
        total += c * acc
    return total


# ---------------------------------------------------------------------------
# fractional Besov norms and the GRR double integral


@njit(cache=True)
def besov_w1(t, f, beta, linear):
    n = t.size
    best = 0.0
    e = -1.0 - beta
    for i in range(n - 1):
        s = t[i]
        acc = 0.0
        for j in range(i, n - 1):
            h = t[j + 1] - t[j]
            a = t[j] - s
            if linear:
                m = (f[j + 1] - f[j]) / h
                if j == i:
                    acc += abs(m) * h ** (1.0 - beta) / (1.0 - beta)
                else:
                    acc += abs_affine_power(f[j] - f[i] - m * a, m, a, a + h, e)
            elif j > i:
                acc += -abs(f[j] - f[i]) * dpow(a, h, -beta) / beta
            k = j + 1
            val = abs(f[k] - f[i]) / (t[k] - s) ** beta + acc
            if val > best:
                best = val
    return best


@njit(cache=True)
def weighted_abs_integral(t, f, beta, linear):
    """``int_0^T |f(s)| s^{-beta} ds`` of the reconstruction."""
    acc = 0.0
    for j in range(t.size - 1):
        h = t[j + 1] - t[j]
        if linear:
            m = (f[j + 1] - f[j]) / h
            acc += abs_affine_power(f[j] - m * t[j], m, t[j], t[j + 1], -beta)
        else:
            acc += abs(f[j]) * dpow(t[j], h, 1.0 - beta) / (1.0 - beta)
    return acc


@njit(cache=True)
def _cell_kernel_integral(s0, s1, u0, u1, beta):
    """``int_{s0}^{s1} int_{u0}^{u1} (s-u)^{-1-beta} du ds`` for ``u1 <= s0``."""
    q = 1.0 - beta
    return ((s1 - u1) ** q - (s0 - u1) ** q - (s1 - u0) ** q + (s0 - u0) ** q) / (beta * q)


@njit(cache=True)
def uniform_cell_kernel(n, h, beta):
    """Cell-pair kernel integrals for a uniform grid indexed by cell offset ``d >= 1``."""
    q = 1.0 - beta
    out = np.zeros(n)
    for d in range(1, n):
        if d == 1:
            val = 2.0 - 2.0**q
        else:
            x = 1.0 / d
            val = -(d**q) * (math.expm1(q * math.log1p(-x)) + math.expm1(q * math.log1p(x)))
        out[d] = h**q * val / (beta * q)
    return out


@njit(cache=True)
def const_pair_sum(t, f, beta, uniform_kernel, uniform):
    """``sum_{j<i} |f_i - f_j| int_cell_i int_cell_j (s-u)^{-1-beta}`` for step reconstructions."""
    m = t.size - 1
    total = 0.0
    for i in range(1, m):
        fi = f[i]
        row = 0.0
        for j in range(i):
            df = abs(fi - f[j])
            if df == 0.0:
                continue
            if uniform:
                row += df * uniform_kernel[i - j]
            else:
                row += df * _cell_kernel_integral(t[i], t[i + 1], t[j], t[j + 1], beta)
        total += row
    return total


@njit(cache=True)
def _adjacent_pair(hs, hu, ms, mu, p, q, gx, gw):
    """Adjacent cells sharing a corner where ``F = ms*sigma + mu*tau`` vanishes.

    Integrates ``|F|^p r^(q-1-p)`` over ``[0,hs] x [0,hu]`` in the
    coordinates ``sigma = r w``, ``tau = r (1-w)``, which reduces it to a
    one-dimensional integral in ``w``.
    """
    cuts = np.empty(4)
    cuts[0] = 0.0
    cuts[1] = hs / (hs + hu)
    ncut = 2
    if ms != mu:
        w_star = mu / (mu - ms)
        if 0.0 < w_star < 1.0:
            cuts[ncut] = w_star
            ncut += 1
    cuts[ncut] = 1.0
    ncut += 1
    cuts[:ncut] = np.sort(cuts[:ncut])
    total = 0.0
    for c in range(ncut - 1):
        w0 = cuts[c]
        w1 = cuts[c + 1]
        if w1 <= w0:
            continue
        for r in range(gx.size):
            w = w0 + (w1 - w0) * gx[r]
            phi = abs(ms * w + mu * (1.0 - w))
            radius = min(hs / w, hu / (1.0 - w))
            total += (w1 - w0) * gw[r] * phi**p * radius ** (q + 1.0) / (q + 1.0)
    return total


@njit(cache=True)
def _rect_gauss(s0, s1, u0, u1, fs0, ms, fu0, mu, p, kexp, gx, gw):
    hs = s1 - s0
    hu = u1 - u0
    acc = 0.0
    for a in range(gx.size):
        s = s0 + hs * gx[a]
        fs = fs0 + ms * (s - s0)
        for b in range(gx.size):
            u = u0 + hu * gx[b]
            val = abs(fs - fu0 - mu * (u - u0))
            if val != 0.0:
                acc += gw[a] * gw[b] * val**p * (s - u) ** kexp
    return acc * hs * hu


@njit(cache=True)
def linear_pair_sum(t, f, p, kexp, gx4, gw4, gx8, gw8, ktable, uniform):
    """``int_0^T int_0^s |f(s) - f(u)|^p (s-u)^kexp du ds`` for the linear reconstruction.

    Diagonal cells are integrated in closed form, adjacent cells through
    :func:`_adjacent_pair`, the rest with tensor Gauss-Legendre (split into
    quarters when ``f(s) - f(u)`` changes sign on the cell).  ``ktable[d]``
    caches the kernel at the Gauss nodes for uniform grids.
    """
    m = t.size - 1
    q = p + kexp + 1.0
    if q <= 0.0:
        for i in range(m):
            if f[i + 1] != f[i]:
                return np.inf
    slopes = np.empty(m)
    for i in range(m):
        slopes[i] = (f[i + 1] - f[i]) / (t[i + 1] - t[i])
    total = 0.0
    nq = gx4.size
    for i in range(m):
        s0 = t[i]
        s1 = t[i + 1]
        hs = s1 - s0
        ms = slopes[i]
        row = 0.0
        if ms != 0.0:
            row += abs(ms) ** p * hs ** (q + 1.0) / (q * (q + 1.0))
        if i >= 1:
            row += _adjacent_pair(hs, t[i] - t[i - 1], ms, slopes[i - 1], p, q, gx8, gw8)
        for j in range(i - 1):
            u0 = t[j]
            u1 = t[j + 1]
            mu = slopes[j]
            c00 = f[i] - f[j]
            c01 = f[i] - f[j + 1]
            c10 = f[i + 1] - f[j]
            c11 = f[i + 1] - f[j + 1]
            lo = min(min(c00, c01), min(c10, c11))
            hi = max(max(c00, c01), max(c10, c11))
            if lo >= 0.0 or hi <= 0.0:
                if uniform:
                    d = i - j
                    acc = 0.0
                    for a in range(nq):
                        fs = f[i] + ms * hs * gx4[a]
                        for b in range(nq):
                            val = abs(fs - f[j] - mu * hs * gx4[b])
                            if val != 0.0:
                                acc += gw4[a] * gw4[b] * val**p * ktable[d, a, b]
                    row += acc * hs * hs
                else:
                    row += _rect_gauss(s0, s1, u0, u1, f[i], ms, f[j], mu, p, kexp, gx4, gw4)
            else:
                sm = 0.5 * (s0 + s1)
                um = 0.5 * (u0 + u1)
                fsm = f[i] + ms * (sm - s0)
                fum = f[j] + mu * (um - u0)
                row += _rect_gauss(s0, sm, u0, um, f[i], ms, f[j], mu, p, kexp, gx4, gw4)
                row += _rect_gauss(s0, sm, um, u1, f[i], ms, fum, mu, p, kexp, gx4, gw4)
                row += _rect_gauss(sm, s1, u0, um, fsm, ms, f[j], mu, p, kexp, gx4, gw4)
                row += _rect_gauss(sm, s1, um, u1, fsm, ms, fum, mu, p, kexp, gx4, gw4)
        total += row
    return total


@njit(cache=True)
def uniform_kernel_table(n, h, kexp, gx):
    nq = gx.size
    table = np.zeros((n, nq, nq))
    for d in range(2, n):
        for a in range(nq):
            for b in range(nq):
                table[d, a, b] = (h * (d + gx[a] - gx[b])) ** kexp
    return table


@njit(cache=True)
def max_difference_ratio(t, f, p, expo):
    """``max_{s<t} |f(t) - f(s)|^p / (t - s)^expo`` over grid pairs."""
    best = 0.0
    n = t.size
    for i in range(n - 1):
        for k in range(i + 1, n):
            val = abs(f[k] - f[i]) ** p / (t[k] - t[i]) ** expo
            if val > best:
                best = val
    return best
