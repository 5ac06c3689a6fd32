"""Pure-numpy reference implementations of the hot kernels.

Semantics shared with the compiled Cython backend:

* A piecewise activation is tabulated as ``edges`` (B+1 floats, first -inf,
  last +inf, strictly increasing), ``kinds`` (B int32 codes) and ``par``
  (B x 4 float64 parameter rows).  Codes: 0 = affine ``a*x + b`` with
  ``par = [a, b, _, _]``; 1 = power ``s*sign(x)*|x|**p + a*x + b`` with
  ``par = [s, p, a, b]``.
* Inversion assumes the tabulated map is strictly increasing; callers gate
  on the classification verdict.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "pure"

KIND_AFFINE = 0
KIND_POWER = 1


def _branch_values(kinds, par, x, idx):
    """Evaluate branch ``idx[i]`` at ``x[i]`` (arrays of equal length)."""
    out = np.empty_like(x, dtype=np.float64)
    for j in range(len(kinds)):
        m = idx == j
        if not np.any(m):
            continue
        xj = x[m]
        if kinds[j] == KIND_AFFINE:
            a, b = par[j, 0], par[j, 1]
            out[m] = a * xj + b
        else:
            s, p, a, b = par[j]
            out[m] = s * np.sign(xj) * np.abs(xj) ** p + a * xj + b
    return out


def act_eval(edges, kinds, par, x):
    """Apply the tabulated piecewise map elementwise."""
    x = np.asarray(x, dtype=np.float64)
    flat = x.ravel()
    # interior breakpoints: edges[1:-1]; branch j covers [edges[j], edges[j+1])
    idx = np.searchsorted(edges[1:-1], flat, side="right")
    out = _branch_values(kinds, par, flat, idx)
    return out.reshape(x.shape)


def _branch_derivative(kinds, par, x, idx):
    out = np.empty_like(x, dtype=np.float64)
    for j in range(len(kinds)):
        m = idx == j
        if not np.any(m):
            continue
        xj = x[m]
        if kinds[j] == KIND_AFFINE:
            out[m] = par[j, 0]
        else:
            s, p, a, _ = par[j]
            out[m] = s * p * np.abs(xj) ** (p - 1.0) + a
    return out


def act_deriv(edges, kinds, par, x):
    """Elementwise derivative of the tabulated map (one-sided at breakpoints)."""
    x = np.asarray(x, dtype=np.float64)
    flat = x.ravel()
    idx = np.searchsorted(edges[1:-1], flat, side="right")
    return _branch_derivative(kinds, par, flat, idx).reshape(x.shape)


def act_invert(edges, kinds, par, vedges, y, tol=1e-14):
    """Invert a strictly increasing tabulated map elementwise.

    ``vedges`` holds the map's values at the interior breakpoints.
    """
    y = np.asarray(y, dtype=np.float64)
    flat = y.ravel()
    idx = np.searchsorted(vedges, flat, side="right")
    out = np.empty_like(flat)
    for j in range(len(kinds)):
        m = idx == j
        if not np.any(m):
            continue
        yj = flat[m]
        if kinds[j] == KIND_AFFINE:
            a, b = par[j, 0], par[j, 1]
            out[m] = (yj - b) / a
        else:
            out[m] = _invert_power_branch(par[j], edges[j], edges[j + 1], yj, tol)
    return out.reshape(y.shape)


def _power_val(p4, x):
    s, p, a, b = p4
    return s * np.sign(x) * np.abs(x) ** p + a * x + b


def _invert_power_branch(p4, lo, hi, y, tol):
    # establish finite brackets, expanding past infinite branch ends
    anchor = 0.0
    if np.isfinite(lo):
        anchor = lo
    elif np.isfinite(hi):
        anchor = hi
    xlo = np.full_like(y, lo if np.isfinite(lo) else anchor - 1.0)
    step = np.ones_like(y)
    if not np.isfinite(lo):
        need = _power_val(p4, xlo) > y
        while np.any(need):
            xlo[need] -= step[need]
            step[need] *= 2.0
            need = _power_val(p4, xlo) > y
    xhi = np.full_like(y, hi if np.isfinite(hi) else anchor + 1.0)
    step = np.ones_like(y)
    if not np.isfinite(hi):
        need = _power_val(p4, xhi) < y
        while np.any(need):
            xhi[need] += step[need]
            step[need] *= 2.0
            need = _power_val(p4, xhi) < y
    for _ in range(200):
        mid = 0.5 * (xlo + xhi)
        vm = _power_val(p4, mid)
        take_hi = vm < y
        xlo = np.where(take_hi, mid, xlo)
        xhi = np.where(take_hi, xhi, mid)
        if np.max(xhi - xlo) < tol * (1.0 + np.max(np.abs(xlo))):
            break
    # Newton polish drives the value residual to machine precision
    s, p, a, _ = p4
    x = 0.5 * (xlo + xhi)
    for _ in range(3):
        v = _power_val(p4, x) - y
        d = s * p * np.abs(x) ** (p - 1.0) + a
        x = np.clip(np.where(d > 0, x - v / np.where(d > 0, d, 1.0), x), xlo, xhi)
    return x


def s_iter(edges, kinds, par, x, b, n):
    """n-fold iteration of x -> sigma•(x + b) on points of shape (N, m)."""
    out = np.array(x, dtype=np.float64, copy=True)
    if out.ndim == 1:
        out = out[:, None]
    for _ in range(int(n)):
        out = act_eval(edges, kinds, par, out + b[None, :])
    return out


def s_inv_iter(edges, kinds, par, vedges, y, b, n, tol=1e-14):
    """n-fold iteration of y -> sigma^{-1}•(y) - b (inverse of s_iter's step)."""
    out = np.array(y, dtype=np.float64, copy=True)
    if out.ndim == 1:
        out = out[:, None]
    for _ in range(int(n)):
        out = act_invert(edges, kinds, par, vedges, out, tol) - b[None, :]
    return out


def tree_eval(amp, lo, hi, x):
    """Sum of amp_j over terms with lo_j < x < hi_j (open intervals)."""
    x = np.asarray(x, dtype=np.float64)
    flat = x.ravel()
    if len(amp) == 0:
        return np.zeros(x.shape, dtype=np.float64)
    out = np.zeros_like(flat)
    # chunk the terms to bound the (points x terms) mask size
    chunk = max(1, int(4_000_000 // max(1, flat.size)))
    for start in range(0, len(amp), chunk):
        a = amp[start : start + chunk]
        l = lo[start : start + chunk]
        h = hi[start : start + chunk]
        inside = (flat[:, None] > l[None, :]) & (flat[:, None] < h[None, :])
        out += inside @ a
    return out.reshape(x.shape)
