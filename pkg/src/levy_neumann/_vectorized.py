"""Numpy backend: the per-path kernel vectorized across a batch of paths.

Jumps falling inside a step are handled in rounds: round ``r`` advances every
path that has at least ``r + 1`` jumps in the step to its ``r``-th jump.
"""

import math

import numpy as np

from .fields import eval_field_vec
from .geometry import project_points


def _diffusion(X, S0, s1, dws):
    out = dws @ S0.T
    if s1 != 0.0:
        k = min(S0.shape)
        out[:, :k] += s1 * np.tanh(X[:, :k]) * dws[:, :k]
    return out


def _drift(X, b0, kappa, bcenter, bclip, dl):
    v = np.clip(X - bcenter, -bclip, bclip)
    return (b0 - kappa * v) * dl[:, None]


def _gl_points(lo, length, xq):
    """Per-row Gauss-Legendre abscissae on ``[lo, lo + length]``; unused panels get zero weight."""
    panels = np.maximum(1, np.ceil(length)).astype(int)
    kmax = int(panels.max()) if len(panels) else 1
    k = np.arange(kmax)
    hp = length / panels
    r = lo[:, None, None] + (k[None, :, None] + xq[None, None, :]) * hp[:, None, None]
    active = (k[None, :] < panels[:, None])[:, :, None]
    return r.reshape(len(lo), -1), np.broadcast_to(active, r.shape).reshape(len(lo), -1), hp


def push_integral_vec(xnew, pre, gkind, gpar, gconst, xq, wq):
    diff = pre - xnew
    L = np.linalg.norm(diff, axis=1)
    if gconst:
        return gpar[0] * L, L
    val = np.zeros(len(L))
    nz = L > 0
    if not np.any(nz):
        return val, L
    Ln = L[nz]
    u = diff[nz] / Ln[:, None]
    r, active, hp = _gl_points(np.zeros(len(Ln)), Ln, xq)
    pts = xnew[nz][:, None, :] + r[:, :, None] * u[:, None, :]
    gv = eval_field_vec(gkind, gpar, pts.reshape(-1, xnew.shape[1])).reshape(r.shape)
    w = np.tile(wq, r.shape[1] // len(wq))[None, :] * active
    val[nz] = np.sum(w * gv, axis=1) * hp
    return val, L


def flow_integral_vec(X, P, n, lam, dl, gkind, gpar, gconst, xq, wq):
    diff = X - P
    size = np.linalg.norm(diff, axis=1)
    e = np.exp(-n * dl)
    dvar = size * (1.0 - e)
    if gconst:
        return gpar[0] * size * (1.0 - np.exp(-(n + lam) * dl)) / (1.0 + lam / n), dvar
    val = np.zeros(len(size))
    nz = (size > 0) & (dl > 0)
    if not np.any(nz):
        return val, dvar
    sz = size[nz]
    en = e[nz]
    # same substitution as the jitted kernel: v = (r/size)^{1+q}
    expo = lam / n
    c = 1.0 / (1.0 + expo)
    vlo = en ** (1.0 + expo)
    panels = np.maximum(1, np.ceil(sz - sz * en)).astype(int)
    kmax = int(panels.max())
    k = np.arange(kmax)
    hp = (1.0 - vlo) / panels
    v = vlo[:, None, None] + (k[None, :, None] + xq[None, None, :]) * hp[:, None, None]
    active = np.broadcast_to((k[None, :] < panels[:, None])[:, :, None], v.shape).reshape(len(sz), -1)
    r = sz[:, None] * np.where(active, v.reshape(len(sz), -1), 0.0) ** c
    u = diff[nz] / sz[:, None]
    pts = P[nz][:, None, :] + r[:, :, None] * u[:, None, :]
    gv = eval_field_vec(gkind, gpar, pts.reshape(-1, X.shape[1])).reshape(r.shape)
    w = np.tile(wq, kmax)[None, :] * active
    val[nz] = np.sum(w * gv, axis=1) * hp * sz * c
    return val, dvar


def run_batch_numpy(x0, h, dW, inc, jptr, jstep, jt, jv, jz,
                    dkind, dcenter, daxes, S0, s1, b0, kappa, bcenter, bclip,
                    fkind, fpar, gkind, gpar, gconst, lam, n_pen, ck, xq, wq,
                    out_ti, out_bnd, out_k):
    """Same contract as the jitted ``run_batch``."""
    npaths, steps, m = dW.shape
    d = x0.shape[0]
    penal = n_pen > 0.0
    X = np.tile(x0, (npaths, 1))
    ti = np.zeros(npaths)
    ti_c = np.zeros(npaths)  # compensation for the running sums
    bnd = np.zeros(npaths)
    var = np.zeros(npaths)
    if not penal:
        Xp = project_points(dkind, dcenter, daxes, X)
        bnd += push_integral_vec(Xp, X, gkind, gpar, gconst, xq, wq)[0]
        X = Xp

    owner = np.repeat(np.arange(npaths), np.diff(jptr))
    # rank of each jump among the jumps of its path in the same step
    njump = len(jt)
    key = owner.astype(np.int64) * (steps + 1) + jstep
    first = np.ones(njump, bool)
    first[1:] = key[1:] != key[:-1]
    starts = np.maximum.accumulate(np.where(first, np.arange(njump), 0))
    rank = np.arange(njump) - starts
    order = np.lexsort((rank, jstep))
    st_sorted = jstep[order]
    step_lo = np.searchsorted(st_sorted, np.arange(steps), side="left")
    step_hi = np.searchsorted(st_sorted, np.arange(steps), side="right")

    def substep(idx, s, dl, dws, incv):
        Xs = X[idx]
        term = eval_field_vec(fkind, fpar, Xs) * np.exp(-lam * s) * -np.expm1(-lam * dl) / lam - ti_c[idx]
        tnew = ti[idx] + term
        ti_c[idx] = (tnew - ti[idx]) - term
        ti[idx] = tnew
        move = _diffusion(Xs, S0, s1, dws) + _drift(Xs, b0, kappa, bcenter, bclip, dl)
        if incv is not None:
            move += incv
        if penal:
            P = project_points(dkind, dcenter, daxes, Xs)
            val, dv = flow_integral_vec(Xs, P, n_pen, lam, dl, gkind, gpar, gconst, xq, wq)
            bnd[idx] += np.exp(-lam * s) * val
            var[idx] += dv
            X[idx] = P + (Xs - P) * np.exp(-n_pen * dl)[:, None] + move
        else:
            pre = Xs + move
            Xn = project_points(dkind, dcenter, daxes, pre)
            val, L = push_integral_vec(Xn, pre, gkind, gpar, gconst, xq, wq)
            bnd[idx] += np.exp(-lam * (s + dl)) * val
            var[idx] += L
            X[idx] = Xn

    all_paths = np.arange(npaths)
    ckp = 0
    for i in range(steps):
        s = np.full(npaths, i * h)
        rem = np.full(npaths, h)
        R = dW[:, i, :].copy()
        lo, hi = step_lo[i], step_hi[i]
        if hi > lo:
            sel = order[lo:hi]
            ranks = rank[sel]
            for r in range(int(ranks.max()) + 1):
                jj = sel[ranks == r]
                pp = owner[jj]
                dl = np.clip(jt[jj] - s[pp], 0.0, rem[pp])
                rp = rem[pp]
                frac = np.where(rp > 0, dl / np.where(rp > 0, rp, 1.0), 0.0)
                sd = np.sqrt(np.where(rp > 0, dl * (rp - dl) / np.where(rp > 0, rp, 1.0), 0.0))
                dws = frac[:, None] * R[pp] + sd[:, None] * jz[jj]
                R[pp] -= dws
                rem[pp] -= dl
                go = dl > 0
                if np.any(go):
                    substep(pp[go], s[pp[go]], dl[go], dws[go], None)
                    s[pp[go]] += dl[go]
                if penal:
                    X[pp] += jv[jj]
                else:
                    pre = X[pp] + jv[jj]
                    Xn = project_points(dkind, dcenter, daxes, pre)
                    val, L = push_integral_vec(Xn, pre, gkind, gpar, gconst, xq, wq)
                    bnd[pp] += np.exp(-lam * s[pp]) * val
                    var[pp] += L
                    X[pp] = Xn
        substep(all_paths, s, rem, R, inc[:, i, :])
        while ckp < len(ck) and ck[ckp] == i + 1:
            out_k[:, ckp] = var
            ckp += 1
    out_ti[:] = ti
    out_bnd[:] = bnd
