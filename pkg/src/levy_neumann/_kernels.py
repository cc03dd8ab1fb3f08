"""Jitted per-path simulation kernels.

One path of the reflected (``n_pen == 0``) or penalized (``n_pen > 0``)
scheme on a uniform grid, with exact-time jumps spliced into their steps by
a Brownian bridge. Functionals are accumulated on the fly:

* ``ti``  discounted time integral of ``f`` (left point, exact weights),
* ``bnd`` discounted boundary functional (pushes or penalization flows),
* ``var`` total variation of ``K`` on ``(0, T]``, also stored at checkpoints.

With ``record`` set, the visited states are written to the ``rec_*`` and
``fl_*`` arrays so single trajectories can be rebuilt as paths.
"""

import math

import numpy as np

from ._accel import njit
from .fields import eval_field
from .geometry import _BALL_SLACK, project_scalar


@njit(cache=True)
def push_integral(xnew, pre, gkind, gpar, gconst, xq, wq, buf):
    """``(int_0^L g(xnew + r u) dr, L)`` along the segment from ``xnew`` to ``pre``."""
    d = xnew.shape[0]
    L2 = 0.0
    for a in range(d):
        L2 += (pre[a] - xnew[a]) ** 2
    L = math.sqrt(L2)
    if L == 0.0:
        return 0.0, 0.0
    if gconst:
        return gpar[0] * L, L
    panels = max(1, int(math.ceil(L)))
    hp = L / panels
    s = 0.0
    for k in range(panels):
        for q in range(xq.shape[0]):
            r = (k + xq[q]) * hp
            for a in range(d):
                buf[a] = xnew[a] + r * (pre[a] - xnew[a]) / L
            s += wq[q] * eval_field(gkind, gpar, buf)
    return s * hp, L


@njit(cache=True)
def flow_integral(x, p, n, lam, dt, gkind, gpar, gconst, xq, wq, buf):
    """Boundary integral and variation of the flow ``p + (x - p) e^{-n t}`` on ``[0, dt]``.

    The integral is undiscounted at its start: multiply by ``e^{-lam t0}``.
    """
    d = x.shape[0]
    s2 = 0.0
    for a in range(d):
        s2 += (x[a] - p[a]) ** 2
    size = math.sqrt(s2)
    if size == 0.0 or dt <= 0.0:
        return 0.0, 0.0
    e = math.exp(-n * dt)
    dvar = size * (1.0 - e)
    if gconst:
        return gpar[0] * size * (1.0 - math.exp(-(n + lam) * dt)) / (1.0 + lam / n), dvar
    # with s = r/size the integral is size * int_e^1 s^q g(p + s size u) ds;
    # v = s^{1+q} removes the weak singularity of s^q at 0
    expo = lam / n
    c = 1.0 / (1.0 + expo)
    vlo = e ** (1.0 + expo)
    panels = max(1, int(math.ceil(size - size * e)))
    hp = (1.0 - vlo) / panels
    acc = 0.0
    for k in range(panels):
        for q in range(xq.shape[0]):
            r = size * (vlo + (k + xq[q]) * hp) ** c
            for a in range(d):
                buf[a] = p[a] + r * (x[a] - p[a]) / size
            acc += wq[q] * eval_field(gkind, gpar, buf)
    return acc * hp * size * c, dvar


@njit(cache=True)
def simulate_path(x0, h, dW, inc, jstep, jt, jv, jz,
                  dkind, dcenter, daxes, S0, s1, b0, kappa, bcenter, bclip,
                  fkind, fpar, gkind, gpar, gconst, lam, n_pen, ck, xq, wq,
                  out_k, record, rec_t, rec_x, rec_y, rec_jump, rec_js, rec_xl,
                  fl_t, fl_h, fl_s, fl_p):
    """Simulate one path; returns ``(ti, bnd, var, n_rec, n_flow)``.

    Every move (a piece of a grid step, or a jump) goes through the single
    projection block below. Helper calls taking arrays are avoided in the
    hot loop: each costs a reference-count round trip per array.
    """
    d = x0.shape[0]
    m = S0.shape[1]
    steps = dW.shape[0]
    njumps = jt.shape[0]
    x = np.empty(d)
    y = np.empty(d)
    pre = np.empty(d)
    p = np.empty(d)
    mv = np.empty(d)
    buf = np.empty(d)
    R = np.empty(m)
    dws = np.empty(m)
    penal = n_pen > 0.0
    fconst = fkind == 0
    ti = 0.0
    ti_c = 0.0  # compensation for the running sum
    bnd = 0.0
    var = 0.0
    n_rec = 0
    n_flow = 0
    for a in range(d):
        y[a] = x0[a]
    if penal:
        for a in range(d):
            x[a] = x0[a]
    else:
        project_scalar(dkind, dcenter, daxes, x0, x)
        val, L = push_integral(x, x0, gkind, gpar, gconst, xq, wq, buf)
        bnd += val
    if record:
        rec_t[0] = 0.0
        for a in range(d):
            rec_x[0, a] = x[a]
            rec_y[0, a] = y[a]
            rec_js[0, a] = 0.0
            rec_xl[0, a] = x[a]
        rec_jump[0] = False
        n_rec = 1
    j = 0
    ckp = 0
    for i in range(steps):
        s = i * h
        rem = h
        for c in range(m):
            R[c] = dW[i, c]
        jumping = False
        last = False
        while True:
            dl = 0.0
            if jumping:
                for a in range(d):
                    mv[a] = jv[j, a]
                    y[a] += mv[a]
                if penal:
                    for a in range(d):
                        x[a] += mv[a]
            else:
                if j < njumps and jstep[j] == i:
                    dl = jt[j] - s
                    if dl < 0.0:
                        dl = 0.0
                    if dl > rem:
                        dl = rem
                    if rem > 0.0:
                        frac = dl / rem
                        sd = math.sqrt(dl * (rem - dl) / rem)
                        for c in range(m):
                            dws[c] = frac * R[c] + sd * jz[j, c]
                    else:
                        for c in range(m):
                            dws[c] = 0.0
                else:
                    last = True
                    dl = rem
                    for c in range(m):
                        dws[c] = R[c]
                for c in range(m):
                    R[c] -= dws[c]
                rem -= dl
                if dl == 0.0 and not last:
                    jumping = True
                    continue
                if fconst:
                    fv = fpar[0]
                elif fkind <= 3:
                    # linear / polynomial / radial inline
                    sw = 0.0
                    if fkind == 3:
                        for a in range(d):
                            sw += (x[a] - fpar[1 + a]) ** 2
                        sw = math.sqrt(sw)
                    elif fkind == 1:
                        sw = fpar[0]
                        for a in range(d):
                            sw += fpar[1 + a] * x[a]
                    else:
                        for a in range(d):
                            sw += fpar[1 + a] * x[a]
                    if fkind == 1:
                        fv = sw
                    else:
                        fv = 0.0
                        for k in range(int(fpar[0]) - 1, -1, -1):
                            fv = fv * sw + fpar[1 + d + k]
                else:
                    fv = eval_field(fkind, fpar, x)
                term = fv * math.exp(-lam * s) * -math.expm1(-lam * dl) / lam - ti_c
                tnew = ti + term
                ti_c = (tnew - ti) - term
                ti = tnew
                # diffusion, drift and grid increment of this piece
                for a in range(d):
                    acc = inc[i, a] if last else 0.0
                    for c in range(m):
                        sg = S0[a, c]
                        if a == c and s1 != 0.0:
                            sg += s1 * math.tanh(x[a])
                        acc += sg * dws[c]
                    v = x[a] - bcenter[a]
                    if v > bclip:
                        v = bclip
                    elif v < -bclip:
                        v = -bclip
                    acc += (b0[a] - kappa * v) * dl
                    mv[a] = acc
                    y[a] += acc
            if not (penal and jumping):
                # the single projection site: pre -> p
                for a in range(d):
                    pre[a] = x[a] if penal else x[a] + mv[a]
                if dkind == 0:
                    for a in range(d):
                        v = pre[a] - dcenter[a]
                        if v > daxes[a]:
                            p[a] = dcenter[a] + daxes[a]
                        elif v < -daxes[a]:
                            p[a] = dcenter[a] - daxes[a]
                        else:
                            p[a] = pre[a]
                elif dkind == 1:
                    r2 = 0.0
                    for a in range(d):
                        r2 += (pre[a] - dcenter[a]) ** 2
                    nrm = math.sqrt(r2)
                    if nrm <= daxes[0] * _BALL_SLACK:
                        for a in range(d):
                            p[a] = pre[a]
                    else:
                        for a in range(d):
                            p[a] = dcenter[a] + (pre[a] - dcenter[a]) * (daxes[0] / nrm)
                else:
                    project_scalar(dkind, dcenter, daxes, pre, p)
                moved = False
                for a in range(d):
                    if p[a] != pre[a]:
                        moved = True
                if penal:
                    if moved:
                        val, dv = flow_integral(pre, p, n_pen, lam, dl, gkind, gpar, gconst, xq, wq, buf)
                        bnd += math.exp(-lam * s) * val
                        var += dv
                    if record:
                        fl_t[n_flow] = s
                        fl_h[n_flow] = dl
                        for a in range(d):
                            fl_s[n_flow, a] = pre[a]
                            fl_p[n_flow, a] = p[a]
                        n_flow += 1
                    e = math.exp(-n_pen * dl)
                    for a in range(d):
                        x[a] = p[a] + (pre[a] - p[a]) * e + mv[a]
                else:
                    if moved:
                        val, L = push_integral(p, pre, gkind, gpar, gconst, xq, wq, buf)
                        bnd += math.exp(-lam * (s + dl)) * val
                        var += L
                    for a in range(d):
                        x[a] = p[a]
            if not jumping:
                s += dl
            if record:
                if jumping and rec_t[n_rec - 1] >= s:
                    n_rec -= 1  # jump at an already recorded stamp: overwrite it
                    if not rec_jump[n_rec]:
                        for a in range(d):
                            rec_xl[n_rec, a] = rec_x[n_rec, a]  # keep the pre-jump state
                else:
                    for a in range(d):
                        rec_js[n_rec, a] = 0.0
                        rec_xl[n_rec, a] = rec_x[n_rec - 1, a]
                rec_t[n_rec] = (i + 1) * h if last else s
                for a in range(d):
                    rec_x[n_rec, a] = x[a]
                    rec_y[n_rec, a] = y[a]
                    if jumping:
                        rec_js[n_rec, a] += mv[a]
                rec_jump[n_rec] = jumping
                n_rec += 1
            if last:
                break
            if jumping:
                j += 1
                jumping = False
            else:
                jumping = True
        while ckp < ck.shape[0] and ck[ckp] == i + 1:
            out_k[ckp] = var
            ckp += 1
    return ti, bnd, var, n_rec, n_flow


@njit(cache=True)
def run_batch(x0, h, dW, inc, jptr, jstep, jt, jv, jz,
              dkind, dcenter, daxes, S0, s1, b0, kappa, bcenter, bclip,
              fkind, fpar, gkind, gpar, gconst, lam, n_pen, ck, xq, wq,
              out_ti, out_bnd, out_k):
    """Loop :func:`simulate_path` over a batch of paths sharing ``x0``."""
    d = x0.shape[0]
    e1 = np.zeros(0)
    e2 = np.zeros((0, d))
    eb = np.zeros(0, dtype=np.bool_)
    for q in range(dW.shape[0]):
        a, b = jptr[q], jptr[q + 1]
        ti, bnd, var, _, _ = simulate_path(
            x0, h, dW[q], inc[q], jstep[a:b], jt[a:b], jv[a:b], jz[a:b],
            dkind, dcenter, daxes, S0, s1, b0, kappa, bcenter, bclip,
            fkind, fpar, gkind, gpar, gconst, lam, n_pen, ck, xq, wq,
            out_k[q], False, e1, e2, e2, eb, e2, e2, e1, e1, e2, e2)
        out_ti[q] = ti
        out_bnd[q] = bnd
