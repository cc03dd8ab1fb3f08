"""Cadlag and bounded-variation paths on a finite grid of time stamps.

Conventions for a BV path ``k``:

* ``|k|_t`` is the variation on ``(0, t]`` realised by the stored stamps,
* ``||k||_t = |k_0| + |k|_t`` (the atom at zero, with ``k_{0-} = 0``),
* integrals on ``[0, t]`` include ``h_0 k_0``; integrals on ``(0, t]`` do not.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

STEP = "step"
LINEAR = "linear"


class PathError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CadlagPath:
    """Right-continuous path sampled at strictly increasing stamps.

    ``jump_mask[i]`` flags a genuine jump at ``times[i]`` whose size
    ``y_t - y_{t-}`` is ``jump_sizes[i]``. Between stamps the path is either
    constant (``STEP``, the right value holds until the next stamp) or linear
    towards the left limit at the next stamp (``LINEAR``).
    """

    times: np.ndarray
    values: np.ndarray
    jump_mask: np.ndarray
    jump_sizes: np.ndarray
    interpolation: str = STEP

    def __post_init__(self):
        t = np.ascontiguousarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if t.ndim != 1 or len(t) != len(v) or len(t) == 0:
            raise PathError("times and values must be non-empty with matching length")
        if np.any(np.diff(t) <= 0):
            raise PathError("time stamps must be strictly increasing")
        mask = np.zeros(len(t), bool) if self.jump_mask is None else np.asarray(self.jump_mask, bool)
        sizes = np.zeros_like(v) if self.jump_sizes is None else np.asarray(self.jump_sizes, float).reshape(v.shape)
        if self.interpolation not in (STEP, LINEAR):
            raise PathError(f"unknown interpolation rule {self.interpolation!r}")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "jump_mask", mask)
        object.__setattr__(self, "jump_sizes", np.where(mask[:, None], sizes, 0.0))

    @classmethod
    def from_values(cls, times, values, interpolation=STEP, jump_mask=None):
        """Build a path; jump sizes are read off the stored values.

        Under ``STEP`` every increment is a jump of the path, so all stamps
        with a nonzero increment are flagged unless ``jump_mask`` says
        otherwise. Under ``LINEAR`` only stamps in ``jump_mask`` jump, and
        the jump size is then the full increment from the previous stamp.
        """
        t = np.asarray(times, float)
        v = np.asarray(values, float)
        v = v[:, None] if v.ndim == 1 else v
        inc = np.vstack([v[:1], np.diff(v, axis=0)])
        if jump_mask is None:
            jump_mask = np.zeros(len(t), bool)
            if interpolation == STEP:
                jump_mask[1:] = np.any(inc[1:] != 0, axis=1)
        jump_mask = np.asarray(jump_mask, bool).copy()
        jump_mask[0] = False
        return cls(t, v, jump_mask, np.where(jump_mask[:, None], inc, 0.0), interpolation)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def left_values(self):
        """Left limits ``y_{t-}`` at each stamp (``y_{0-} := y_0``)."""
        if self.interpolation == STEP:
            return np.vstack([self.values[:1], self.values[:-1]])
        return self.values - self.jump_sizes

    def __call__(self, t):
        """Value at time(s) ``t`` under the interpolation rule."""
        t = np.atleast_1d(np.asarray(t, float))
        if np.any(t < self.times[0]) or np.any(t > self.times[-1]):
            raise PathError("evaluation time outside the path horizon")
        idx = np.searchsorted(self.times, t, side="right") - 1
        out = self.values[idx].copy()
        if self.interpolation == LINEAR:
            nxt = np.minimum(idx + 1, len(self.times) - 1)
            span = self.times[nxt] - self.times[idx]
            w = np.where(span > 0, (t - self.times[idx]) / np.where(span > 0, span, 1.0), 0.0)
            target = self.values[nxt] - self.jump_sizes[nxt]
            out += w[:, None] * (target - self.values[idx])
        return out

    def jumps(self):
        """List of ``(time, delta)`` for flagged jumps."""
        idx = np.flatnonzero(self.jump_mask)
        return [(float(self.times[i]), self.jump_sizes[i].copy()) for i in idx]

    def to_csv(self, fh_or_path):
        header = ["time"] + [f"x{i}" for i in range(self.dim)] + ["jump"]
        rows = ([float(t)] + [float(c) for c in v] + [int(j)]
                for t, v, j in zip(self.times, self.values, self.jump_mask))
        _write_csv(fh_or_path, header, rows)

    @classmethod
    def from_csv(cls, path, interpolation=STEP):
        data = np.genfromtxt(path, delimiter=",", names=True)
        names = data.dtype.names
        comps = [n for n in names if n.startswith("x")]
        times = np.atleast_1d(data["time"])
        vals = np.column_stack([np.atleast_1d(data[c]) for c in comps])
        mask = np.atleast_1d(data["jump"]).astype(bool)
        return cls.from_values(times, vals, interpolation, jump_mask=mask)


def _write_csv(fh_or_path, header, rows):
    if hasattr(fh_or_path, "write"):
        w = csv.writer(fh_or_path, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return
    with open(fh_or_path, "w", newline="") as fh:
        _write_csv(fh, header, rows)


@dataclass(frozen=True, eq=False)
class BVPath:
    """A cadlag path of bounded variation with its running variation."""

    base: CadlagPath

    def __post_init__(self):
        b = self.base
        seg = np.linalg.norm(np.diff(b.values, axis=0), axis=1)
        if b.interpolation == LINEAR:
            # continuous part and jump part measured separately on each segment
            inner = np.linalg.norm(np.diff(b.values, axis=0) - b.jump_sizes[1:], axis=1)
            seg = inner + np.linalg.norm(b.jump_sizes[1:], axis=1)
        object.__setattr__(self, "cumulative_variation", np.concatenate([[0.0], np.cumsum(seg)]))

    @classmethod
    def from_values(cls, times, values, interpolation=STEP, jump_mask=None):
        return cls(CadlagPath.from_values(times, values, interpolation, jump_mask))

    @property
    def times(self):
        return self.base.times

    @property
    def values(self):
        return self.base.values

    @property
    def k0(self):
        return self.base.values[0]

    @property
    def jump_list(self):
        return self.base.jumps()

    def norm_variation(self):
        """``||k||_t = |k_0| + |k|_t`` at every stamp."""
        return np.linalg.norm(self.k0) + self.cumulative_variation

    def variation(self, t=None, closed=False):
        """Variation on ``(0, t]``, or on ``[0, t]`` when ``closed`` (adds ``|k_0|``)."""
        return variation(self, self.base.horizon if t is None else t, closed)


def variation(path: BVPath, t: float, closed: bool = False) -> float:
    """Total variation of ``path`` realised on its stamps, on ``(0,t]`` or ``[0,t]``."""
    times = path.times
    if t < times[0] or t > times[-1] * (1 + 1e-15) + 1e-300:
        raise PathError(f"t={t} outside the path horizon [{times[0]}, {times[-1]}]")
    i = int(np.searchsorted(times, t, side="right") - 1)
    var = float(path.cumulative_variation[i])
    base = path.base
    if base.interpolation == LINEAR and i + 1 < len(times) and t > times[i]:
        frac = (t - times[i]) / (times[i + 1] - times[i])
        target = base.values[i + 1] - base.jump_sizes[i + 1]
        var += frac * float(np.linalg.norm(target - base.values[i]))
    if closed:
        var += float(np.linalg.norm(path.k0))
    return var


def discounted_stieltjes_integral(h, k: BVPath, lam: float, T: float | None = None,
                                  closed_at_zero: bool = True, against: str = "k"):
    """Sum approximating ``int e^{-lam s} h_s dk_s`` on the stored grid.

    ``h`` is an array of values at ``k``'s stamps (or a constant). Jumps of
    ``k`` are weighted by ``e^{-lam t} h_t`` at the jump time; linear
    segments use the left value of ``h`` with the exponential weight
    integrated exactly. ``against="variation"`` integrates against ``|k|``
    instead of ``k`` (scalar result). The atom ``h_0 k_0`` at zero is
    included iff ``closed_at_zero``.
    """
    times = k.times
    h = np.asarray(h, float)
    if h.ndim == 0:
        h = np.broadcast_to(h, times.shape)
    if h.shape[0] != len(times):
        raise PathError("integrand and integrator are on different grids")
    T = times[-1] if T is None else T
    if T > times[-1] * (1 + 1e-15):
        raise PathError("horizon beyond the integrator's grid")
    keep = times <= T
    times, h = times[keep], h[keep]
    base = k.base
    vals = base.values[keep]
    jumps = base.jump_sizes[keep]
    inc = np.diff(vals, axis=0)
    if against == "variation":
        def size(v):
            return np.linalg.norm(v, axis=-1)
    elif against == "k":
        def size(v):
            return v
    else:
        raise PathError(f"against must be 'k' or 'variation', got {against!r}")
    disc = np.exp(-lam * times)
    if base.interpolation == STEP:
        incs = size(inc)
        total = np.tensordot(h[1:] * disc[1:], incs, axes=(0, 0))
    else:
        cont = size(inc - jumps[1:])
        dt = np.diff(times)
        if lam > 0:
            w = (disc[:-1] - disc[1:]) / lam / dt
        else:
            w = np.ones_like(dt)
        total = np.tensordot(h[:-1] * w, cont, axes=(0, 0))
        total = total + np.tensordot(h[1:] * disc[1:], size(jumps[1:]), axes=(0, 0))
    if closed_at_zero:
        total = total + h[0] * size(vals[0])
    total = np.asarray(total)
    return float(total.reshape(-1)[0]) if total.size == 1 else total
