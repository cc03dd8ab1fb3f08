"""Registry of closed-form scalar fields used as data ``f`` and ``g``.

Each field is a vectorized callable on ``(N, d)`` arrays and also encodes
to ``(kind, params)`` so the jitted kernels can evaluate it pointwise.

Available kinds (``name`` in configs)::

    constant   c
    linear     c0 + a . x
    polynomial sum_k coeffs[k] (w . x)^k
    radial     sum_k coeffs[k] |x - center|^k
    cosine     amp * cos(w . x + phase)
    tabulated  piecewise-linear table along w . x, constant beyond its ends
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._accel import njit

CONSTANT, LINEAR, POLYNOMIAL, RADIAL, COSINE, TABULATED = range(6)
_KINDS = {"constant": CONSTANT, "linear": LINEAR, "polynomial": POLYNOMIAL,
          "radial": RADIAL, "cosine": COSINE, "tabulated": TABULATED}


class FieldError(ValueError):
    pass


def _vec(v, dim, name):
    arr = np.atleast_1d(np.asarray(v, float))
    if arr.size == 1 and dim > 1:
        raise FieldError(f"{name} needs {dim} components")
    if arr.shape != (dim,):
        raise FieldError(f"{name} must have {dim} components, got {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    name: str
    dim: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in _KINDS:
            raise FieldError(f"unknown field kind {self.name!r}; choose from {sorted(_KINDS)}")
        object.__setattr__(self, "_encoded", _encode(self.name, self.dim, dict(self.params)))

    # construction helpers -----------------------------------------------------
    @classmethod
    def constant(cls, c, dim=1):
        return cls("constant", dim, {"c": float(c)})

    @classmethod
    def linear(cls, a, c0=0.0):
        a = np.atleast_1d(np.asarray(a, float))
        return cls("linear", len(a), {"a": a.tolist(), "c0": float(c0)})

    @classmethod
    def polynomial(cls, coeffs, w=None, dim=1):
        w = [1.0] + [0.0] * (dim - 1) if w is None else list(np.atleast_1d(w).astype(float))
        return cls("polynomial", len(w), {"coeffs": list(map(float, coeffs)), "w": w})

    @classmethod
    def radial(cls, coeffs, center):
        c = list(np.atleast_1d(center).astype(float))
        return cls("radial", len(c), {"coeffs": list(map(float, coeffs)), "center": c})

    @classmethod
    def cosine(cls, w, amp=1.0, phase=0.0):
        w = list(np.atleast_1d(w).astype(float))
        return cls("cosine", len(w), {"w": w, "amp": float(amp), "phase": float(phase)})

    @classmethod
    def tabulated(cls, xs, ys, w=None, dim=1):
        w = [1.0] + [0.0] * (dim - 1) if w is None else list(np.atleast_1d(w).astype(float))
        return cls("tabulated", len(w), {"xs": list(map(float, xs)), "ys": list(map(float, ys)), "w": w})

    @classmethod
    def from_dict(cls, spec: dict, dim: int):
        spec = dict(spec)
        name = spec.pop("name", None)
        if name is None:
            raise FieldError("field description needs a 'name'")
        return cls(name, dim, spec)

    def to_dict(self):
        return {"name": self.name, **self.params}

    # evaluation -----------------------------------------------------------------
    @property
    def kind(self) -> int:
        return _KINDS[self.name]

    def encode(self):
        return self._encoded

    def __call__(self, x):
        x = np.asarray(x, float)
        if x.ndim >= 2 and x.shape[-1] != self.dim:
            raise FieldError(f"points of dimension {x.shape[-1]} for a {self.dim}-d field")
        if x.ndim == 1 and self.dim > 1 and len(x) != self.dim:
            raise FieldError(f"point of dimension {len(x)} for a {self.dim}-d field")
        single = x.ndim == 0 or (x.ndim == 1 and x.size == self.dim)
        pts = x.reshape(-1, self.dim)
        out = eval_field_vec(self.kind, self._encoded[1], pts)
        return float(out[0]) if single else out

    @property
    def is_constant(self) -> bool:
        if self.name == "constant":
            return True
        if self.name == "polynomial" or self.name == "radial":
            return all(c == 0 for c in self.params["coeffs"][1:])
        return False

    @property
    def growth_exponent(self) -> float:
        """Smallest q with |field(x)| <= K (1 + |x|^q) globally."""
        if self.name in ("constant", "cosine", "tabulated"):
            return 0.0
        if self.name == "linear":
            return 1.0 if any(self.params["a"]) else 0.0
        coeffs = self.params["coeffs"]
        nz = [k for k, c in enumerate(coeffs) if c != 0]
        return float(max(nz)) if nz else 0.0

    @property
    def is_bounded(self) -> bool:
        return self.growth_exponent == 0.0

    def shifted(self, c: float) -> "ScalarField":
        """The field plus the constant ``c``."""
        p = {k: (list(v) if isinstance(v, list) else v) for k, v in self.params.items()}
        if self.name == "constant":
            p["c"] = p["c"] + c
        elif self.name == "linear":
            p["c0"] = p.get("c0", 0.0) + c
        elif self.name in ("polynomial", "radial"):
            coeffs = p.get("coeffs") or [0.0]
            p["coeffs"] = [coeffs[0] + c, *coeffs[1:]]
        elif self.name == "tabulated":
            p["ys"] = [y + c for y in p["ys"]]
        else:
            raise FieldError(f"a {self.name} field cannot be shifted by a constant")
        return ScalarField(self.name, self.dim, p)

    def sup_on(self, pts) -> float:
        return float(np.max(np.abs(self(np.asarray(pts).reshape(-1, self.dim)))))


def _encode(name, dim, p):
    kind = _KINDS[name]
    try:
        if kind == CONSTANT:
            arr = [p.pop("c")]
        elif kind == LINEAR:
            arr = [p.pop("c0", 0.0), *_vec(p.pop("a"), dim, "a")]
        elif kind == POLYNOMIAL:
            coeffs = list(map(float, p.pop("coeffs")))
            w = _vec(p.pop("w", [1.0] + [0.0] * (dim - 1)), dim, "w")
            arr = [len(coeffs), *w, *coeffs]
        elif kind == RADIAL:
            coeffs = list(map(float, p.pop("coeffs")))
            arr = [len(coeffs), *_vec(p.pop("center", [0.0] * dim), dim, "center"), *coeffs]
        elif kind == COSINE:
            arr = [p.pop("amp", 1.0), p.pop("phase", 0.0), *_vec(p.pop("w"), dim, "w")]
        else:
            xs = np.asarray(p.pop("xs"), float)
            ys = np.asarray(p.pop("ys"), float)
            if xs.shape != ys.shape or xs.ndim != 1 or len(xs) < 2 or np.any(np.diff(xs) <= 0):
                raise FieldError("tabulated field needs increasing xs and matching ys (>= 2 points)")
            w = _vec(p.pop("w", [1.0] + [0.0] * (dim - 1)), dim, "w")
            arr = [len(xs), *w, *xs, *ys]
    except KeyError as exc:
        raise FieldError(f"field {name!r} is missing parameter {exc}") from None
    if p:
        raise FieldError(f"unknown parameters for field {name!r}: {sorted(p)}")
    return kind, np.asarray(arr, dtype=float)


def eval_field_vec(kind, params, pts):
    """Vectorized twin of :func:`eval_field`."""
    d = pts.shape[1]
    if kind == CONSTANT:
        return np.full(len(pts), params[0])
    if kind == LINEAR:
        return params[0] + pts @ params[1:1 + d]
    if kind == POLYNOMIAL or kind == RADIAL:
        n = int(params[0])
        coeffs = params[1 + d:1 + d + n]
        if kind == POLYNOMIAL:
            s = pts @ params[1:1 + d]
        else:
            s = np.linalg.norm(pts - params[1:1 + d], axis=1)
        acc = np.zeros(len(pts))
        for c in coeffs[::-1]:
            acc = acc * s + c
        return acc
    if kind == COSINE:
        return params[0] * np.cos(pts @ params[2:2 + d] + params[1])
    m = int(params[0])
    s = pts @ params[1:1 + d]
    xs = params[1 + d:1 + d + m]
    ys = params[1 + d + m:1 + d + 2 * m]
    return np.interp(s, xs, ys)


@njit(cache=True)
def eval_field(kind, params, x):
    """Evaluate an encoded field at a single point ``x`` (length d)."""
    d = x.shape[0]
    if kind == CONSTANT:
        return params[0]
    if kind == LINEAR:
        s = params[0]
        for i in range(d):
            s += params[1 + i] * x[i]
        return s
    if kind == POLYNOMIAL or kind == RADIAL:
        n = int(params[0])
        s = 0.0
        if kind == POLYNOMIAL:
            for i in range(d):
                s += params[1 + i] * x[i]
        else:
            for i in range(d):
                s += (x[i] - params[1 + i]) ** 2
            s = math.sqrt(s)
        acc = 0.0
        for k in range(n - 1, -1, -1):
            acc = acc * s + params[1 + d + k]
        return acc
    if kind == COSINE:
        s = params[1]
        for i in range(d):
            s += params[2 + i] * x[i]
        return params[0] * math.cos(s)
    m = int(params[0])
    s = 0.0
    for i in range(d):
        s += params[1 + i] * x[i]
    xs0 = 1 + d
    ys0 = 1 + d + m
    if s <= params[xs0]:
        return params[ys0]
    if s >= params[xs0 + m - 1]:
        return params[ys0 + m - 1]
    lo = 0
    hi = m - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if params[xs0 + mid] <= s:
            lo = mid
        else:
            hi = mid
    x0 = params[xs0 + lo]
    x1 = params[xs0 + hi]
    w = (s - x0) / (x1 - x0)
    return params[ys0 + lo] * (1.0 - w) + params[ys0 + hi] * w
