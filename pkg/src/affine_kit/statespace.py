"""State spaces for affine models.

Four kinds are supported:

  Canonical(m, n)   R_+^m x R^(n-m)
  SymPSD(d)         symmetric PSD d x d matrices, flattened to n = d(d+1)/2
  Interval(r1, r2)  [r1, r2] in one dimension
  FiniteChain(k)    the integer levels {0, 1, ..., k}

Each kind answers membership, projects arbitrary points back into the set,
decides membership of complex arguments u in the set U where x -> e^<u,x>
stays bounded, and emits n+1 affinely independent points (used as the
validation grid for affine quantities such as jump weights and kill rates).
"""

from dataclasses import dataclass

import numpy as np

from .symmat import flat_dim, flat_to_sym, sym_to_flat, psd_project

__all__ = ["StateSpace", "Canonical", "SymPSD", "Interval", "FiniteChain",
           "space_from_dict"]


class StateSpace:
    """Common interface; concrete kinds below."""

    kind = "abstract"
    dim = 0

    def _check_dim(self, v):
        v = np.atleast_1d(np.asarray(v))
        if v.shape != (self.dim,):
            raise ValueError(
                f"dimension mismatch: expected length {self.dim}, got shape {v.shape}")
        return v

    def contains(self, x, tol=1e-12):
        raise NotImplementedError

    def project(self, x):
        raise NotImplementedError

    def in_U(self, u, margin=1e-9):
        """True iff sup over D of Re<u, x> is finite (within margin)."""
        raise NotImplementedError

    def sup_re_inner(self, re_u):
        """sup over D of <re_u, x>; +inf when unbounded."""
        raise NotImplementedError

    def affine_basis_points(self):
        """At least n+1 affinely independent points of D (the validation grid)."""
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError

    def __repr__(self):
        items = ", ".join(f"{k}={v}" for k, v in self.to_dict().items() if k != "kind")
        return f"{type(self).__name__}({items})"

    def __eq__(self, other):
        return isinstance(other, StateSpace) and self.to_dict() == other.to_dict()


@dataclass(frozen=True, eq=False)
class Canonical(StateSpace):
    m: int
    n: int

    kind = "Canonical"

    def __post_init__(self):
        if not (0 <= self.m <= self.n) or self.n < 1:
            raise ValueError(f"Canonical requires 0 <= m <= n, n >= 1; got m={self.m}, n={self.n}")

    @property
    def dim(self):
        return self.n

    def contains(self, x, tol=1e-12):
        x = self._check_dim(x)
        return bool(np.all(x[: self.m] >= -tol))

    def project(self, x):
        x = self._check_dim(x).astype(float)
        x[: self.m] = np.maximum(x[: self.m], 0.0)
        return x

    def in_U(self, u, margin=1e-9):
        u = self._check_dim(np.asarray(u, dtype=complex))
        re = u.real
        ok_cone = np.all(re[: self.m] <= margin)
        ok_free = np.all(np.abs(re[self.m:]) <= margin)
        return bool(ok_cone and ok_free)

    def sup_re_inner(self, re_u):
        re_u = self._check_dim(np.asarray(re_u, dtype=float))
        if np.any(re_u[: self.m] > 1e-12) or np.any(np.abs(re_u[self.m:]) > 1e-12):
            return np.inf
        return 0.0

    def affine_basis_points(self):
        pts = [np.zeros(self.n)]
        for i in range(self.n):
            e = np.zeros(self.n)
            e[i] = 1.0
            pts.append(e)
        return pts

    def to_dict(self):
        return {"kind": "Canonical", "m": self.m, "n": self.n}


@dataclass(frozen=True, eq=False)
class SymPSD(StateSpace):
    d: int

    kind = "SymPSD"

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"SymPSD requires d >= 1; got d={self.d}")

    @property
    def dim(self):
        return flat_dim(self.d)

    def mat(self, v):
        return flat_to_sym(self._check_dim(np.asarray(v)), self.d)

    def flat(self, x):
        return sym_to_flat(np.asarray(x))

    def contains(self, x, tol=1e-12):
        w = np.linalg.eigvalsh(self.mat(np.asarray(x, dtype=float)))
        return bool(w[0] >= -tol)

    def project(self, x):
        return self.flat(psd_project(self.mat(np.asarray(x, dtype=float))))

    def in_U(self, u, margin=1e-9):
        u = self._check_dim(np.asarray(u, dtype=complex))
        re = flat_to_sym(u.real, self.d)
        return bool(np.linalg.eigvalsh(re)[-1] <= margin)

    def sup_re_inner(self, re_u):
        re = flat_to_sym(self._check_dim(np.asarray(re_u, dtype=float)), self.d)
        if np.linalg.eigvalsh(re)[-1] > 1e-12:
            return np.inf
        return 0.0

    def affine_basis_points(self):
        # 0, e_i e_i^T, and (e_i+e_j)(e_i+e_j)^T: n+1 affinely independent PSD points
        pts = [np.zeros(self.dim)]
        for i in range(self.d):
            for j in range(i, self.d):
                v = np.zeros(self.d)
                v[i] += 1.0
                v[j] += 1.0
                pts.append(self.flat(np.outer(v, v)))
        return pts

    def to_dict(self):
        return {"kind": "SymPSD", "d": self.d}


@dataclass(frozen=True, eq=False)
class Interval(StateSpace):
    r1: float
    r2: float

    kind = "Interval"

    def __post_init__(self):
        if not self.r1 < self.r2:
            raise ValueError(f"Interval requires r1 < r2; got [{self.r1}, {self.r2}]")

    @property
    def dim(self):
        return 1

    def contains(self, x, tol=1e-12):
        x = self._check_dim(x)
        return bool(self.r1 - tol <= x[0] <= self.r2 + tol)

    def project(self, x):
        x = self._check_dim(x).astype(float)
        return np.clip(x, self.r1, self.r2)

    def in_U(self, u, margin=1e-9):
        self._check_dim(np.asarray(u, dtype=complex))
        return True

    def sup_re_inner(self, re_u):
        re_u = self._check_dim(np.asarray(re_u, dtype=float))
        return float(max(re_u[0] * self.r1, re_u[0] * self.r2))

    def affine_basis_points(self):
        return [np.array([self.r1]), np.array([self.r2])]

    def to_dict(self):
        return {"kind": "Interval", "r1": float(self.r1), "r2": float(self.r2)}


@dataclass(frozen=True, eq=False)
class FiniteChain(StateSpace):
    k: int

    kind = "FiniteChain"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"FiniteChain requires k >= 1; got k={self.k}")

    @property
    def dim(self):
        return 1

    def contains(self, x, tol=1e-12):
        x = self._check_dim(x)
        r = np.round(x[0])
        return bool(abs(x[0] - r) <= tol and -tol <= r <= self.k + tol)

    def project(self, x):
        x = self._check_dim(x).astype(float)
        return np.clip(np.round(x), 0.0, float(self.k))

    def in_U(self, u, margin=1e-9):
        self._check_dim(np.asarray(u, dtype=complex))
        return True

    def sup_re_inner(self, re_u):
        re_u = self._check_dim(np.asarray(re_u, dtype=float))
        return float(max(0.0, re_u[0] * self.k))

    def affine_basis_points(self):
        # all states: affine quantities get checked exactly on a finite space
        return [np.array([float(j)]) for j in range(self.k + 1)]

    def to_dict(self):
        return {"kind": "FiniteChain", "k": self.k}


_KINDS = {"Canonical": Canonical, "SymPSD": SymPSD, "Interval": Interval,
          "FiniteChain": FiniteChain}


def space_from_dict(doc):
    doc = dict(doc)
    kind = doc.pop("kind", None)
    if kind not in _KINDS:
        raise ValueError(f"unknown state-space kind {kind!r}; expected one of {sorted(_KINDS)}")
    return _KINDS[kind](**doc)
