"""Affine model: parameter set, the functions F and R, pointwise characteristics.

An affine model on a state space D (dimension n) is the data

    drift        b(x) = b + B x
    diffusion    c(x) = a + sum_i x_i A_i          (A_i = A(e_i), symmetric)
    jumps        K(x, .) = m + sum_i x_i M(e_i, .) (finite atom lists)
    killing      kill_rate(x) = c_kill + <gamma_kill, x>

F and R are the Levy-Khintchine style exponents driving the generalized
Riccati equations:

    F(u)   = <u,b>      + 1/2 <u, a u>   - c_kill  + sum_j w_j (e^<u,xi_j> - 1 - <u, chi(xi_j)>)
    R_i(u) = <u, B e_i> + 1/2 <u, A_i u> - gamma_i + sum over M(e_i) atoms of the same form

with truncation chi(xi) = xi * 1{|xi| <= chi_radius}. All jump integrals are
exact finite sums over the atoms.
"""

import json
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .statespace import StateSpace, space_from_dict
from .symmat import psd_project

__all__ = ["JumpMeasure", "AffineModel", "CharacteristicsAt", "ValidationReport"]


@dataclass(frozen=True, eq=False)
class JumpMeasure:
    """Finite atom list (xi_j, w_j): compound-Poisson style jump measure."""

    xi: np.ndarray  # (J, n) displacements
    w: np.ndarray   # (J,) weights per unit time

    def __post_init__(self):
        xi = np.atleast_2d(np.asarray(self.xi, dtype=float))
        w = np.atleast_1d(np.asarray(self.w, dtype=float))
        if xi.size == 0:
            xi = xi.reshape(0, xi.shape[-1] if xi.ndim == 2 and xi.shape[-1] else 0)
        if xi.shape[0] != w.shape[0]:
            raise ValueError(f"atom count mismatch: {xi.shape[0]} displacements, {w.shape[0]} weights")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "w", w)

    @classmethod
    def empty(cls, n):
        return cls(xi=np.zeros((0, n)), w=np.zeros(0))

    @classmethod
    def from_atoms(cls, atoms, n):
        """atoms: iterable of (xi, w) with xi scalar or length-n vector."""
        if not atoms:
            return cls.empty(n)
        xi = np.array([np.atleast_1d(np.asarray(x, dtype=float)) for x, _ in atoms])
        w = np.array([float(wt) for _, wt in atoms])
        if xi.shape[1] != n:
            raise ValueError(f"atom displacement length {xi.shape[1]} != model dimension {n}")
        return cls(xi=xi, w=w)

    @property
    def n_atoms(self):
        return self.xi.shape[0]

    def to_dicts(self):
        return [{"xi": [float(c) for c in x], "w": float(wt)}
                for x, wt in zip(self.xi, self.w)]

    @classmethod
    def from_dicts(cls, docs, n):
        return cls.from_atoms([(d["xi"], d["w"]) for d in docs], n)


@dataclass(frozen=True)
class CharacteristicsAt:
    """Pointwise characteristics at a state x: drift b(x), diffusion c(x),
    state-dependent jump measure K(x,.) minus the killing part, kill rate."""

    drift: np.ndarray
    diffusion: np.ndarray
    jumps: JumpMeasure
    kill_rate: float


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple  # of (name, passed, detail)

    @property
    def passed(self):
        return all(ok for _, ok, _ in self.checks)

    def failures(self):
        return [(name, detail) for name, ok, detail in self.checks if not ok]

    def to_dict(self):
        return {
            "passed": self.passed,
            "checks": [{"name": n, "passed": bool(ok), "detail": d}
                       for n, ok, d in self.checks],
        }

    def __str__(self):
        lines = [f"{'PASS' if ok else 'FAIL'}  {name}: {detail}" for name, ok, detail in self.checks]
        return "\n".join(lines)


def _zeros_like_measure(meas, n):
    return meas if meas is not None else JumpMeasure.empty(n)


@dataclass(frozen=True, eq=False)
class AffineModel:
    space: StateSpace
    b: np.ndarray = None
    B: np.ndarray = None
    a: np.ndarray = None
    A: np.ndarray = None
    m_jump: JumpMeasure = None
    M_jump: tuple = None
    c_kill: float = 0.0
    gamma_kill: np.ndarray = None
    chi_radius: float = 1.0

    def __post_init__(self):
        n = self.space.dim
        set_ = object.__setattr__
        set_(self, "b", np.zeros(n) if self.b is None else np.asarray(self.b, dtype=float).reshape(n))
        set_(self, "B", np.zeros((n, n)) if self.B is None else np.asarray(self.B, dtype=float).reshape(n, n))
        a = np.zeros((n, n)) if self.a is None else np.asarray(self.a, dtype=float).reshape(n, n)
        # clip a to PSD when within tolerance of it; leave real violations for validate()
        if a.size and np.allclose(a, a.T, atol=1e-12):
            w = np.linalg.eigvalsh(a)
            if -1e-12 <= w[0] < 0.0:
                a = psd_project(a)
        set_(self, "a", a)
        set_(self, "A", np.zeros((n, n, n)) if self.A is None else np.asarray(self.A, dtype=float).reshape(n, n, n))
        set_(self, "m_jump", _zeros_like_measure(self.m_jump, n))
        M = self.M_jump
        if M is None:
            M = tuple(JumpMeasure.empty(n) for _ in range(n))
        else:
            M = tuple(M)
            if len(M) != n:
                raise ValueError(f"M_jump must list one measure per coordinate ({n}), got {len(M)}")
        set_(self, "M_jump", M)
        set_(self, "c_kill", float(self.c_kill))
        set_(self, "gamma_kill", np.zeros(n) if self.gamma_kill is None
             else np.asarray(self.gamma_kill, dtype=float).reshape(n))
        set_(self, "chi_radius", float(self.chi_radius))

    # ------------------------------------------------------------------
    @property
    def n(self):
        return self.space.dim

    def _chi(self, xi):
        # chi(xi) = xi * 1{|xi| <= chi_radius}, rows of (J, n)
        if xi.shape[0] == 0:
            return xi
        small = np.linalg.norm(xi, axis=1) <= self.chi_radius
        return xi * small[:, None]

    @cached_property
    def _m_chi(self):
        return self._chi(self.m_jump.xi)

    @cached_property
    def _M_chi(self):
        return tuple(self._chi(meas.xi) for meas in self.M_jump)

    @cached_property
    def _atom_table(self):
        """Merged atom table over m_jump and all M_jump(e_i).

        Returns (xi_all (J, n), w0 (J,), coef (J, n)); the combined weight at
        state x is w0 + coef @ x, with atoms of identical displacement merged.
        """
        n = self.n
        index = {}
        rows = []

        def key_of(row):
            return row.tobytes()

        def slot(row):
            k = key_of(row)
            if k not in index:
                index[k] = len(rows)
                rows.append(row)
            return index[k]

        w0 = []
        coef = []
        for x, wt in zip(self.m_jump.xi, self.m_jump.w):
            j = slot(x)
            while len(w0) <= j:
                w0.append(0.0)
                coef.append(np.zeros(n))
            w0[j] += wt
        for i, meas in enumerate(self.M_jump):
            for x, wt in zip(meas.xi, meas.w):
                j = slot(x)
                while len(w0) <= j:
                    w0.append(0.0)
                    coef.append(np.zeros(n))
                coef[j][i] += wt
        if not rows:
            return np.zeros((0, n)), np.zeros(0), np.zeros((0, n))
        return np.array(rows), np.array(w0), np.array(coef)

    # ------------------------------------------------------------------
    def _as_arg(self, u):
        u = np.atleast_1d(np.asarray(u, dtype=complex))
        if u.shape != (self.n,):
            raise ValueError(f"dimension mismatch: expected u of length {self.n}, got shape {u.shape}")
        return u

    def _warn_outside_U(self, u):
        if not self.space.in_U(u):
            warnings.warn("argument u lies outside U (e^<u,x> unbounded on the state space); "
                          "result may be meaningless", UserWarning, stacklevel=3)

    @staticmethod
    def _jump_sum(xi, chi, w, u):
        if xi.shape[0] == 0:
            return 0.0 + 0.0j
        z = xi @ u
        return complex(np.sum(w * (np.exp(z) - 1.0 - chi @ u)))

    def eval_F(self, u, warn=True):
        """F(u), the constant part of the exponent. Complex scalar."""
        u = self._as_arg(u)
        if warn:
            self._warn_outside_U(u)
        val = u @ self.b + 0.5 * (u @ (self.a @ u)) - self.c_kill
        val += self._jump_sum(self.m_jump.xi, self._m_chi, self.m_jump.w, u)
        return complex(val)

    def eval_R(self, u, warn=True):
        """R(u), the coefficient of x in the exponent. Complex n-vector."""
        u = self._as_arg(u)
        if warn:
            self._warn_outside_U(u)
        val = self.B.T @ u + 0.5 * np.einsum("ijk,j,k->i", self.A, u, u) - self.gamma_kill
        val = val.astype(complex)
        for i, (meas, chi) in enumerate(zip(self.M_jump, self._M_chi)):
            if meas.n_atoms:
                val[i] += self._jump_sum(meas.xi, chi, meas.w, u)
        return val

    def kill_rate(self, x):
        return float(self.c_kill + self.gamma_kill @ np.asarray(x, dtype=float))

    def characteristics_at(self, x, project_diffusion=True):
        """Pointwise triplet (drift, diffusion, jumps) plus kill rate at x in D."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.n,):
            raise ValueError(f"dimension mismatch: expected state of length {self.n}, got shape {x.shape}")
        if not self.space.contains(x, tol=1e-12):
            raise ValueError(f"state {x} lies outside the state space {self.space}")
        drift = self.b + self.B @ x
        diff = self.a + np.einsum("i,ijk->jk", x, self.A)
        if project_diffusion:
            diff = psd_project(diff)
        xi_all, w0, coef = self._atom_table
        w = w0 + coef @ x if xi_all.shape[0] else np.zeros(0)
        if w.size and w.min() < -1e-10:
            warnings.warn(f"combined jump weight clipped at 0 (min {w.min():.3e})", UserWarning)
        w = np.maximum(w, 0.0)
        keep = w > 1e-15
        jumps = JumpMeasure(xi=xi_all[keep], w=w[keep]) if xi_all.shape[0] else JumpMeasure.empty(self.n)
        rate = self.kill_rate(x)
        if rate < -1e-10:
            warnings.warn(f"kill rate clipped at 0 (was {rate:.3e})", UserWarning)
        rate = max(rate, 0.0)
        return CharacteristicsAt(drift=drift, diffusion=diff, jumps=jumps, kill_rate=rate)

    # ------------------------------------------------------------------
    def _support_ok(self, xi_row):
        """Analytic per-kind check that x + xi stays in D (where the atom can fire)."""
        sp = self.space
        if sp.kind == "Canonical":
            return bool(np.all(xi_row[: sp.m] >= -1e-12))
        if sp.kind == "SymPSD":
            w = np.linalg.eigvalsh(sp.mat(xi_row))
            return bool(w[0] >= -1e-9)
        if sp.kind == "Interval":
            return False  # no fixed displacement maps [r1,r2] into itself
        if sp.kind == "FiniteChain":
            # exact: wherever the combined weight is positive, x + xi must be a state
            if abs(xi_row[0] - round(xi_row[0])) > 1e-9:
                return False
            xi_all, w0, coef = self._atom_table
            j = None
            for idx, row in enumerate(xi_all):
                if np.array_equal(row, xi_row):
                    j = idx
                    break
            for x in range(sp.k + 1):
                wt = (w0[j] + coef[j] @ np.array([float(x)])) if j is not None else 0.0
                if wt > 1e-12 and not sp.contains(np.array([x + xi_row[0]]), tol=1e-9):
                    return False
            return True
        raise NotImplementedError(sp.kind)

    def validate(self):
        """Check every structural invariant; returns a ValidationReport."""
        checks = []
        n = self.n

        def add(name, ok, detail=""):
            checks.append((name, bool(ok), detail))

        grid = self.space.affine_basis_points()

        # dimensions are enforced at construction; record an explicit pass
        add("dimensions", True, f"n={n}, kind={self.space.kind}")

        if np.allclose(self.a, self.a.T, atol=1e-10):
            w = np.linalg.eigvalsh(self.a)
            add("a symmetric PSD", w[0] >= -1e-12, f"min eigenvalue {w[0]:.3e}")
        else:
            add("a symmetric PSD", False, "a is not symmetric")

        sym_ok = all(np.allclose(Ai, Ai.T, atol=1e-10) for Ai in self.A)
        add("A(e_i) symmetric", sym_ok, "" if sym_ok else "some A(e_i) not symmetric")

        if sym_ok:
            worst = 0.0
            for x in grid:
                c = self.a + np.einsum("i,ijk->jk", x, self.A)
                worst = min(worst, float(np.linalg.eigvalsh(0.5 * (c + c.T))[0]))
            add("diffusion PSD on validation grid", worst >= -1e-9, f"min eigenvalue {worst:.3e}")
        else:
            add("diffusion PSD on validation grid", False, "skipped: A not symmetric")

        add("c_kill nonnegative", self.c_kill >= 0.0, f"c_kill={self.c_kill}")
        kr = [self.c_kill + float(self.gamma_kill @ x) for x in grid]
        add("kill rate nonnegative on validation grid", min(kr) >= -1e-12, f"min rate {min(kr):.3e}")

        add("m_jump weights nonnegative",
            bool(self.m_jump.n_atoms == 0 or self.m_jump.w.min() >= 0.0),
            f"min weight {self.m_jump.w.min() if self.m_jump.n_atoms else 0.0}")

        all_atoms = [("m_jump", row) for row in self.m_jump.xi]
        for i, meas in enumerate(self.M_jump):
            all_atoms += [(f"M_jump[{i}]", row) for row in meas.xi]

        zero_ok = all(np.linalg.norm(row) > 1e-12 for _, row in all_atoms)
        add("no zero-displacement atoms", zero_ok, "" if zero_ok else "atom with xi = 0 found")

        bad = [src for src, row in all_atoms if not self._support_ok(row)]
        add("jump support keeps state space invariant", not bad,
            "" if not bad else f"violations in {sorted(set(bad))}")

        xi_all, w0, coef = self._atom_table
        if xi_all.shape[0]:
            wmin = min(float((w0 + coef @ x).min()) for x in grid)
            add("combined jump weights nonnegative on validation grid",
                wmin >= -1e-12, f"min combined weight {wmin:.3e}")
        else:
            add("combined jump weights nonnegative on validation grid", True, "no atoms")

        add("chi_radius positive", self.chi_radius > 0.0, f"chi_radius={self.chi_radius}")

        pts = np.array([np.concatenate(([1.0], p)) for p in grid])
        rank = np.linalg.matrix_rank(pts, tol=1e-9)
        in_D = all(self.space.contains(p, tol=1e-9) for p in grid)
        add("state space emits n+1 affinely independent points",
            rank >= n + 1 and in_D, f"rank {rank} of {len(grid)} points, all in D: {in_D}")

        return ValidationReport(checks=tuple(checks))

    # ------------------------------------------------------------------
    def to_dict(self):
        return {
            "space": self.space.to_dict(),
            "b": self.b.tolist(),
            "B": self.B.tolist(),
            "a": self.a.tolist(),
            "A": self.A.tolist(),
            "m_jump": self.m_jump.to_dicts(),
            "M_jump": [meas.to_dicts() for meas in self.M_jump],
            "c_kill": float(self.c_kill),
            "gamma_kill": self.gamma_kill.tolist(),
            "chi_radius": float(self.chi_radius),
        }

    @classmethod
    def from_dict(cls, doc):
        space = space_from_dict(doc["space"])
        n = space.dim
        M_docs = doc.get("M_jump")
        return cls(
            space=space,
            b=doc.get("b"),
            B=doc.get("B"),
            a=doc.get("a"),
            A=doc.get("A"),
            m_jump=JumpMeasure.from_dicts(doc.get("m_jump", []), n),
            M_jump=None if M_docs is None else tuple(JumpMeasure.from_dicts(d, n) for d in M_docs),
            c_kill=doc.get("c_kill", 0.0),
            gamma_kill=doc.get("gamma_kill"),
            chi_radius=doc.get("chi_radius", 1.0),
        )

    def to_json(self, path=None, indent=2):
        text = json.dumps(self.to_dict(), indent=indent, sort_keys=True)
        if path is not None:
            with open(path, "w") as f:
                f.write(text + "\n")
        return text

    @classmethod
    def from_json(cls, source):
        """Parse from a JSON string or a file path."""
        text = source
        if "\n" not in source and not source.lstrip().startswith("{"):
            with open(source) as f:
                text = f.read()
        return cls.from_dict(json.loads(text))
