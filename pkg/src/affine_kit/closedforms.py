"""Closed-form transforms for the explicitly solvable model families.

Families and formulas (all with Phi(0,u)=1, psi(0,u)=u):

  Wishart(d, k)        Phi = det(I - 2tu)^(-k/2),
                       psi = ((I-2tu)^{-1} u + u (I-2tu)^{-1}) / 2
  drift flow (b, B<=0) psi = e^{Bt} u,  Phi = exp(u b (e^{Bt}-1)/B)
  birth chain (k)      q(t) = e^{-t} + (1-e^{-t}) e^u,
                       psi = u - log q(t),  Phi = q(t)^k

Fractional powers and logs are continued continuously in t from their value
at t=0 (argument unwrapping along a fine grid), not taken on the principal
branch. The chain formulas are cross-checked against an independent
matrix-exponential oracle (ctmc_oracle_transform) before use as a reference.

Also provides the builders assembling these families as AffineModel instances.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BlowUpError
from .model import AffineModel, JumpMeasure
from .statespace import Canonical, FiniteChain, Interval, SymPSD
from .symmat import flat_basis, flat_to_sym, sym_to_flat

__all__ = [
    "WishartSpec", "ChainSpec",
    "wishart_phi_psi", "wishart_transform", "drift_flow_phi_psi",
    "chain_phi_psi", "ctmc_oracle_transform", "chain_generator", "expm",
    "brownian_model", "wishart_model", "interval_drift_model", "chain_model",
    "ORACLE_NAMES", "ORACLE_DEFAULT_U", "oracle_model", "oracle_eval",
]


@dataclass(frozen=True)
class WishartSpec:
    d: int
    k: int

    def __post_init__(self):
        if self.d < 1 or self.k < 1:
            raise ValueError(f"WishartSpec requires d >= 1 and k >= 1; got d={self.d}, k={self.k}")


@dataclass(frozen=True)
class ChainSpec:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"ChainSpec requires k >= 1; got k={self.k}")


# ----------------------------------------------------------------------
# branch-tracked logs

def _continuous_log(values):
    """log of values[-1] with the argument unwrapped along the sampled path."""
    values = np.asarray(values, dtype=complex)
    mags = np.abs(values)
    if mags.min() <= 1e-300:
        raise BlowUpError("zero crossing while tracking a continuous branch")
    angles = np.unwrap(np.angle(values))
    return np.log(mags[-1]) + 1j * angles[-1]


def _branch_grid(t, step=0.01):
    n = max(1, int(np.ceil(abs(t) / step)))
    return np.linspace(0.0, t, n + 1)


# ----------------------------------------------------------------------
# Wishart

def wishart_phi_psi(spec, t, u):
    """Closed-form (Phi, psi) for the Wishart family; u is a complex symmetric
    d x d matrix, psi comes back as one too."""
    d = spec.d
    u = np.asarray(u, dtype=complex).reshape(d, d)
    if not np.allclose(u, u.T, atol=1e-10 * (1.0 + np.abs(u).max())):
        raise ValueError("u must be symmetric")
    if np.linalg.eigvalsh(0.5 * (u.real + u.real.T))[-1] > 1e-9:
        warnings.warn("-Re u is not PSD: u lies outside U and the formula may blow up",
                      UserWarning, stacklevel=2)
    eye = np.eye(d)
    if t == 0.0:
        return 1.0 + 0.0j, u.copy()
    ss = _branch_grid(t)
    dets = np.linalg.det(eye - 2.0 * ss[:, None, None] * u)
    if abs(dets[-1]) <= 1e-12:
        raise BlowUpError(f"I - 2tu singular at t={t} (det={dets[-1]:.3e})")
    log_det = _continuous_log(dets)
    phi = np.exp(-0.5 * spec.k * log_det)
    inv = np.linalg.inv(eye - 2.0 * t * u)
    psi = 0.5 * (inv @ u + u @ inv)
    return complex(phi), psi


def wishart_transform(spec, t, u, x):
    """Phi * e^{tr(psi x)} for a real PSD matrix x with rank <= k."""
    x = np.asarray(x, dtype=float).reshape(spec.d, spec.d)
    ev = np.linalg.eigvalsh(0.5 * (x + x.T))
    if ev[0] < -1e-10:
        raise ValueError(f"x must be PSD (min eigenvalue {ev[0]:.3e})")
    rank = int(np.sum(ev > 1e-10))
    if rank > spec.k:
        warnings.warn(f"rank(x)={rank} exceeds k={spec.k}; formula evaluated anyway",
                      UserWarning, stacklevel=2)
    phi, psi = wishart_phi_psi(spec, t, u)
    return complex(phi * np.exp(np.trace(psi @ x)))


# ----------------------------------------------------------------------
# deterministic drift flow on an interval

def drift_flow_phi_psi(b, B, t, u):
    """Pure drift process dx = (b + Bx) dt: psi = e^{Bt} u, Phi = exp(u b (e^{Bt}-1)/B)."""
    if B > 0.0:
        raise ValueError(f"drift flow requires B <= 0; got B={B}")
    u = complex(u)
    ebt = np.exp(B * t)
    if abs(B * t) < 1e-8:
        # series for (e^{Bt}-1)/B, safe at B=0
        integral = t * (1.0 + 0.5 * B * t + (B * t) ** 2 / 6.0)
    else:
        integral = np.expm1(B * t) / B
    return complex(np.exp(u * b * integral)), complex(u * ebt)


# ----------------------------------------------------------------------
# birth chain on {0..k}: vacant sites fill independently at rate 1

def chain_phi_psi(spec, t, u):
    """(Phi, psi) for the birth chain with intensity k - x and jump size +1."""
    u = complex(u)
    if t == 0.0:
        return 1.0 + 0.0j, u
    eu = np.exp(u)
    es = np.exp(-_branch_grid(t))
    qs = es + (1.0 - es) * eu
    if abs(qs[-1]) <= 1e-12:
        raise BlowUpError(f"q(t)=0 at t={t}: transform vanishes, log branch undefined")
    log_q = _continuous_log(qs)
    return complex(np.exp(spec.k * log_q)), complex(u - log_q)


def chain_generator(k):
    """(k+1)x(k+1) generator: Q[j,j+1] = k-j, Q[j,j] = -(k-j)."""
    Q = np.zeros((k + 1, k + 1))
    for j in range(k):
        Q[j, j + 1] = k - j
        Q[j, j] = -(k - j)
    return Q


def expm(A, tol=1e-13, scaled=True):
    """Matrix exponential by truncated Taylor series, optionally with
    scaling and squaring (scale so the 1-norm is <= 0.5, square back up)."""
    A = np.asarray(A)
    norm = np.linalg.norm(A, 1)
    s = int(np.ceil(np.log2(norm / 0.5))) if (scaled and norm > 0.5) else 0
    As = A / (2.0 ** s)
    n = A.shape[0]
    E = np.eye(n, dtype=As.dtype if np.iscomplexobj(As) else float)
    term = E.copy()
    for i in range(1, 300):
        term = term @ As / i
        E = E + term
        if np.abs(term).max() < tol:
            break
    for _ in range(s):
        E = E @ E
    return E


def ctmc_oracle_transform(spec, t, u, x):
    """Independent oracle: E_x[e^{u X_t}] = sum_j (e^{tQ})[x, j] e^{uj}."""
    x = int(x)
    if not 0 <= x <= spec.k:
        raise ValueError(f"state x={x} outside {{0..{spec.k}}}")
    P = expm(chain_generator(spec.k) * float(t))
    j = np.arange(spec.k + 1)
    return complex(P[x] @ np.exp(complex(u) * j))


# ----------------------------------------------------------------------
# model builders

def brownian_model():
    """Standard 1-d Brownian motion: b=0, a=1, no jumps, no killing."""
    return AffineModel(space=Canonical(m=0, n=1), a=[[1.0]])


def wishart_model(d, k):
    """Wishart process on PSD d x d matrices in flattened coordinates.

    Drift b(x) = k I; diffusion A(x) matches the quadratic term of the
    Riccati flow, <u, A(x) u> = 4 tr(u^2 x); no constant diffusion, no jumps.
    """
    basis = flat_basis(d)
    n = len(basis)
    b = k * sym_to_flat(np.eye(d))
    A = np.zeros((n, n, n))
    for i, Ei in enumerate(basis):
        for j, Ej in enumerate(basis):
            for l, El in enumerate(basis):
                A[i, j, l] = 2.0 * (np.trace(Ej @ El @ Ei) + np.trace(El @ Ej @ Ei))
    return AffineModel(space=SymPSD(d=d), b=b, A=A)


def interval_drift_model(b=1.0, B=-1.0, r1=0.0, r2=2.0):
    """Deterministic drift flow dx = (b + Bx) dt confined to [r1, r2].

    Requires inward drift at both endpoints: b + B*r1 >= 0 >= b + B*r2.
    """
    if B > 0.0:
        raise ValueError(f"interval drift requires B <= 0; got B={B}")
    if b + B * r1 < 0.0 or b + B * r2 > 0.0:
        raise ValueError(f"drift points outward at an endpoint: b(r1)={b + B * r1}, b(r2)={b + B * r2}")
    return AffineModel(space=Interval(r1=r1, r2=r2), b=[b], B=[[B]])


def chain_model(k):
    """Birth chain on {0..k} with intensity k - x for +1 jumps.

    K(x, .) = (k - x) delta_1 split affinely as m = k delta_1 and
    M(e_1) = -delta_1; chi_radius below 1 leaves the size-1 jumps
    uncompensated, so the drift characteristic is identically 0.
    """
    return AffineModel(
        space=FiniteChain(k=k),
        m_jump=JumpMeasure.from_atoms([(1.0, float(k))], 1),
        M_jump=(JumpMeasure.from_atoms([(1.0, -1.0)], 1),),
        chi_radius=0.5,
    )


# ----------------------------------------------------------------------
# named example registry (shared by the CLI and the HTTP service)

ORACLE_NAMES = ("brownian", "wishart1d", "wishart2d", "interval", "chain_k2")

ORACLE_DEFAULT_U = {
    "brownian": "1j", "wishart1d": "-1+0j", "wishart2d": "-1+0j,0j,-1+0j",
    "interval": "1+0j", "chain_k2": "-1+0j",
}


def oracle_model(name):
    """The AffineModel behind a named example."""
    builders = {
        "brownian": brownian_model,
        "wishart1d": lambda: wishart_model(1, 1),
        "wishart2d": lambda: wishart_model(2, 1),
        "interval": interval_drift_model,
        "chain_k2": lambda: chain_model(2),
    }
    if name not in builders:
        raise ValueError(f"unknown oracle {name!r}; choose from {ORACLE_NAMES}")
    return builders[name]()


def _cplx_doc(z):
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


def oracle_eval(name, t, u, x=None):
    """Closed-form (Phi, psi[, transform value]) for a named example, as a
    JSON-ready dict. u is a complex vector in the model's flat coordinates;
    x, when given, is the state the transform is evaluated at."""
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    if name == "brownian":
        z = u[0]
        Phi, psi = np.exp(0.5 * z * z * t), u
    elif name in ("wishart1d", "wishart2d"):
        d = 1 if name == "wishart1d" else 2
        Phi, psi_mat = wishart_phi_psi(WishartSpec(d=d, k=1), t, flat_to_sym(u, d))
        psi = sym_to_flat(psi_mat)
    elif name == "interval":
        Phi, psi0 = drift_flow_phi_psi(1.0, -1.0, t, u[0])
        psi = np.array([psi0])
    elif name == "chain_k2":
        Phi, psi0 = chain_phi_psi(ChainSpec(k=2), t, u[0])
        psi = np.array([psi0])
    else:
        raise ValueError(f"unknown oracle {name!r}; choose from {ORACLE_NAMES}")
    out = {"name": name, "t": float(t), "u": [_cplx_doc(z) for z in u],
           "Phi": _cplx_doc(Phi), "psi": [_cplx_doc(z) for z in psi]}
    if x is not None:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if name in ("wishart1d", "wishart2d"):
            d = 1 if name == "wishart1d" else 2
            value = wishart_transform(WishartSpec(d=d, k=1), t, flat_to_sym(u, d),
                                      flat_to_sym(x, d))
        else:
            value = Phi * np.exp(np.dot(psi, x))
        out["x"] = [float(v) for v in x]
        out["value"] = _cplx_doc(value)
        if name == "chain_k2":
            out["ctmc_value"] = _cplx_doc(ctmc_oracle_transform(ChainSpec(k=2), t, u[0], int(x[0])))
    return out
