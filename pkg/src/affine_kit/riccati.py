"""Generalized Riccati integration and the affine transform.

Solves

    d/dt phi = F(psi),   phi(0) = 0        (phi = log Phi)
    d/dt psi = R(psi),   psi(0) = u

with an adaptive Dormand-Prince 5(4) pair on the complex state
y = (phi, psi_1..psi_n). Integrating log Phi instead of Phi avoids branch-cut
bookkeeping: Phi never crosses zero in log coordinates, and a genuine zero of
Phi shows up as Re phi -> -inf, which is flagged as a blow-up.

Diagnostics:
  * blow_up  - |psi| exceeded 1e8 (or Re phi < -1e8, or non-finite state);
               t_star is bracketed by bisection to within tol * horizon.
  * left_u   - Re psi left the admissible set U by more than 1e-9
               (only detectable for Canonical / SymPSD spaces).

Dense output between accepted nodes is cubic Hermite; the maximum step is
capped (horizon/32 by default) to keep interpolation error near the node
accuracy.
"""

from dataclasses import dataclass

import numpy as np
import warnings

from .errors import BlowUpError

__all__ = [
    "TransformSolution", "TransformValue", "SemiflowResidual",
    "solve_riccati", "transform", "semiflow_residual", "g_smoothed",
    "COMPLETE", "BLOW_UP", "LEFT_U",
]

COMPLETE = "complete"
BLOW_UP = "blow_up"
LEFT_U = "left_u"

PSI_NORM_LIMIT = 1e8
RE_PHI_LIMIT = -1e8
LEFT_U_MARGIN = 1e-9

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


class TransformValue(complex):
    """A complex transform value carrying a killed marker (f(Delta) = 0)."""

    def __new__(cls, value, killed=False):
        obj = super().__new__(cls, value)
        obj.killed = bool(killed)
        return obj


@dataclass(frozen=True)
class SemiflowResidual:
    phi_residual: float
    psi_residual: float


@dataclass(frozen=True)
class TransformSolution:
    """Accepted-node trajectory of (phi, psi) with dense output."""

    u0: np.ndarray        # (n,) complex initial condition
    t: np.ndarray         # (T,) node times, t[0] = 0
    phi: np.ndarray       # (T,) complex, phi[0] = 0
    psi: np.ndarray       # (T, n) complex, psi[0] = u0
    dphi: np.ndarray      # node derivatives, for Hermite interpolation
    dpsi: np.ndarray
    status: str
    t_star: float         # blow-up / exit time when status != complete, else nan
    tol: float
    horizon: float

    @property
    def n(self):
        return self.u0.shape[0]

    def phi_psi_at(self, t):
        """Dense evaluation of (phi(t), psi(t)); exact at nodes."""
        ts = self.t
        if t < 0.0 or t > ts[-1] * (1.0 + 1e-12) + 1e-300:
            raise ValueError(f"t={t} outside the solved range [0, {ts[-1]}]")
        i = int(np.searchsorted(ts, t))
        if i < len(ts) and ts[i] == t:
            return complex(self.phi[i]), self.psi[i].copy()
        if i >= len(ts):
            i = len(ts) - 1
        lo = i - 1
        h = ts[i] - ts[lo]
        th = (t - ts[lo]) / h
        h00 = (1.0 + 2.0 * th) * (1.0 - th) ** 2
        h10 = th * (1.0 - th) ** 2
        h01 = th * th * (3.0 - 2.0 * th)
        h11 = th * th * (th - 1.0)
        phi = (h00 * self.phi[lo] + h01 * self.phi[i]
               + h * (h10 * self.dphi[lo] + h11 * self.dphi[i]))
        psi = (h00 * self.psi[lo] + h01 * self.psi[i]
               + h * (h10 * self.dpsi[lo] + h11 * self.dpsi[i]))
        return complex(phi), psi

    def to_csv(self, path):
        n = self.n
        header = "t,re_phi,im_phi," + ",".join(
            f"re_psi_{j + 1},im_psi_{j + 1}" for j in range(n))
        lines = [header]
        for i in range(len(self.t)):
            row = [repr(float(self.t[i])), repr(float(self.phi[i].real)), repr(float(self.phi[i].imag))]
            for j in range(n):
                row.append(repr(float(self.psi[i, j].real)))
                row.append(repr(float(self.psi[i, j].imag)))
            lines.append(",".join(row))
        status = f"# status={self.status}"
        if self.status != COMPLETE:
            status += f" t_star={repr(float(self.t_star))}"
        lines.append(status)
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as f:
                f.write(text)
        return text


# ----------------------------------------------------------------------
# core stepper

def _exceeded(y):
    if not np.all(np.isfinite(y)):
        return True
    if np.linalg.norm(y[1:]) > PSI_NORM_LIMIT:
        return True
    return y[0].real < RE_PHI_LIMIT


def _run(rhs, y0, t0, t1, tol, hmax, f0=None, collect=None, left_u_check=None):
    """Advance y' = rhs(y) from t0 to t1.

    Returns (flag, t_end, y_end, f_end) with flag one of "done", "exceeded",
    "left_u". On "exceeded" t_end is the end time of the offending step and
    y_end the last good state (at the previously accepted node). collect, if
    given, is called with (t, y, f) at every accepted node including t0.
    """
    t = t0
    y = y0.astype(complex)
    f = rhs(y) if f0 is None else f0
    if collect is not None:
        collect(t, y, f)
    span = t1 - t0
    hmin = 1e-15 * max(1.0, abs(t1))
    h = min(hmax, 0.1 * span, 0.01 * max(np.linalg.norm(y), 1.0) / max(np.linalg.norm(f), 1e-8))
    h = max(h, hmin)
    k = [None] * 7
    for _ in range(1_000_000):
        if t >= t1 - 1e-15 * max(1.0, abs(t1)):
            return "done", t, y, f
        h = min(h, t1 - t)
        k[0] = f
        bad_stage = False
        for i in range(1, 7):
            yi = y + h * sum(_A[i][j] * k[j] for j in range(i))
            if not np.all(np.isfinite(yi)):
                bad_stage = True
                break
            k[i] = rhs(yi)
        if bad_stage:
            err = np.inf
        else:
            y_new = yi  # stage 7 uses the b-row of the tableau: yi is the 5th-order step
            err_vec = h * sum(_E[j] * k[j] for j in range(7))
            scale = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.sqrt(np.mean(np.abs(err_vec / scale) ** 2)))
        if not np.isfinite(err):
            err = np.inf
        if err <= 1.0:
            t_new = t + h
            if _exceeded(y_new):
                return "exceeded", t_new, y, f
            if left_u_check is not None and left_u_check(y_new):
                if collect is not None:
                    collect(t_new, y_new, k[6])
                return "left_u", t_new, y_new, k[6]
            t, y, f = t_new, y_new, k[6]  # FSAL
            if collect is not None:
                collect(t, y, f)
            h = min(hmax, h * min(5.0, max(0.2, 0.9 * err ** -0.2 if err > 0 else 5.0)))
        else:
            shrink = 0.9 * err ** -0.2 if np.isfinite(err) else 0.1
            h = h * min(0.9, max(0.1, shrink))
            if h < hmin:
                # step size underflow: treat as a blow-up at the current time
                return "exceeded", t + h, y, f
    raise RuntimeError("Riccati integration exceeded the step budget")


def _locate_t_star(rhs, y_lo, lo, hi, tol, hmax, horizon):
    """Bisect the blow-up time inside (lo, hi], re-integrating from the last
    good state; resolution tol * horizon."""
    width = max(tol * max(horizon, 1e-8), 1e-14)
    for _ in range(200):
        if hi - lo <= width:
            break
        mid = 0.5 * (lo + hi)
        flag, t_end, y_end, _ = _run(rhs, y_lo, lo, mid, tol, hmax)
        if flag == "done":
            lo, y_lo = mid, y_end
        else:
            hi = min(t_end, mid)
    return 0.5 * (lo + hi)


def solve_riccati(model, u, horizon, tol=1e-9, hmax=None):
    """Integrate the generalized Riccati system up to the horizon.

    Returns a TransformSolution; status is "complete", "blow_up", or
    "left_u" (see module docstring). A u outside U triggers a warning, not
    a failure.
    """
    if not (horizon > 0.0):
        raise ValueError(f"horizon must be positive; got {horizon}")
    if not (1e-13 <= tol <= 1e-3):
        raise ValueError(f"tol must lie in [1e-13, 1e-3]; got {tol}")
    u = model._as_arg(u)
    if not model.space.in_U(u):
        warnings.warn("initial u lies outside U; the Riccati flow may blow up",
                      UserWarning, stacklevel=2)
    if hmax is None:
        hmax = horizon / 32.0

    def rhs(y):
        psi = y[1:]
        out = np.empty_like(y)
        out[0] = model.eval_F(psi, warn=False)
        out[1:] = model.eval_R(psi, warn=False)
        return out

    space = model.space
    left_u_check = None
    # a trajectory started outside U cannot "leave" it; let it run to blow-up
    if space.kind in ("Canonical", "SymPSD") and space.in_U(u):
        def left_u_check(y):
            return not space.in_U(y[1:], margin=LEFT_U_MARGIN)

    y0 = np.concatenate(([0.0 + 0.0j], u))
    nodes_t, nodes_y, nodes_f = [], [], []

    def collect(t, y, f):
        nodes_t.append(t)
        nodes_y.append(y.copy())
        nodes_f.append(f.copy())

    flag, t_end, y_end, _ = _run(rhs, y0, 0.0, float(horizon), tol, hmax,
                                 collect=collect, left_u_check=left_u_check)

    if flag == "done":
        status, t_star = COMPLETE, np.nan
        nodes_t[-1] = float(horizon)  # last accepted step lands on the horizon
    elif flag == "left_u":
        status, t_star = LEFT_U, t_end
    else:
        status = BLOW_UP
        t_star = _locate_t_star(rhs, nodes_y[-1], nodes_t[-1], t_end, tol, hmax, horizon)

    ts = np.array(nodes_t)
    ys = np.array(nodes_y)
    fs = np.array(nodes_f)
    return TransformSolution(
        u0=u, t=ts, phi=ys[:, 0], psi=ys[:, 1:], dphi=fs[:, 0], dpsi=fs[:, 1:],
        status=status, t_star=float(t_star), tol=float(tol), horizon=float(horizon),
    )


# ----------------------------------------------------------------------
# derived operations

def transform(model, x, t, u, tol=1e-9):
    """E_x[e^<u, X_t>] = exp(phi(t) + <psi(t), x>).

    Returns a TransformValue; .killed is True (and the value 0) when the
    transform blew up before t, the mass having left for the cemetery.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u = model._as_arg(u)
    if not model.space.contains(x, tol=1e-9):
        raise ValueError(f"state {x} lies outside the state space {model.space}")
    if t < 0.0:
        raise ValueError(f"t must be nonnegative; got {t}")
    if t == 0.0:
        return TransformValue(np.exp(u @ x))
    sol = solve_riccati(model, u, horizon=t, tol=tol)
    if sol.status == BLOW_UP:
        return TransformValue(0.0, killed=True)
    if sol.status == LEFT_U:
        raise BlowUpError(f"psi left U at t={sol.t_star:.6g} before the requested t={t}",
                          t_star=sol.t_star)
    phi, psi = sol.phi_psi_at(t)
    return TransformValue(np.exp(phi + psi @ x))


def semiflow_residual(model, u, t, s, tol=1e-9):
    """Residuals of Phi(t+s,u) = Phi(t,u) Phi(s, psi(t,u)) and
    psi(t+s,u) = psi(s, psi(t,u)), from three solver calls."""
    u = model._as_arg(u)

    def final(v, h):
        if h == 0.0:
            return 0.0 + 0.0j, np.asarray(v, dtype=complex)
        sol = solve_riccati(model, v, horizon=h, tol=tol)
        if sol.status != COMPLETE:
            raise BlowUpError(
                f"transform blew up at t={sol.t_star:.6g} inside [0, {h}]; semiflow residual undefined",
                t_star=sol.t_star)
        return complex(sol.phi[-1]), sol.psi[-1]

    phi_ts, psi_ts = final(u, t + s)
    phi_t, psi_t = final(u, t)
    phi_s, psi_s = final(psi_t, s)
    phi_res = abs(np.exp(phi_ts) - np.exp(phi_t + phi_s))
    psi_res = float(np.linalg.norm(psi_ts - psi_s))
    return SemiflowResidual(phi_residual=float(phi_res), psi_residual=psi_res)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def g_smoothed(model, u, eta, x, tol=1e-10):
    """Time-smoothed transform g_{u,eta}(x) = (1/eta) integral_0^eta
    Phi(s,u) e^{<psi(s,u), x>} ds, by 64-node Gauss-Legendre over the dense
    solver output."""
    if not (eta > 0.0):
        raise ValueError(f"eta must be positive; got {eta}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not model.space.contains(x, tol=1e-9):
        raise ValueError(f"state {x} lies outside the state space {model.space}")
    sol = solve_riccati(model, u, horizon=eta, tol=tol, hmax=eta / 50.0)
    if sol.status != COMPLETE:
        raise BlowUpError(f"transform blew up at t={sol.t_star:.6g} inside [0, {eta}]",
                          t_star=sol.t_star)
    total = 0.0 + 0.0j
    for node, weight in zip(_GL_NODES, _GL_WEIGHTS):
        s = 0.5 * eta * (node + 1.0)
        phi, psi = sol.phi_psi_at(s)
        total += weight * np.exp(phi + psi @ x)
    return complex(0.5 * total)  # (1/eta) * (eta/2) * sum
