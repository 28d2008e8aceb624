"""Path simulation from affine semimartingale characteristics.

Euler-Maruyama with projection, per step from state x (step size dt):

  1. kill with probability 1 - exp(-kill_rate(x) dt)
  2. for each atom (xi, w(x)) of K(x,.), add N * xi with N ~ Poisson(w(x) dt)
  3. x <- x + drift_eff(x) dt + L(x) sqrt(dt) Z, with L(x) L(x)^T = c(x) and
     drift_eff(x) = b(x) - sum_j w_j(x) chi(xi_j): raw Poisson jumps carry the
     full displacement, so the small-jump compensator that b(x) absorbs must
     be subtracted back out (zero for models whose atoms all exceed the
     truncation radius)
  4. project back onto the state space

Killed and exploded paths are frozen at NaN (the cemetery marker) and carry a
reason code; numerical failures (NaN from the dynamics itself) are a separate
status and count as simulation failures, not kills.

Determinism: path p draws from PCG64 seeded with splitmix64(seed, p); the
per-path stream layout is fixed (kill uniforms, then jump uniforms, then
normals, each shaped per step), so results are independent of block size,
thread count, and scheduling.
"""

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .closedforms import ChainSpec
from .model import AffineModel

__all__ = ["SimConfig", "PathEnsemble", "simulate", "simulate_ctmc",
           "STATUS_ALIVE", "STATUS_KILLED", "STATUS_EXPLODED", "STATUS_FAILED"]

STATUS_ALIVE = 0
STATUS_KILLED = 1
STATUS_EXPLODED = 2
STATUS_FAILED = 3

_STATE_NORM_LIMIT = 1e8
_BLOCK = 1024  # fixed block size: results must not depend on parallel layout

_MASK64 = (1 << 64) - 1


def _splitmix64(v):
    v = (v + 0x9E3779B97F4A7C15) & _MASK64
    z = v
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _path_seed(seed, idx):
    return _splitmix64((_splitmix64(seed & _MASK64) + idx) & _MASK64)


def _poisson_counts(q, mu):
    """Inverse-CDF Poisson counts: smallest j with CDF_mu(j) >= q.

    Exact for the uniform draws q in [0, 1); mu is expected O(1) per step.
    """
    counts = np.zeros(mu.shape, dtype=np.int64)
    pmf = np.exp(-mu)
    cdf = pmf.copy()
    active = q > cdf
    j = 0
    while np.any(active):
        j += 1
        if j > 1000:
            warnings.warn("Poisson inversion capped at 1000 events per step "
                          "(atom intensity * dt far too large)", UserWarning)
            break
        pmf = pmf * mu / j
        cdf = cdf + pmf
        counts[active] += 1
        active = q > cdf
    return counts


@dataclass(frozen=True)
class SimConfig:
    dt: float
    horizon: float
    n_paths: int
    seed: int
    scheme: str = "euler_project"  # or "gillespie_exact" (FiniteChain only)
    record_every: int = 1          # record every k-th step (first and last always kept)

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive; got {self.dt}")
        if self.horizon < self.dt:
            raise ValueError(f"horizon must be >= dt; got horizon={self.horizon}, dt={self.dt}")
        if self.n_paths < 1:
            raise ValueError(f"n_paths must be >= 1; got {self.n_paths}")
        if self.scheme not in ("euler_project", "gillespie_exact"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1; got {self.record_every}")

    @property
    def n_steps(self):
        return int(round(self.horizon / self.dt))

    def record_steps(self):
        steps = self.n_steps
        idx = list(range(0, steps + 1, self.record_every))
        if idx[-1] != steps:
            idx.append(steps)
        return np.array(idx, dtype=np.int64)


@dataclass(frozen=True)
class PathEnsemble:
    times: np.ndarray      # (T,)
    paths: np.ndarray      # (P, T, n); NaN rows once a path is dead or failed
    killed: np.ndarray     # (P,) bool (kill or explosion)
    kill_time: np.ndarray  # (P,) time of death, NaN if never
    status: np.ndarray     # (P,) uint8 status codes
    seed: int
    scheme: str

    @property
    def n_paths(self):
        return self.paths.shape[0]

    @property
    def n(self):
        return self.paths.shape[2]

    def alive_at(self, ti):
        """Mask of paths alive (finite state) at time index ti."""
        return np.isfinite(self.paths[:, ti, 0])

    def to_csv(self, path=None):
        """Long format: path_id, t, x_1..x_n, killed (dead-by-then flag)."""
        n = self.n
        header = "path_id,t," + ",".join(f"x_{j + 1}" for j in range(n)) + ",killed"
        lines = [header]
        for p in range(self.n_paths):
            dead_from = self.kill_time[p]
            for ti, t in enumerate(self.times):
                vals = self.paths[p, ti]
                dead = int(np.isfinite(dead_from) and t >= dead_from - 1e-15)
                row = [str(p), repr(float(t))]
                row += [repr(float(v)) for v in vals]
                row.append(str(dead))
                lines.append(",".join(row))
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as f:
                f.write(text)
        return text

    def summary(self):
        """Per-grid-time means and second moments over alive paths."""
        T = len(self.times)
        mean = []
        second = []
        alive_counts = []
        for ti in range(T):
            mask = self.alive_at(ti)
            cnt = int(mask.sum())
            alive_counts.append(cnt)
            if cnt:
                x = self.paths[mask, ti, :]
                mean.append([float(v) for v in x.mean(axis=0)])
                second.append([float(v) for v in (x * x).mean(axis=0)])
            else:
                mean.append([None] * self.n)
                second.append([None] * self.n)
        return {
            "times": [float(t) for t in self.times],
            "n_paths": int(self.n_paths),
            "seed": int(self.seed),
            "scheme": self.scheme,
            "alive": alive_counts,
            "killed_fraction": float(np.mean(self.killed)),
            "failed": int(np.sum(self.status == STATUS_FAILED)),
            "mean": mean,
            "second_moment": second,
        }

    def to_summary_json(self, path=None):
        text = json.dumps(self.summary(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as f:
                f.write(text + "\n")
        return text


# ----------------------------------------------------------------------
# Euler-Maruyama with projection

def _project_block(space, X):
    if space.kind == "Canonical":
        X[:, : space.m] = np.maximum(X[:, : space.m], 0.0)
        return X
    if space.kind == "Interval":
        np.clip(X, space.r1, space.r2, out=X)
        return X
    if space.kind == "FiniteChain":
        np.clip(np.round(X, out=X), 0.0, float(space.k), out=X)
        return X
    if space.kind == "SymPSD":
        from .symmat import flat_to_sym, sym_to_flat
        d = space.d
        i, j = np.triu_indices(d)
        off = i != j
        # batch unflatten
        W = X.copy()
        W[:, off] /= np.sqrt(2.0)
        M = np.zeros((X.shape[0], d, d))
        M[:, i, j] = W
        M[:, j, i] = W
        w, v = np.linalg.eigh(M)
        if w.min() < 0.0:
            w = np.maximum(w, 0.0)
            M = np.einsum("pij,pj,pkj->pik", v, w, v)
        Mf = M[:, i, j]
        Mf[:, off] *= np.sqrt(2.0)
        X[:] = Mf
        return X
    raise NotImplementedError(space.kind)


def _diffusion_noise(model, X, Z, sqrt_dt):
    """L(x) sqrt(dt) Z for a block of states, batched over paths."""
    n = model.n
    if n == 1:
        c = model.a[0, 0] + X[:, 0] * model.A[0, 0, 0]
        return (np.sqrt(np.maximum(c, 0.0)) * sqrt_dt * Z[:, 0])[:, None]
    C = model.a[None, :, :] + np.einsum("pi,ijk->pjk", X, model.A)
    C = 0.5 * (C + np.transpose(C, (0, 2, 1)))
    w, v = np.linalg.eigh(C)
    w = np.maximum(w, 0.0)
    # factor L = V diag(sqrt(w)): L L^T = C
    L = v * np.sqrt(w)[:, None, :]
    return np.einsum("pij,pj->pi", L, Z) * sqrt_dt


def _euler_block(model, x0, cfg, p_lo, p_hi, paths_out, killed_out, kill_time_out, status_out):
    space = model.space
    n = model.n
    steps = cfg.n_steps
    dt = cfg.dt
    sqrt_dt = np.sqrt(dt)
    xi_all, w0, coef = model._atom_table
    J = xi_all.shape[0]
    chi_all = model._chi(xi_all) if J else xi_all
    has_chi = J > 0 and np.any(chi_all)
    has_kill = model.c_kill != 0.0 or np.any(model.gamma_kill)
    P = p_hi - p_lo

    # fixed per-path stream layout: kill uniforms, jump uniforms, normals
    u_kill = np.empty((P, steps))
    u_jump = np.empty((P, steps, J))
    normal = np.empty((P, steps, n))
    for p in range(P):
        rng = np.random.Generator(np.random.PCG64(_path_seed(cfg.seed, p_lo + p)))
        u_kill[p] = rng.random(steps)
        u_jump[p] = rng.random((steps, J))
        normal[p] = rng.standard_normal((steps, n))

    X = np.tile(np.asarray(x0, dtype=float), (P, 1))
    status = np.zeros(P, dtype=np.uint8)
    t_dead = np.full(P, np.nan)
    rec = cfg.record_steps()
    rec_pos = {int(s): i for i, s in enumerate(rec)}
    out = np.full((P, len(rec), n), np.nan)
    out[:, 0, :] = X

    alive = np.ones(P, dtype=bool)
    for s in range(steps):
        if not alive.any():
            break
        Xa = X[alive]

        # (1) killing at the step-start state
        if has_kill:
            rate = np.maximum(model.c_kill + Xa @ model.gamma_kill, 0.0)
            p_kill = -np.expm1(-rate * dt)
            died = u_kill[alive, s] < p_kill
            if died.any():
                idx = np.flatnonzero(alive)[died]
                status[idx] = STATUS_KILLED
                t_dead[idx] = (s + 1) * dt
                alive[idx] = False
                Xa = X[alive]
        if not alive.any():
            break

        # (2) jumps: Poisson counts per atom, intensity at the step-start state
        if J:
            w = np.maximum(w0[None, :] + Xa @ coef.T, 0.0)
            counts = _poisson_counts(u_jump[alive, s, :], w * dt)
            if counts.any():
                Xa = Xa + counts @ xi_all

        # (3) drift + diffusion at the post-jump state
        drift = model.b[None, :] + Xa @ model.B.T
        if has_chi:
            wj = np.maximum(w0[None, :] + Xa @ coef.T, 0.0)
            drift = drift - wj @ chi_all
        Xa = Xa + drift * dt + _diffusion_noise(model, Xa, normal[alive, s, :], sqrt_dt)

        # (4) back onto the state space
        Xa = _project_block(space, Xa)

        bad = ~np.isfinite(Xa).all(axis=1)
        with np.errstate(over="ignore", invalid="ignore"):
            norms = np.linalg.norm(np.where(np.isfinite(Xa), Xa, 0.0), axis=1)
        exploded = ~bad & (norms > _STATE_NORM_LIMIT)
        if bad.any() or exploded.any():
            idx_alive = np.flatnonzero(alive)
            if bad.any():
                idx = idx_alive[bad]
                status[idx] = STATUS_FAILED
                t_dead[idx] = (s + 1) * dt
            if exploded.any():
                idx = idx_alive[exploded]
                status[idx] = STATUS_EXPLODED
                t_dead[idx] = (s + 1) * dt
            keep = ~bad & ~exploded
            X[idx_alive[keep]] = Xa[keep]
            alive[idx_alive[~keep]] = False
        else:
            X[alive] = Xa

        if (s + 1) in rec_pos:
            out[alive, rec_pos[s + 1], :] = X[alive]

    paths_out[p_lo:p_hi] = out
    killed_out[p_lo:p_hi] = (status == STATUS_KILLED) | (status == STATUS_EXPLODED)
    kill_time_out[p_lo:p_hi] = t_dead
    status_out[p_lo:p_hi] = status


def _chain_spec_of(model):
    """Recognize a birth-chain model (intensity k - x, jump +1, no other dynamics)."""
    space = model.space
    if space.kind != "FiniteChain":
        raise ValueError("gillespie_exact requires a FiniteChain state space")
    k = space.k
    xi_all, w0, coef = model._atom_table
    ok = (not np.any(model.b) and not np.any(model.B) and not np.any(model.a)
          and not np.any(model.A) and model.c_kill == 0.0 and not np.any(model.gamma_kill)
          and xi_all.shape == (1, 1) and abs(xi_all[0, 0] - 1.0) <= 1e-12
          and abs(w0[0] - k) <= 1e-12 and abs(coef[0, 0] + 1.0) <= 1e-12)
    if not ok:
        raise ValueError("gillespie_exact supports only the birth chain "
                         "(K(x,.) = (k - x) delta_1, no drift/diffusion/killing)")
    return ChainSpec(k=k)


def simulate(model: AffineModel, x0, cfg: SimConfig, threads=1):
    """Sample an ensemble of paths of the model started at x0."""
    report = model.validate()
    if not report.passed:
        raise ValueError("model validation failed: "
                         + "; ".join(name for name, _ in report.failures()))
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.shape != (model.n,):
        raise ValueError(f"x0 must have length {model.n}; got shape {x0.shape}")
    if not model.space.contains(x0, tol=1e-12):
        raise ValueError(f"x0={x0} lies outside the state space {model.space}")

    if cfg.scheme == "gillespie_exact":
        return simulate_ctmc(_chain_spec_of(model), int(round(x0[0])), cfg)

    P = cfg.n_paths
    rec = cfg.record_steps()
    times = rec * cfg.dt
    paths = np.empty((P, len(rec), model.n))
    killed = np.empty(P, dtype=bool)
    kill_time = np.empty(P)
    status = np.empty(P, dtype=np.uint8)

    blocks = [(lo, min(lo + _BLOCK, P)) for lo in range(0, P, _BLOCK)]
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_euler_block, model, x0, cfg, lo, hi,
                                   paths, killed, kill_time, status)
                       for lo, hi in blocks]
            for fut in futures:
                fut.result()
    else:
        for lo, hi in blocks:
            _euler_block(model, x0, cfg, lo, hi, paths, killed, kill_time, status)

    n_failed = int(np.sum(status == STATUS_FAILED))
    if n_failed:
        warnings.warn(f"{n_failed} path(s) aborted on NaN/overflow (simulation failure, not kill)",
                      UserWarning)
    return PathEnsemble(times=times, paths=paths, killed=killed, kill_time=kill_time,
                        status=status, seed=cfg.seed, scheme=cfg.scheme)


def simulate_ctmc(spec: ChainSpec, x0, cfg: SimConfig):
    """Exact event-driven simulation of the birth chain: from level x the next
    vacancy fills after an Exponential(k - x) waiting time."""
    if cfg.scheme != "gillespie_exact":
        raise ValueError("simulate_ctmc requires cfg.scheme == 'gillespie_exact'")
    x0 = int(x0)
    if not (0 <= x0 <= spec.k):
        raise ValueError(f"x0={x0} outside {{0..{spec.k}}}")
    P = cfg.n_paths
    rec = cfg.record_steps()
    times = rec * cfg.dt
    J0 = spec.k - x0
    rates = np.array([spec.k - x0 - j for j in range(J0)], dtype=float)

    paths = np.empty((P, len(times), 1))
    for lo in range(0, P, _BLOCK):
        hi = min(lo + _BLOCK, P)
        B = hi - lo
        U = np.empty((B, J0))
        for p in range(B):
            rng = np.random.Generator(np.random.PCG64(_path_seed(cfg.seed, lo + p)))
            U[p] = rng.random(J0)
        if J0:
            waits = -np.log1p(-U) / rates[None, :]
            event_times = np.cumsum(waits, axis=1)
            # state at time t: x0 + number of events by t (last-value interpolation)
            filled = (event_times[:, :, None] <= times[None, None, :]).sum(axis=1)
        else:
            filled = np.zeros((B, len(times)), dtype=np.int64)
        paths[lo:hi, :, 0] = x0 + filled

    return PathEnsemble(
        times=times, paths=paths,
        killed=np.zeros(P, dtype=bool), kill_time=np.full(P, np.nan),
        status=np.zeros(P, dtype=np.uint8), seed=cfg.seed, scheme=cfg.scheme,
    )
