"""Coherence-vector and channel-matrix propagation under admissible inputs.

Piecewise-constant fields propagate with exact per-interval exponentials
(dense below an order threshold, Krylov action above it); general callable
fields integrate with an adaptive Runge-Kutta scheme.  Trajectories carry
leakage diagnostics against the protected subspace and the commutant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .commutant import CvsProjection
from .cvs import GModel
from .pstatic import DIFSResult

DENSE_EXPM_MAX_ORDER = 256


class SimulationError(RuntimeError):
    pass


@dataclass
class ControlField:
    """Input field on [0, T]: constant, piecewise-constant, or effective.

    Effective fields store samples of u_eff on a grid and realize
    u(t) = zN u_eff(t) + zoff, which lies in the DIFS by construction.
    """

    kind: str                      # "constant" | "piecewise" | "effective"
    values: np.ndarray             # (n_c,) constant; (n_steps, n_c) piecewise; (n_steps, n_eff) effective
    grid: np.ndarray | None = None # interval edges, length n_steps + 1
    difs: DIFSResult | None = None

    def __post_init__(self):
        self.values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if self.kind == "constant":
            if self.values.ndim != 1:
                raise SimulationError("constant field takes a single input vector")
        elif self.kind in ("piecewise", "effective"):
            if self.values.ndim != 2:
                raise SimulationError(f"{self.kind} field takes a (n_steps, dim) array")
            if self.grid is None or len(self.grid) != self.values.shape[0] + 1:
                raise SimulationError("grid must have one more edge than steps")
            if np.any(np.diff(self.grid) <= 0):
                raise SimulationError("grid times must be strictly increasing")
            if self.kind == "effective" and self.difs is None:
                raise SimulationError("effective fields need the DIFS data")
        else:
            raise SimulationError(f"unknown field kind {self.kind!r}")

    def intervals(self, T: float):
        """Yield (t0, t1, u_vector) covering [0, T]."""
        if self.kind == "constant":
            yield 0.0, T, self.values
            return
        edges = np.asarray(self.grid, dtype=float)
        for i in range(self.values.shape[0]):
            t0, t1 = edges[i], min(edges[i + 1], T)
            if t1 <= t0:
                break
            u = self.values[i]
            if self.kind == "effective":
                u = self.difs.realize(u)
            yield float(t0), float(t1), np.asarray(u, dtype=float)
            if t1 >= T:
                break

    @classmethod
    def constant(cls, u) -> "ControlField":
        return cls("constant", np.asarray(u, dtype=float))

    @classmethod
    def effective(cls, difs: DIFSResult, u_eff_samples, grid) -> "ControlField":
        return cls("effective", np.asarray(u_eff_samples, dtype=float), np.asarray(grid, float), difs)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_times, Bdim)
    diagnostics: dict = field(default_factory=dict)

    def final(self) -> np.ndarray:
        return self.states[-1]


def _step_exact(G: sp.csr_matrix, dt: float, V: np.ndarray) -> np.ndarray:
    """exp(G dt) @ V with dense expm at small order, Krylov action otherwise."""
    if G.shape[0] <= DENSE_EXPM_MAX_ORDER:
        return sla.expm(G.toarray() * dt) @ V
    return spla.expm_multiply(G * dt, V)


def _diagnose(
    times: list[float],
    states: list[np.ndarray],
    p_proj: CvsProjection | None,
    nc_proj: CvsProjection | None,
) -> dict:
    diag: dict = {}
    if p_proj is not None:
        diag["p_leakage"] = np.array([p_proj.complement_norm(v) for v in states])
    if nc_proj is not None:
        diag["nc_leakage"] = np.array([nc_proj.complement_norm(v) for v in states])
    diag["norm"] = np.array([np.linalg.norm(v) for v in states])
    return diag


def propagate(
    gmodel: GModel,
    field: ControlField,
    v0: np.ndarray,
    T: float,
    p_proj: CvsProjection | None = None,
    nc_proj: CvsProjection | None = None,
    samples_per_interval: int = 8,
    rtol: float = 1e-9,
) -> Trajectory:
    """Integrate v' = G[u(t)] v over [0, T] with per-interval exact stepping."""
    v = np.asarray(v0, dtype=float).copy()
    times = [0.0]
    states = [v.copy()]
    for t0, t1, u in field.intervals(T):
        G = gmodel.g_of(u)
        sub = np.linspace(t0, t1, samples_per_interval + 1)[1:]
        prev = t0
        for t in sub:
            v = _step_exact(G, t - prev, v)
            times.append(float(t))
            states.append(v.copy())
            prev = t
    if times[-1] < T - 1e-12:
        raise SimulationError(f"field only covers [0, {times[-1]:.6g}] of [0, {T:.6g}]")
    del rtol  # exact stepping; kept for interface parity with callable fields
    return Trajectory(np.array(times), np.stack(states), _diagnose(times, states, p_proj, nc_proj))


def propagate_callable(
    gmodel: GModel,
    u_of_t,
    v0: np.ndarray,
    T: float,
    p_proj: CvsProjection | None = None,
    nc_proj: CvsProjection | None = None,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    n_eval: int = 64,
) -> Trajectory:
    """Adaptive integration for a general bounded input field t -> u(t)."""

    def rhs(t, v):
        return gmodel.g_of(np.asarray(u_of_t(t))) @ v

    t_eval = np.linspace(0.0, T, n_eval + 1)
    sol = solve_ivp(rhs, (0.0, T), np.asarray(v0, float), t_eval=t_eval, rtol=rtol, atol=atol)
    if not sol.success:
        raise SimulationError(f"integration failed: {sol.message}")
    states = [sol.y[:, i].copy() for i in range(sol.y.shape[1])]
    return Trajectory(sol.t, np.stack(states), _diagnose(list(sol.t), states, p_proj, nc_proj))


def channel_matrix(gmodel: GModel, field: ControlField, T: float) -> np.ndarray:
    """Solve C' = G[u(t)] C with C(0) = I by accumulating interval exponentials."""
    C = np.eye(gmodel.dim)
    covered = 0.0
    for t0, t1, u in field.intervals(T):
        G = gmodel.g_of(u)
        C = _step_exact(G, t1 - t0, C)
        covered = t1
    if covered < T - 1e-12:
        raise SimulationError(f"field only covers [0, {covered:.6g}] of [0, {T:.6g}]")
    return C


def channel_block_report(C: np.ndarray, working_cols: np.ndarray) -> dict:
    """Block structure of a channel matrix against a protected frame.

    Returns off-diagonal quadrant norms and the working block's distance from
    orthogonality (unitarity in the real coherence representation).
    """
    W = working_cols
    comp = np.eye(C.shape[0]) - W @ W.T
    caa = W.T @ C @ W
    upper = W.T @ C @ comp
    lower = comp @ C @ W
    return {
        "offdiag_norm": float(max(np.linalg.norm(upper), np.linalg.norm(lower))),
        "working_orthogonality": float(np.linalg.norm(caa.T @ caa - np.eye(W.shape[1]))),
    }
