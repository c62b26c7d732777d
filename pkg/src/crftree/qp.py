"""Restricted 1-slack QP:

    min_{w >= 0, xi >= 0}  0.5 ||w||^2 + C xi   s.t.   w . d_j >= b_j - xi  for all j.

Solved in the dual: maximize  b . mu - 0.5 ||proj_+(sum_j mu_j d_j)||^2  over
mu >= 0, sum(mu) <= C, by coordinate ascent with exact line maximization
(the derivative along a line is piecewise linear and nonincreasing, so the
maximizer is found by a breakpoint scan). Because the constraint sum(mu) <= C
couples coordinates, sweeps alternate single-coordinate moves with pairwise
mass transfers, which together generate every feasible direction. The primal
is recovered as w = proj_+(sum_j mu_j d_j), which satisfies the stationarity
condition of the nonnegativity-constrained problem by construction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

MAX_SWEEPS = 10_000
TOL = 1e-8


class SolverError(RuntimeError):
    """QP failed to reach the KKT tolerance within the sweep cap."""


@dataclass
class ConstraintEntry:
    """One aggregated 1-slack constraint: w . d >= b - xi.

    r marks which examples participate; violated[i] is example i's violating
    labeling (meaningful where r[i] is True). d and b are cached:
    d = (1/m) sum_i r_i [psi(violated_i) - psi(truth_i)], b = (1/m) sum_i r_i loss_i.
    """

    r: np.ndarray
    violated: list
    d: np.ndarray
    b: float

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=bool)
        self.d = np.asarray(self.d, dtype=float)
        if self.b < -1e-9:
            raise ValueError(f"constraint offset b must be >= 0, got {self.b}")
        self.b = max(0.0, float(self.b))


@dataclass
class QPSolution:
    w: np.ndarray
    xi: float
    mu: np.ndarray
    C: float = field(default=0.0)

    @property
    def objective(self) -> float:
        return 0.5 * float(self.w @ self.w) + self.C * self.xi


def _psi_at(ts: np.ndarray, v0: np.ndarray, u: np.ndarray, beta: float) -> np.ndarray:
    """Derivative of the dual objective along v0 + t*u, at each t in ts."""
    if u.shape[0] == 0:
        return np.full(ts.shape, beta)
    z = np.maximum(v0[None, :] + ts[:, None] * u[None, :], 0.0)
    return beta - z @ u


def _line_max(v0: np.ndarray, u: np.ndarray, beta: float, lo: float, hi: float) -> float:
    """Maximize beta*t - 0.5||proj_+(v0 + t u)||^2 over t in [lo, hi] exactly."""
    if hi <= lo:
        return lo
    ends = _psi_at(np.array([lo, hi]), v0, u, beta)
    if ends[0] <= 0.0:
        return lo
    if ends[1] >= 0.0:
        return hi
    nz = u != 0.0
    cand = -v0[nz] / u[nz]
    cand = cand[(cand > lo) & (cand < hi)]
    ts = np.unique(np.concatenate([[lo], cand, [hi]]))
    vals = _psi_at(ts, v0, u, beta)
    k = int(np.argmax(vals < 0.0))  # first negative; k >= 1 since vals[0] > 0
    a, c = ts[k - 1], ts[k]
    slope = (vals[k] - vals[k - 1]) / (c - a)
    if slope >= 0.0:
        return float(a)
    return float(a - vals[k - 1] / slope)


def _residual(mu, v, D, b, C):
    w = np.maximum(v, 0.0)
    slack = b - D @ w
    xi = max(0.0, float(slack.max()))
    comp = float(np.abs(mu * (slack - xi)).max()) if mu.size else 0.0
    spare = C - float(mu.sum())
    # spare < 0 violates the mass bound outright; spare > 0 with xi > 0
    # breaks complementarity of the slack variable's own constraint.
    return w, xi, max(comp, xi * max(0.0, spare), -spare)


def _dual_value(mu, D, b):
    w = np.maximum(D.T @ mu, 0.0)
    return float(b @ mu) - 0.5 * float(w @ w)


def _newton_direction(mu, v, D, b, C):
    """Direction toward the exact maximizer under the current active-set guess.

    Coordinate sweeps zigzag when constraints are nearly parallel; at the
    optimum, the multipliers of the active constraints solve a linear system
    in the Gram matrix of their directions (restricted to the positive
    coordinates of w, where the projection is the identity). The returned
    direction is followed with an exact line maximization, which keeps every
    accepted move monotone regardless of how rough the guess was.
    """
    act = mu > 0.0
    if not act.any():
        return None
    pos = v > 0.0
    Dap = D[act][:, pos]
    G = Dap @ Dap.T
    rhs = b[act]
    try:
        if float(mu.sum()) >= C * (1.0 - 1e-10):
            # Mass bound tight: border the system with its multiplier.
            k = G.shape[0]
            M = np.zeros((k + 1, k + 1))
            M[:k, :k] = G
            M[:k, k] = M[k, :k] = 1.0
            sol = np.linalg.lstsq(M, np.append(rhs, C), rcond=None)[0][:k]
        else:
            sol = np.linalg.lstsq(G, rhs, rcond=None)[0]
    except np.linalg.LinAlgError:
        return None
    u = np.zeros_like(mu)
    u[act] = sol - mu[act]
    # A direction at roundoff scale is lstsq noise, not a step worth taking;
    # following it would mean a huge line-search parameter multiplying noise.
    if float(np.abs(u).max()) <= 1e-12 * (1.0 + float(np.abs(mu).max())):
        return None
    return u


def solve_restricted_qp(constraints: list[ConstraintEntry], C: float, dim: int,
                        init_mu: np.ndarray | None = None,
                        tol: float = TOL, max_sweeps: int = MAX_SWEEPS) -> QPSolution:
    """Solve the restricted problem over the given working set.

    Empty working set -> w = 0, xi = 0. Warm-startable through init_mu
    (padded/truncated to the current constraint count).
    """
    if C <= 0:
        raise ValueError(f"C must be positive, got {C}")
    J = len(constraints)
    if J == 0:
        return QPSolution(np.zeros(dim), 0.0, np.zeros(0), C)
    D = np.stack([c.d for c in constraints]).reshape(J, dim)
    b = np.array([c.b for c in constraints], dtype=float)

    mu = np.zeros(J)
    if init_mu is not None:
        k = min(J, init_mu.shape[0])
        mu[:k] = np.maximum(init_mu[:k], 0.0)
        if mu.sum() > C:
            mu *= C / mu.sum()
    v = D.T @ mu
    scale = max(1.0, C, float(np.abs(b).max()))
    w, xi, resid = _residual(mu, v, D, b, C)

    # The dual objective is concave along every line, so a move can improve it
    # only when the directional derivative at the current point is nonzero.
    # That derivative is g_j = b_j - d_j . w for coordinate j (and g_j - g_l
    # for a j<-l transfer), which makes null line searches cheap to skip.
    converged = False
    for sweep in range(max_sweeps):
        moved = False
        g = b - D @ np.maximum(v, 0.0)
        for j in range(J):
            hi = max(0.0, C - (float(mu.sum()) - mu[j]))
            if not ((g[j] > 0.0 and mu[j] < hi) or (g[j] < 0.0 and mu[j] > 0.0)):
                continue
            v0 = v - mu[j] * D[j]
            t = _line_max(v0, D[j], b[j], 0.0, hi)
            if t != mu[j]:
                v = v0 + t * D[j]
                mu[j] = t
                moved = True
                g = b - D @ np.maximum(v, 0.0)
        w, xi, resid = _residual(mu, v, D, b, C)
        if resid <= tol * scale:
            converged = True
            break
        # Pairwise transfers unstick the coupled sum(mu) <= C constraint.
        # t > 0 moves mass l -> j, t < 0 the reverse; each unordered pair's
        # line covers both directions.
        g = b - D @ w
        for j in range(J):
            for l in range(j + 1, J):
                if not ((mu[l] > 0.0 and g[j] > g[l]) or (mu[j] > 0.0 and g[j] < g[l])):
                    continue
                t = _line_max(v, D[j] - D[l], b[j] - b[l], -mu[j], mu[l])
                if t != 0.0:
                    mu[j] += t
                    mu[l] -= t
                    v = v + t * (D[j] - D[l])
                    moved = True
                    g = b - D @ np.maximum(v, 0.0)
        np.maximum(mu, 0.0, out=mu)
        u = _newton_direction(mu, v, D, b, C)
        if u is not None:
            # Largest step keeping mu >= 0 and sum(mu) <= C.
            hi = np.inf
            dec = u < 0.0
            if dec.any():
                hi = float(np.min(mu[dec] / -u[dec]))
            gain = float(u.sum())
            if gain > 0.0:
                hi = min(hi, max(0.0, C - float(mu.sum())) / gain)
            if np.isfinite(hi) and hi > 0.0:
                Du = D.T @ u
                t = _line_max(v, Du, float(b @ u), 0.0, hi)
                if t > 0.0:
                    mu = np.maximum(mu + t * u, 0.0)
                    v = v + t * Du
                    moved = True
        w, xi, resid = _residual(mu, v, D, b, C)
        # The duality gap bounds the primal objective error directly, but the
        # dual value of a mass-infeasible mu is not a lower bound, so the gap
        # certifies nothing there (the residual covers that case).
        gap = 0.5 * float(w @ w) + C * xi - _dual_value(mu, D, b)
        feasible = float(mu.sum()) <= C + tol * scale
        if resid <= tol * scale or (feasible and gap <= tol * scale):
            converged = True
            break
        if not moved:
            # Coordinatewise optimum: every tangent direction is covered by a
            # coordinate or a transfer, so further sweeps cannot progress.
            break
    if not converged:
        gap = 0.5 * float(w @ w) + C * xi - _dual_value(mu, D, b)
        feasible = float(mu.sum()) <= C + 1e-6 * scale
        if resid > 1e-6 * scale and not (feasible and gap <= 1e-6 * scale):
            raise SolverError(f"QP did not converge in {max_sweeps} sweeps; residual {resid:.3e}")
        logger.debug("QP stopped before tolerance; residual %.3e, duality gap %.3e", resid, gap)

    # Recompute v from scratch once to shed accumulated drift.
    v = D.T @ mu
    w, xi, resid = _residual(mu, v, D, b, C)
    return QPSolution(w, xi, mu, C)


def extract_lambda(mu: np.ndarray, constraints: list[ConstraintEntry], num_examples: int) -> dict:
    """Per-(example, labeling) dual weights:

        lambda_{(i, y)} = sum over constraints j with r_j[i] and violated_j[i] = y of mu_j / m.

    Returned as {(i, labeling-as-tuple): weight}, zero entries omitted.
    The per-example mass sum_y lambda_{(i, y)} is at most C / m.
    """
    lam: dict[tuple[int, tuple], float] = {}
    for j, entry in enumerate(constraints):
        if mu[j] <= 0.0:
            continue
        for i in range(num_examples):
            if not entry.r[i]:
                continue
            key = (i, tuple(int(c) for c in entry.violated[i]))
            lam[key] = lam.get(key, 0.0) + float(mu[j]) / num_examples
    return lam
