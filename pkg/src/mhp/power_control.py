"""Multigroup power control on fixed beamforming directions.

Given unit-norm directions d_i and channels h_jk, the scalar couplings
g[j][i, k] = |h_jk^H d_i|^2 reduce the precoder design to a power vector p.
The QoS solver iterates the standard interference function

    p_j <- max_k  t_jk * (sum_{i != j} p_i g[j][i, k] + sigma^2) / g[j][j, k]

whose fixed point, when it exists, is the componentwise-minimal feasible
allocation.  The max-min solver brackets the common target by bisection
over QoS feasibility within the power budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_PC_ITERATIONS = 500
DIVERGENCE_FACTOR = 1e6
CONVERGENCE_RTOL = 1e-13
MMF_BISECTION_RTOL = 1e-4


@dataclass
class PowerAllocation:
    p: np.ndarray
    converged: bool
    iterations: int = 0

    @property
    def total(self) -> float:
        return float(np.sum(self.p))


def _as_target_arrays(gains: list[np.ndarray], targets) -> list[np.ndarray]:
    if np.isscalar(targets):
        return [np.full(g.shape[1], float(targets)) for g in gains]
    out = [np.asarray(t, dtype=float).reshape(-1) for t in targets]
    if len(out) != len(gains) or any(t.size != g.shape[1] for t, g in zip(out, gains)):
        raise ValueError("targets must match the gain layout")
    return out


def power_control_qos(
    gains: list[np.ndarray],
    targets,
    sigma2: float,
    max_iterations: int = MAX_PC_ITERATIONS,
) -> PowerAllocation:
    """Minimal powers meeting per-UE SINR targets on fixed directions.

    gains[j] is a (G, K_j) array of |h_jk^H d_i|^2 couplings.  Returns
    converged=False immediately if some own-group gain is nonpositive, and
    when the iteration diverges (total power blowing past a documented
    multiple of the interference-free scale) or fails to settle within the
    iteration cap; non-convergence signals infeasibility for these
    directions.
    """
    n_groups = len(gains)
    tgt = _as_target_arrays(gains, targets)
    own = [g[j, :] for j, g in enumerate(gains)]
    if min(np.min(o) for o in own) <= 0.0:
        return PowerAllocation(p=np.zeros(n_groups), converged=False)

    blowup = DIVERGENCE_FACTOR * (
        sum(np.max(t) for t in tgt) * sigma2 / min(np.min(o) for o in own)
    )
    p = np.zeros(n_groups)
    for it in range(1, max_iterations + 1):
        nxt = np.empty(n_groups)
        for j in range(n_groups):
            interference = p @ gains[j] - p[j] * own[j]
            nxt[j] = np.max(tgt[j] * (interference + sigma2) / own[j])
        delta = np.max(np.abs(nxt - p))
        p = nxt
        if np.sum(p) > blowup:
            return PowerAllocation(p=p, converged=False, iterations=it)
        if delta <= CONVERGENCE_RTOL * max(1.0, float(np.max(p))):
            return PowerAllocation(p=p, converged=True, iterations=it)
    return PowerAllocation(p=p, converged=False, iterations=max_iterations)


def power_control_mmf(
    gains: list[np.ndarray],
    power_budget: float,
    sigma2: float,
) -> tuple[PowerAllocation, float]:
    """Largest common SINR target sustainable within the power budget.

    Bisects the target over QoS convergence with total power <= budget; the
    bracket upper end is the single-UE bound min_{j,k} P*g_jjk/sigma^2.
    Terminates when the bracket is below a 1e-4 relative width and returns
    the proven-feasible end.
    """
    if power_budget <= 0:
        raise ValueError("power_budget must be > 0")
    n_groups = len(gains)
    own_min = min(np.min(g[j, :]) for j, g in enumerate(gains))
    hi = power_budget * own_min / sigma2
    if hi <= 0.0:
        return PowerAllocation(p=np.zeros(n_groups), converged=True), 0.0

    def feasible(gamma: float) -> PowerAllocation | None:
        alloc = power_control_qos(gains, gamma, sigma2)
        if alloc.converged and alloc.total <= power_budget * (1.0 + 1e-12):
            return alloc
        return None

    best = feasible(hi)
    if best is not None:
        return best, hi

    lo, lo_alloc = 0.0, PowerAllocation(p=np.zeros(n_groups), converged=True)
    while hi - lo > MMF_BISECTION_RTOL * hi:
        mid = 0.5 * (lo + hi)
        alloc = feasible(mid)
        if alloc is not None:
            lo, lo_alloc = mid, alloc
        else:
            hi = mid
    return lo_alloc, lo


def coupling_gains(channels, directions: list[np.ndarray]) -> list[np.ndarray]:
    """gains[j][i, k] = |h_jk^H d_i|^2 for unit directions d_i."""
    g = len(directions)
    out = []
    for group in channels.vectors:
        block = np.empty((g, len(group)))
        for k, h in enumerate(group):
            for i, d in enumerate(directions):
                block[i, k] = abs(np.vdot(h, d)) ** 2
        out.append(block)
    return out
