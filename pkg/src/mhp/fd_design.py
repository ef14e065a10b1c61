"""Fully-digital multicast precoder design.

Both design problems run through the same pipeline: semidefinite relaxation,
candidate extraction (the principal eigenvector of each lifted block plus
Gaussian randomization), and power control on the candidate directions.

* QoS: minimize total transmit power subject to per-UE SINR targets.
* MMF: maximize the minimum SINR under a total power budget, by bisecting
  the target over relaxation feasibility within the budget and then running
  max-min power control per candidate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .power_control import (
    MMF_BISECTION_RTOL,
    coupling_gains,
    power_control_mmf,
    power_control_qos,
)
from .sdr import (
    SdrSolution,
    _broadcast_targets,
    build_qos_sdr,
    gaussian_randomize,
    principal_direction,
    solve_sdp,
)
from .sdp import SdpStatus

# Acceptance slack for the relaxation-feasibility probe: the first-order
# solver resolves objectives to ~1e-7 relative, so comparisons against the
# power budget carry a slightly wider, documented margin.
SDR_FEASIBILITY_MARGIN = 1e-6

# A candidate must beat the incumbent by this relative margin; mathematical
# ties (e.g. every sample of a rank-one block) stay with the lowest index.
TIE_BREAK_MARGIN = 1e-12


class DesignError(Exception):
    """Base class for precoder-design failures."""


class InfeasibleDesignError(DesignError):
    """The relaxation is infeasible or no candidate admits feasible powers."""


class SolverStalledError(DesignError):
    """The conic solver hit its iteration cap without a verdict."""


@dataclass
class FDPrecoder:
    """Complex N x G precoder, one column per multicast group."""

    W: np.ndarray

    def __post_init__(self):
        self.W = np.atleast_2d(np.asarray(self.W, dtype=np.complex128))
        if not np.all(np.isfinite(self.W.real)) or not np.all(np.isfinite(self.W.imag)):
            raise ValueError("precoder entries must be finite")

    @property
    def n_antennas(self) -> int:
        return self.W.shape[0]

    @property
    def n_groups(self) -> int:
        return self.W.shape[1]

    @property
    def total_power(self) -> float:
        return float(np.linalg.norm(self.W) ** 2)


@dataclass
class QosDesign:
    precoder: FDPrecoder
    total_power: float
    sdr_objective: float
    candidate_index: int
    sdr: SdrSolution


@dataclass
class MmfDesign:
    precoder: FDPrecoder
    min_sinr: float
    sdr_gamma_upper: float
    candidate_index: int
    sdr: SdrSolution | None


def sinr(channels: ChannelSet, w, group: int, ue: int, sigma2: float | None = None) -> float:
    """Per-UE SINR |h^H w_j|^2 / (sum_{i!=j} |h^H w_i|^2 + sigma^2)."""
    cfg = channels.config
    if sigma2 is None:
        sigma2 = cfg.noise_power
    if sigma2 <= 0:
        raise ValueError("sigma2 must be > 0")
    w = np.atleast_2d(np.asarray(w, dtype=np.complex128))
    if w.shape != (cfg.n_antennas, cfg.n_groups):
        raise ValueError(
            f"precoder shape {w.shape} does not match system "
            f"({cfg.n_antennas}, {cfg.n_groups})"
        )
    h = channels.vector(group, ue)
    cross = h.conj() @ w
    powers = np.abs(cross) ** 2
    signal = powers[group]
    interference = float(np.sum(powers)) - float(signal)
    return float(signal / (interference + sigma2))


def _assemble(directions: list[np.ndarray], p: np.ndarray) -> FDPrecoder:
    cols = [np.sqrt(pj) * d for pj, d in zip(p, directions)]
    return FDPrecoder(W=np.column_stack(cols))


def _candidate_tuples(sdr_solution: SdrSolution, n_rand: int, seed: int):
    principal = [principal_direction(x) for x in sdr_solution.X]
    return [principal] + gaussian_randomize(sdr_solution.X, n_rand, seed)


def solve_qos(
    channels: ChannelSet,
    targets,
    sigma2: float | None = None,
    n_rand: int = 100,
    seed: int = 0,
    solver_options: dict | None = None,
) -> QosDesign:
    """Minimum-power precoder meeting per-UE SINR targets.

    Candidates are ranked by power-controlled total power; the lowest
    candidate index wins ties.  Raises InfeasibleDesignError when the
    relaxation is infeasible or no candidate direction tuple admits a
    convergent power control.
    """
    if n_rand < 1:
        raise ValueError("n_rand must be >= 1")
    cfg = channels.config
    if sigma2 is None:
        sigma2 = cfg.noise_power
    tgt = _broadcast_targets(channels, targets)

    problem = build_qos_sdr(channels, tgt, sigma2)
    sol = solve_sdp(problem, **(solver_options or {}))
    if sol.status is SdpStatus.INFEASIBLE:
        raise InfeasibleDesignError("QoS relaxation is infeasible for these targets")
    if sol.status is SdpStatus.MAX_ITERATIONS:
        raise SolverStalledError(
            f"conic solver stalled (residuals {sol.primal_residual:.2e}/"
            f"{sol.dual_residual:.2e})"
        )

    best_power = np.inf
    best: tuple[int, np.ndarray, list[np.ndarray]] | None = None
    for idx, dirs in enumerate(_candidate_tuples(sol, n_rand, seed)):
        gains = coupling_gains(channels, dirs)
        alloc = power_control_qos(gains, tgt, sigma2)
        if not alloc.converged:
            continue
        if alloc.total < best_power * (1.0 - TIE_BREAK_MARGIN):
            best_power = alloc.total
            best = (idx, alloc.p, dirs)
    if best is None:
        raise InfeasibleDesignError(
            "no randomization candidate admits a convergent power control"
        )
    idx, p, dirs = best
    return QosDesign(
        precoder=_assemble(dirs, p),
        total_power=float(best_power),
        sdr_objective=sol.objective,
        candidate_index=idx,
        sdr=sol,
    )


def solve_mmf(
    channels: ChannelSet,
    power_budget: float,
    sigma2: float | None = None,
    n_rand: int = 100,
    seed: int = 0,
    solver_options: dict | None = None,
) -> MmfDesign:
    """Max-min SINR precoder under a total power budget.

    Bisects the common target over relaxation feasibility (power within the
    budget), then runs max-min power control on each candidate tuple from
    the final relaxation solution.  The returned sdr_gamma_upper bounds the
    achievable minimum SINR from above.
    """
    if power_budget <= 0:
        raise ValueError("power_budget must be > 0")
    if n_rand < 1:
        raise ValueError("n_rand must be >= 1")
    cfg = channels.config
    if sigma2 is None:
        sigma2 = cfg.noise_power

    norm_min = min(
        float(np.linalg.norm(h) ** 2) for _, _, h in channels.pairs()
    )
    hi = power_budget * norm_min / sigma2
    if hi <= 0.0:
        zero = FDPrecoder(W=np.zeros((cfg.n_antennas, cfg.n_groups)))
        return MmfDesign(zero, 0.0, 0.0, candidate_index=0, sdr=None)

    opts = solver_options or {}

    def probe(gamma: float) -> SdrSolution | None:
        sol = solve_sdp(build_qos_sdr(channels, gamma, sigma2), **opts)
        if sol.status is SdpStatus.OPTIMAL and sol.objective <= power_budget * (
            1.0 + SDR_FEASIBILITY_MARGIN
        ):
            return sol
        return None

    feasible_sol = probe(hi)
    gamma_upper = hi
    if feasible_sol is None:
        lo = 0.0
        while hi - lo > MMF_BISECTION_RTOL * hi:
            mid = 0.5 * (lo + hi)
            sol = probe(mid)
            if sol is not None:
                lo, feasible_sol = mid, sol
            else:
                hi = mid
        gamma_upper = hi
    if feasible_sol is None:
        zero = FDPrecoder(W=np.zeros((cfg.n_antennas, cfg.n_groups)))
        return MmfDesign(zero, 0.0, gamma_upper, candidate_index=0, sdr=None)

    best_gamma = -np.inf
    best: tuple[int, np.ndarray, list[np.ndarray]] | None = None
    for idx, dirs in enumerate(_candidate_tuples(feasible_sol, n_rand, seed)):
        gains = coupling_gains(channels, dirs)
        alloc, gamma = power_control_mmf(gains, power_budget, sigma2)
        if gamma > best_gamma * (1.0 + TIE_BREAK_MARGIN) or best is None:
            best_gamma = gamma
            best = (idx, alloc.p, dirs)
    assert best is not None  # gamma >= 0 always, so at least index 0 is kept
    idx, p, dirs = best
    precoder = _assemble(dirs, p)
    achieved = min(
        sinr(channels, precoder.W, j, k, sigma2) for j, k, _ in channels.pairs()
    )
    return MmfDesign(
        precoder=precoder,
        min_sinr=float(achieved),
        sdr_gamma_upper=float(gamma_upper),
        candidate_index=idx,
        sdr=feasible_sol,
    )
