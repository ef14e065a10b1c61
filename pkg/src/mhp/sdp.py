"""First-order solver for small block-diagonal semidefinite programs.

Standard form handled here:

    minimize    <c, x>
    subject to  A x = b,   x in K,

where x concatenates row-flattened symmetric matrix blocks followed by a
bank of slack variables, and K is the product of the matching PSD cones and
the nonnegative orthant.  Inequalities enter as equalities with slacks.

The method is ADMM on the splitting  f(x) = <c,x> + I{Ax=b},  g(z) = I_K(z):
the x-update projects onto the affine set through a cached Cholesky factor
of A A^T, the z-update projects onto K through per-block eigendecompositions
with negative eigenvalues clipped, and the scaled dual variable accumulates
the gap.  Over-relaxation and adaptive penalty keep convergence brisk at the
problem sizes this package targets (blocks up to a few hundred rows).

Primal infeasibility is declared only on a numerically verified Farkas
certificate: a direction y with -A^T y in K* (distance checked against the
cone) and b^T y bounded away from zero.  Candidate directions come from the
affine-projection multipliers, whose (differences of) iterates align with a
certificate when the problem is infeasible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve


class SdpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITERATIONS = "max_iterations"


@dataclass
class ConicProgram:
    """min <c,x> s.t. Ax = b, x in (PSD blocks) x (nonnegative slacks)."""

    block_dims: tuple[int, ...]
    n_slack: int
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        dim = sum(d * d for d in self.block_dims) + self.n_slack
        if self.c.shape != (dim,):
            raise ValueError(f"c has size {self.c.size}, expected {dim}")
        if self.A.shape != (self.b.size, dim):
            raise ValueError(
                f"A has shape {self.A.shape}, expected ({self.b.size}, {dim})"
            )
        if self.b.size < 1:
            raise ValueError("at least one constraint is required")

    @property
    def dim(self) -> int:
        return self.c.size

    @property
    def n_constraints(self) -> int:
        return self.b.size

    def block_ranges(self):
        off = 0
        for d in self.block_dims:
            yield off, d
            off += d * d

    def slack_offset(self) -> int:
        return sum(d * d for d in self.block_dims)


@dataclass
class ConicSolution:
    x: np.ndarray  # cone-feasible iterate (the reported solution)
    y: np.ndarray  # multipliers of Ax = b
    status: SdpStatus
    objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int


def _project_cone_inplace(prog: ConicProgram, w: np.ndarray) -> np.ndarray:
    for off, d in prog.block_ranges():
        blk = w[off : off + d * d].reshape(d, d)
        blk = 0.5 * (blk + blk.T)
        evals, evecs = np.linalg.eigh(blk)
        if evals[0] >= 0.0:
            w[off : off + d * d] = blk.reshape(-1)
            continue
        pos = evals > 0.0
        if not np.any(pos):
            w[off : off + d * d] = 0.0
            continue
        proj = (evecs[:, pos] * evals[pos]) @ evecs[:, pos].T
        w[off : off + d * d] = proj.reshape(-1)
    off = prog.slack_offset()
    np.maximum(w[off:], 0.0, out=w[off:])
    return w


def project_cone(prog: ConicProgram, v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto K (PSD blocks, nonnegative slacks)."""
    return _project_cone_inplace(prog, v.copy())


def cone_distance(prog: ConicProgram, v: np.ndarray) -> float:
    return float(np.linalg.norm(v - project_cone(prog, v)))


def _farkas_certified(prog, A, b, candidates) -> bool:
    """True if any candidate verifies primal infeasibility: -A^T y in K*,
    b^T y > 0 with documented margins.  K is self-dual here."""
    for y in candidates:
        norm = np.linalg.norm(y)
        if norm == 0.0 or not np.all(np.isfinite(y)):
            continue
        y = y / norm
        support = float(b @ y)
        if support < 1e-6 * (1.0 + np.linalg.norm(b)):
            continue
        lam = -(A.T @ y)
        if cone_distance(prog, lam) <= 1e-8 * max(1.0, np.linalg.norm(lam)):
            return True
    return False


def solve_conic(
    prog: ConicProgram,
    rel_tol: float = 1e-7,
    gap_tol: float = 1e-6,
    max_iter: int = 50_000,
    rho: float = 1.0,
    over_relax: float = 1.6,
    check_every: int = 10,
    infeas_check_every: int = 250,
    log=None,
) -> ConicSolution:
    """Run ADMM until optimality, a verified infeasibility certificate, or
    the iteration cap.

    Optimality requires relative primal and dual residuals <= rel_tol and a
    relative primal-dual gap <= gap_tol, evaluated every `check_every`
    iterations.  `log`, if given, receives one text line
    "iter,primal_res,dual_res,objective" per 250 iterations.
    """
    m, dim = prog.A.shape
    row_norms = np.linalg.norm(prog.A, axis=1)
    row_norms[row_norms == 0.0] = 1.0
    A = prog.A / row_norms[:, None]
    b = prog.b / row_norms
    c = prog.c

    AAt = A @ A.T
    factor = cho_factor(AAt + 1e-12 * np.eye(m), lower=True)

    x = np.zeros(dim)
    z = np.zeros(dim)
    u = np.zeros(dim)
    mu = np.zeros(m)
    mu_checkpoint = np.zeros(m)
    c_over_rho = c / rho
    status = SdpStatus.MAX_ITERATIONS
    r_rel = s_rel = gap = np.inf
    it = 0

    for it in range(1, max_iter + 1):
        v = z - u - c_over_rho
        mu = cho_solve(factor, b - A @ v)
        x = v + A.T @ mu
        x_relaxed = over_relax * x + (1.0 - over_relax) * z
        z_prev = z
        z = _project_cone_inplace(prog, x_relaxed + u)
        u = u + x_relaxed - z

        if it % check_every != 0 and it != max_iter:
            continue

        r_norm = np.linalg.norm(x - z)
        s_norm = rho * np.linalg.norm(z - z_prev)
        r_rel = r_norm / max(1.0, np.linalg.norm(x), np.linalg.norm(z))
        s_rel = s_norm / max(1.0, rho * np.linalg.norm(u))
        y = rho * mu
        p_obj = float(c @ z)
        d_obj = float(b @ y)
        gap = abs(p_obj - d_obj) / (1.0 + abs(p_obj) + abs(d_obj))

        if log is not None and it % 250 == 0:
            log(f"{it},{r_rel:.3e},{s_rel:.3e},{p_obj:.9e}")

        if r_rel <= rel_tol and s_rel <= rel_tol and gap <= gap_tol:
            status = SdpStatus.OPTIMAL
            break

        if it % infeas_check_every == 0:
            delta = mu - mu_checkpoint
            mu_checkpoint = mu.copy()
            if _farkas_certified(prog, A, b, (delta, -delta, mu, -mu)):
                status = SdpStatus.INFEASIBLE
                break

        if it % 100 == 0:
            # adaptive penalty; the scaled dual must shrink/grow inversely
            if r_rel > 10.0 * s_rel and rho < 1e6:
                rho *= 2.0
                u *= 0.5
                c_over_rho = c / rho
            elif s_rel > 10.0 * r_rel and rho > 1e-6:
                rho *= 0.5
                u *= 2.0
                c_over_rho = c / rho

    y_out = rho * mu / row_norms
    return ConicSolution(
        x=z,
        y=y_out,
        status=status,
        objective=float(c @ z),
        primal_residual=float(r_rel),
        dual_residual=float(s_rel),
        gap=float(gap),
        iterations=it,
    )
