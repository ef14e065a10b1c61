"""Exact factorization of a fully-digital precoder into phase shifters.

Any complex N x G precoder splits into an analog stage built from two banks
of constant-modulus phase shifters (two shifters per antenna per RF chain)
and a digital stage, using min(rank, G) RF chains:

* full-rank path: each column j gets a positive gain rho_j and per-antenna
  phase pairs such that rho_j * (e^{i phi} + e^{i phi'}) reproduces the
  column entry exactly; the digital stage is diag(rho).
* rank-deficient path: factor W = A @ B through a thin SVD, run the
  full-rank construction on A, and fold B into the digital stage.

Both constructions are closed-form and deterministic; reconstruction is
exact up to floating-point rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

TWO_PI = 2.0 * np.pi

FAMILIES = ("primary", "alternate")
RHO_MODES = ("per_group", "uniform")


class PhaseInfeasibleError(ValueError):
    """Requested magnitude exceeds what two unit shifters can produce."""


def wrap_phase(angles):
    """Map angles into [0, 2*pi); np.mod alone can round up to 2*pi."""
    wrapped = np.mod(angles, TWO_PI)
    return np.where(wrapped >= TWO_PI, 0.0, wrapped)


@dataclass
class HybridPrecoder:
    """Two phase-shifter banks plus a digital stage.

    phases_a and phases_b are N x n_rf angle matrices in [0, 2*pi); the
    analog matrix is exp(i*phases_a) + exp(i*phases_b).  digital is the
    complex n_rf x G baseband matrix (diagonal on the full-rank path).
    """

    phases_a: np.ndarray
    phases_b: np.ndarray
    digital: np.ndarray
    n_rf: int
    family: str = "primary"
    bits: int | None = None

    def __post_init__(self):
        if self.phases_a.shape != self.phases_b.shape:
            raise ValueError("phase banks must have identical shapes")
        if self.phases_a.shape[1] != self.n_rf or self.digital.shape[0] != self.n_rf:
            raise ValueError("n_rf inconsistent with phase/digital shapes")

    @property
    def n_antennas(self) -> int:
        return self.phases_a.shape[0]

    @property
    def n_groups(self) -> int:
        return self.digital.shape[1]

    @property
    def n_phase_shifters(self) -> int:
        return 2 * self.phases_a.size

    def analog(self) -> np.ndarray:
        return np.exp(1j * self.phases_a) + np.exp(1j * self.phases_b)


def digital_gains(w: np.ndarray) -> np.ndarray:
    """Per-column gains rho_j = max_n |w_nj| / 2 (zero for a zero column)."""
    w = np.asarray(w)
    if w.ndim == 1:
        w = w[:, None]
    return 0.5 * np.max(np.abs(w), axis=0)


def phase_solution(alpha, theta, rho, family: str = "primary"):
    """Phase pair (phi, phi') with rho*(e^{i phi} + e^{i phi'}) = alpha*e^{i theta}.

    Accepts scalars or broadcastable arrays.  Requires rho > 0 and
    alpha <= 2*rho (up to a relative 1e-12 rounding guard; beyond that the
    two-shifter sum cannot reach the magnitude and an error is raised).
    The primary family places phi above theta; alternate swaps the signs.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}, expected one of {FAMILIES}")
    alpha = np.asarray(alpha, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    if np.any(rho <= 0):
        raise PhaseInfeasibleError("rho must be strictly positive")
    ratio = alpha / (2.0 * rho)
    if np.any(ratio > 1.0 + 1e-12):
        raise PhaseInfeasibleError(
            f"magnitude {np.max(alpha):g} exceeds shifter budget 2*rho={np.max(2 * rho):g}"
        )
    delta = np.arccos(np.clip(ratio, 0.0, 1.0))
    if family == "primary":
        phi, phi_p = theta + delta, theta - delta
    else:
        phi, phi_p = theta - delta, theta + delta
    return wrap_phase(phi), wrap_phase(phi_p)


def numerical_rank(w: np.ndarray) -> int:
    """Singular values above max(N, G) * eps * sigma_max count toward rank."""
    s = np.linalg.svd(w, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    tol = max(w.shape) * np.finfo(w.dtype).eps * s[0]
    return int(np.sum(s > tol))


def _decompose_full_rank(w: np.ndarray, family: str, rho_mode: str) -> HybridPrecoder:
    n, g = w.shape
    alpha = np.abs(w)
    theta = np.angle(w)  # angle(0) = 0, the documented zero-entry convention
    rho = digital_gains(w)
    if rho_mode == "uniform":
        rho = np.full(g, np.max(rho))
    phases_a = np.empty((n, g))
    phases_b = np.empty((n, g))
    for j in range(g):
        if rho[j] == 0.0:
            # all-zero column: shifters cancel pairwise, unit digital gain
            rho[j] = 1.0
            phases_a[:, j] = 0.0
            phases_b[:, j] = np.pi
            continue
        phases_a[:, j], phases_b[:, j] = phase_solution(
            alpha[:, j], theta[:, j], rho[j], family
        )
    return HybridPrecoder(
        phases_a=phases_a,
        phases_b=phases_b,
        digital=np.diag(rho).astype(np.complex128),
        n_rf=g,
        family=family,
    )


def decompose(
    w,
    family: str = "primary",
    rho_mode: str = "per_group",
) -> HybridPrecoder:
    """Factor a fully-digital precoder into an exact hybrid precoder.

    Uses min(numerical rank, G) RF chains; reconstruct() reproduces the
    input within ~1e-10 relative Frobenius error.
    """
    if rho_mode not in RHO_MODES:
        raise ValueError(f"unknown rho_mode {rho_mode!r}, expected one of {RHO_MODES}")
    w = np.atleast_2d(np.asarray(w, dtype=np.complex128))
    if w.ndim != 2:
        raise ValueError("precoder must be a 2-D matrix")
    rank = numerical_rank(w)
    if rank < w.shape[1]:
        return decompose_rank_deficient(w, family=family, rho_mode=rho_mode, rank=rank)
    return _decompose_full_rank(w, family, rho_mode)


def decompose_rank_deficient(
    w,
    family: str = "primary",
    rho_mode: str = "per_group",
    rank: int | None = None,
) -> HybridPrecoder:
    """Hybrid factorization of a rank-deficient precoder with rank < G chains.

    Splits W = A @ B via the thin SVD (A = U_r * S_r, B = V_r^H), builds the
    analog stage for the full-column-rank A, and absorbs B into the digital
    stage.  A zero matrix degenerates to one RF chain with a zero digital
    stage.
    """
    w = np.atleast_2d(np.asarray(w, dtype=np.complex128))
    n, g = w.shape
    if rank is None:
        rank = numerical_rank(w)
    if rank == 0:
        return HybridPrecoder(
            phases_a=np.zeros((n, 1)),
            phases_b=np.full((n, 1), np.pi),
            digital=np.zeros((1, g), dtype=np.complex128),
            n_rf=1,
            family=family,
        )
    u, s, vh = np.linalg.svd(w, full_matrices=False)
    a = u[:, :rank] * s[:rank]
    b = vh[:rank, :]
    inner = _decompose_full_rank(a, family, rho_mode)
    return HybridPrecoder(
        phases_a=inner.phases_a,
        phases_b=inner.phases_b,
        digital=inner.digital @ b,
        n_rf=rank,
        family=family,
    )


def reconstruct(hybrid: HybridPrecoder) -> np.ndarray:
    """Product of the analog shifter matrix and the digital stage."""
    return hybrid.analog() @ hybrid.digital


def quantize_phases(hybrid: HybridPrecoder, bits: int) -> HybridPrecoder:
    """Snap every phase to the nearest of the 2**bits uniform grid points.

    The grid is {2*pi*k / 2**bits}; circular distance to the chosen point is
    at most pi / 2**bits.  The digital stage is untouched.
    """
    if bits < 1:
        raise ValueError(f"bits must be >= 1, got {bits}")
    levels = 2**bits
    step = TWO_PI / levels

    def snap(phases: np.ndarray) -> np.ndarray:
        return np.mod(np.round(np.mod(phases, TWO_PI) / step), levels) * step

    return replace(
        hybrid,
        phases_a=snap(hybrid.phases_a),
        phases_b=snap(hybrid.phases_b),
        bits=bits,
    )


def stage_powers(hybrid: HybridPrecoder) -> dict[str, float]:
    """Debug surface: squared Frobenius norms of each stage and the product."""
    analog = hybrid.analog()
    return {
        "analog_power": float(np.linalg.norm(analog) ** 2),
        "digital_power": float(np.linalg.norm(hybrid.digital) ** 2),
        "reconstructed_power": float(np.linalg.norm(analog @ hybrid.digital) ** 2),
    }
