"""Semidefinite relaxation of the QoS multicast design problem.

Lifting each group beamformer w_j to X_j = w_j w_j^H and dropping the
rank-one constraint yields

    minimize    sum_j tr(X_j)
    subject to  h_jk^H X_j h_jk - t_jk * sum_{i != j} h_jk^H X_i h_jk
                    >= t_jk * sigma^2            for every UE (j, k),
                X_j PSD,
    optionally  sum_j tr(X_j) <= power_cap.

The conic core is purely real: each complex Hermitian block of size N maps
to a real symmetric block of size 2N through the standard
[[Re, -Im], [Im, Re]] embedding, with constraint matrices and the objective
halved so that real inner products equal their complex counterparts (the
embedding doubles traces).  Solutions map back by averaging the two real
copies, which preserves feasibility and objective exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .sdp import ConicProgram, SdpStatus, solve_conic


@dataclass
class SdrSolution:
    """Per-group PSD matrices plus solver diagnostics."""

    X: list[np.ndarray]
    objective: float
    status: SdpStatus
    primal_residual: float
    dual_residual: float


@dataclass
class QosSdr:
    """Embedded real conic program plus the metadata to interpret it."""

    program: ConicProgram
    n_antennas: int
    n_groups: int
    constraint_pairs: list[tuple[int, int]]
    targets: list[np.ndarray]
    sigma2: float
    power_cap: float | None

    @property
    def n_inequalities(self) -> int:
        return len(self.constraint_pairs) + (1 if self.power_cap is not None else 0)


def hermitian_embed(h: np.ndarray) -> np.ndarray:
    """Real symmetric image [[Re, -Im], [Im, Re]] of a Hermitian matrix."""
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def embed_rank_one(h: np.ndarray) -> np.ndarray:
    """hermitian_embed(h h^H) assembled from two real outer products."""
    hr = np.concatenate([h.real, h.imag])
    hj = np.concatenate([-h.imag, h.real])
    return np.outer(hr, hr) + np.outer(hj, hj)


def real_block_to_hermitian(s: np.ndarray) -> np.ndarray:
    """Map a real symmetric 2N x 2N block back to complex Hermitian N x N.

    Averages the two embedded copies; for a PSD input the output is PSD with
    the same quadratic forms on embedded vectors and half the trace.
    """
    n = s.shape[0] // 2
    p = 0.5 * (s[:n, :n] + s[n:, n:])
    q = 0.5 * (s[n:, :n] - s[:n, n:])
    return 0.5 * (p + p.T) + 0.5j * (q - q.T)


def _broadcast_targets(channels: ChannelSet, targets) -> list[np.ndarray]:
    sizes = channels.config.group_sizes
    if np.isscalar(targets):
        out = [np.full(k, float(targets)) for k in sizes]
    else:
        out = [np.asarray(t, dtype=float).reshape(-1) for t in targets]
        if len(out) != len(sizes) or any(t.size != k for t, k in zip(out, sizes)):
            raise ValueError("targets must match the group sizes")
    for t in out:
        if np.any(t <= 0):
            raise ValueError("SINR targets must be strictly positive")
    return out


def build_qos_sdr(
    channels: ChannelSet,
    targets,
    sigma2: float | None = None,
    power_cap: float | None = None,
) -> QosSdr:
    """Assemble the relaxation for given per-UE SINR targets.

    `targets` is a scalar applied to every UE or a per-group list of per-UE
    arrays.  `power_cap`, when given, adds the total-power inequality used
    by the max-min feasibility probes.
    """
    cfg = channels.config
    if sigma2 is None:
        sigma2 = cfg.noise_power
    if sigma2 <= 0:
        raise ValueError("sigma2 must be > 0")
    tgt = _broadcast_targets(channels, targets)

    n, g = cfg.n_antennas, cfg.n_groups
    d = 2 * n  # embedded block size
    block_len = d * d
    n_ineq = cfg.total_ues + (1 if power_cap is not None else 0)
    dim = g * block_len + n_ineq

    half_eye = 0.5 * np.eye(d)
    c = np.zeros(dim)
    for blk in range(g):
        c[blk * block_len : (blk + 1) * block_len] = half_eye.reshape(-1)

    rows = np.zeros((n_ineq, dim))
    b = np.zeros(n_ineq)
    pairs: list[tuple[int, int]] = []
    slack0 = g * block_len
    row = 0
    for j, group in enumerate(channels.vectors):
        for k, h in enumerate(group):
            outer = 0.5 * embed_rank_one(h)
            t_jk = tgt[j][k]
            for i in range(g):
                coef = outer if i == j else -t_jk * outer
                rows[row, i * block_len : (i + 1) * block_len] = coef.reshape(-1)
            rows[row, slack0 + row] = -1.0
            b[row] = t_jk * sigma2
            pairs.append((j, k))
            row += 1
    if power_cap is not None:
        for i in range(g):
            rows[row, i * block_len : (i + 1) * block_len] = -half_eye.reshape(-1)
        rows[row, slack0 + row] = -1.0
        b[row] = -float(power_cap)

    program = ConicProgram(
        block_dims=tuple([d] * g), n_slack=n_ineq, c=c, A=rows, b=b
    )
    return QosSdr(
        program=program,
        n_antennas=n,
        n_groups=g,
        constraint_pairs=pairs,
        targets=tgt,
        sigma2=float(sigma2),
        power_cap=None if power_cap is None else float(power_cap),
    )


def solve_sdp(problem: QosSdr, **solver_options) -> SdrSolution:
    """Solve the embedded relaxation and map blocks back to Hermitian form."""
    sol = solve_conic(problem.program, **solver_options)
    d = 2 * problem.n_antennas
    x_blocks = []
    for off, _ in problem.program.block_ranges():
        s = sol.x[off : off + d * d].reshape(d, d)
        x_blocks.append(real_block_to_hermitian(s))
    objective = float(sum(np.trace(x).real for x in x_blocks))
    return SdrSolution(
        X=x_blocks,
        objective=objective,
        status=sol.status,
        primal_residual=sol.primal_residual,
        dual_residual=sol.dual_residual,
    )


def psd_sqrt(x: np.ndarray) -> np.ndarray:
    """Hermitian square root with negative eigenvalues clipped to zero."""
    evals, evecs = np.linalg.eigh(0.5 * (x + x.conj().T))
    return (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.conj().T


def principal_direction(x: np.ndarray) -> np.ndarray:
    """Unit-norm principal eigenvector; e_1 for a (numerically) zero matrix."""
    evals, evecs = np.linalg.eigh(0.5 * (x + x.conj().T))
    v = evecs[:, -1]
    if evals[-1] <= 0.0:
        e1 = np.zeros(x.shape[0], dtype=np.complex128)
        e1[0] = 1.0
        return e1
    return v / np.linalg.norm(v)


def gaussian_randomize(
    x_blocks: list[np.ndarray], n_rand: int, seed: int
) -> list[list[np.ndarray]]:
    """Draw n_rand tuples of unit-norm candidate directions, one per group.

    Sample s, group j: w = X_j^{1/2} u with u standard complex Gaussian
    (real then imaginary normals scaled 1/sqrt(2)); w is normalized to unit
    norm.  A zero (or numerically null) draw degenerates to e_1.
    Deterministic in seed via the same Philox generator as the channels.
    """
    if n_rand < 1:
        raise ValueError("n_rand must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    factors = [psd_sqrt(x) for x in x_blocks]
    n = factors[0].shape[0]
    samples: list[list[np.ndarray]] = []
    for _ in range(n_rand):
        tuple_dirs: list[np.ndarray] = []
        for f in factors:
            re = rng.standard_normal(n)
            im = rng.standard_normal(n)
            w = f @ ((re + 1j * im) / np.sqrt(2.0))
            nrm = np.linalg.norm(w)
            if nrm < 1e-150:
                w = np.zeros(n, dtype=np.complex128)
                w[0] = 1.0
                nrm = 1.0
            tuple_dirs.append(w / nrm)
        samples.append(tuple_dirs)
    return samples
