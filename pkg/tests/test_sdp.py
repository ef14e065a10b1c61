import numpy as np
import pytest

from mhp.channel import ChannelSet, SystemConfig
from mhp.sdp import SdpStatus
from mhp.sdr import (
    build_qos_sdr,
    embed_rank_one,
    hermitian_embed,
    real_block_to_hermitian,
    solve_sdp,
)


def channel_set_from_vectors(vectors, noise_power=1.0):
    """Wrap explicit per-group lists of channel vectors."""
    n = len(vectors[0][0])
    cfg = SystemConfig(
        n_antennas=n,
        group_sizes=tuple(len(g) for g in vectors),
        n_paths=1,
        noise_power=noise_power,
    )
    return ChannelSet(
        config=cfg,
        seed=0,
        vectors=[[np.asarray(h, dtype=np.complex128) for h in g] for g in vectors],
    )


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (a + a.conj().T)


class TestEmbedding:
    def test_embed_round_trip(self):
        rng = np.random.default_rng(0)
        x = random_hermitian(rng, 4)
        s = hermitian_embed(x)
        assert np.allclose(real_block_to_hermitian(s), x, atol=1e-14)
        assert np.trace(s) == pytest.approx(2 * np.trace(x).real)

    def test_embed_rank_one_matches_dense_embedding(self):
        rng = np.random.default_rng(1)
        h = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        np.testing.assert_allclose(
            embed_rank_one(h), hermitian_embed(np.outer(h, h.conj())), atol=1e-12
        )

    def test_quadratic_forms_preserved(self):
        rng = np.random.default_rng(2)
        x = random_hermitian(rng, 3)
        h = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        complex_form = (h.conj() @ x @ h).real
        real_form = 0.5 * np.sum(embed_rank_one(h) * hermitian_embed(x))
        assert real_form == pytest.approx(complex_form, rel=1e-12, abs=1e-12)


class TestProblemConstruction:
    def test_block_and_inequality_counts(self):
        rng = np.random.default_rng(3)
        vectors = [
            [rng.standard_normal(4) + 1j * rng.standard_normal(4) for _ in range(3)],
            [rng.standard_normal(4) + 1j * rng.standard_normal(4) for _ in range(4)],
        ]
        problem = build_qos_sdr(channel_set_from_vectors(vectors), 2.0)
        assert len(problem.program.block_dims) == 2
        assert problem.program.block_dims == (8, 8)
        assert problem.n_inequalities == 7
        assert problem.program.n_slack == 7
        assert len(problem.constraint_pairs) == 7

    def test_power_cap_adds_one_inequality(self):
        rng = np.random.default_rng(4)
        vectors = [[rng.standard_normal(2) + 1j * rng.standard_normal(2)]]
        problem = build_qos_sdr(channel_set_from_vectors(vectors), 1.0, power_cap=5.0)
        assert problem.n_inequalities == 2

    def test_constraint_rows_match_direct_sinr_expansion(self):
        # oracle: evaluate each embedded row against independently computed
        # h^H X_j h - t * sum_{i != j} h^H X_i h on random Hermitian blocks
        rng = np.random.default_rng(5)
        n = 3
        vectors = [
            [rng.standard_normal(n) + 1j * rng.standard_normal(n) for _ in range(2)],
            [rng.standard_normal(n) + 1j * rng.standard_normal(n)],
        ]
        channels = channel_set_from_vectors(vectors)
        targets = [np.array([1.5, 2.5]), np.array([3.5])]
        problem = build_qos_sdr(channels, targets, sigma2=1.0)

        blocks = [random_hermitian(rng, n) for _ in range(2)]
        x = np.zeros(problem.program.dim)
        block_len = (2 * n) ** 2
        for i, blk in enumerate(blocks):
            x[i * block_len : (i + 1) * block_len] = hermitian_embed(blk).reshape(-1)

        row_values = problem.program.A @ x
        for row, (j, k) in enumerate(problem.constraint_pairs):
            h = channels.vector(j, k)
            t = targets[j][k]
            direct = (h.conj() @ blocks[j] @ h).real
            for i in range(2):
                if i != j:
                    direct -= t * (h.conj() @ blocks[i] @ h).real
            assert row_values[row] == pytest.approx(direct, rel=1e-12, abs=1e-12)

    def test_rejects_nonpositive_targets(self):
        vectors = [[np.array([1.0 + 0j])]]
        with pytest.raises(ValueError):
            build_qos_sdr(channel_set_from_vectors(vectors), 0.0)


class TestSolver:
    def test_scalar_qos_sdp(self):
        # N=1, G=1, K=1, h=1, t=4: min x s.t. x >= 4, x >= 0
        channels = channel_set_from_vectors([[np.array([1.0 + 0j])]])
        sol = solve_sdp(build_qos_sdr(channels, 4.0))
        assert sol.status is SdpStatus.OPTIMAL
        assert sol.objective == pytest.approx(4.0, abs=1e-6)
        assert sol.X[0][0, 0].real == pytest.approx(4.0, abs=1e-6)
        assert sol.primal_residual <= 1e-7
        assert sol.dual_residual <= 1e-7

    def test_single_group_single_ue_closed_form(self):
        # optimum X = (t s2 / ||h||^2) * h h^H / ||h||^2, objective t s2/||h||^2
        rng = np.random.default_rng(6)
        gamma, sigma2 = 3.0, 1.0
        for trial in range(20):
            n = int(rng.integers(1, 6))
            h = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            channels = channel_set_from_vectors([[h]])
            sol = solve_sdp(build_qos_sdr(channels, gamma, sigma2))
            assert sol.status is SdpStatus.OPTIMAL
            norm2 = np.linalg.norm(h) ** 2
            expected_obj = gamma * sigma2 / norm2
            assert sol.objective == pytest.approx(expected_obj, rel=1e-6, abs=1e-6)
            expected_x = (gamma * sigma2 / norm2) * np.outer(h, h.conj()) / norm2
            assert np.linalg.norm(sol.X[0] - expected_x) <= 1e-5 * max(1.0, expected_obj)

    def test_solution_blocks_are_hermitian_psd(self):
        rng = np.random.default_rng(7)
        vectors = [
            [rng.standard_normal(4) + 1j * rng.standard_normal(4) for _ in range(2)],
            [rng.standard_normal(4) + 1j * rng.standard_normal(4) for _ in range(2)],
        ]
        sol = solve_sdp(build_qos_sdr(channel_set_from_vectors(vectors), 2.0))
        assert sol.status is SdpStatus.OPTIMAL
        for x in sol.X:
            assert np.linalg.norm(x - x.conj().T) <= 1e-10
            evals = np.linalg.eigvalsh(x)
            assert evals.min() >= -1e-8 * max(1.0, np.trace(x).real)

    def test_rank_one_tightness_single_ue(self):
        rng = np.random.default_rng(8)
        h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        sol = solve_sdp(build_qos_sdr(channel_set_from_vectors([[h]]), 5.0))
        evals = np.sort(np.linalg.eigvalsh(sol.X[0]))[::-1]
        assert evals[1] / evals[0] <= 1e-6

    def test_feasible_solution_meets_constraints(self):
        rng = np.random.default_rng(9)
        vectors = [
            [rng.standard_normal(3) + 1j * rng.standard_normal(3) for _ in range(2)]
        ]
        channels = channel_set_from_vectors(vectors)
        gamma, sigma2 = 2.0, 1.0
        sol = solve_sdp(build_qos_sdr(channels, gamma, sigma2))
        assert sol.status is SdpStatus.OPTIMAL
        for _, _, h in channels.pairs():
            value = (h.conj() @ sol.X[0] @ h).real
            assert value >= gamma * sigma2 * (1 - 1e-6)

    def test_infeasible_by_power_cap(self):
        # SINR target above the single-UE bound P ||h||^2 / sigma^2 cannot be
        # met inside the power cap: Farkas certificate must be found
        channels = channel_set_from_vectors([[np.array([1.0 + 0j])]])
        problem = build_qos_sdr(channels, 20.0, sigma2=1.0, power_cap=10.0)
        sol = solve_sdp(problem)
        assert sol.status is SdpStatus.INFEASIBLE

    def test_feasible_with_loose_power_cap(self):
        channels = channel_set_from_vectors([[np.array([1.0 + 0j])]])
        problem = build_qos_sdr(channels, 4.0, sigma2=1.0, power_cap=10.0)
        sol = solve_sdp(problem)
        assert sol.status is SdpStatus.OPTIMAL
        assert sol.objective == pytest.approx(4.0, abs=1e-6)

    def test_max_iterations_status(self):
        channels = channel_set_from_vectors([[np.array([1.0 + 0j])]])
        sol = solve_sdp(build_qos_sdr(channels, 4.0), max_iter=3)
        assert sol.status is SdpStatus.MAX_ITERATIONS

    def test_iteration_log_stream(self):
        rng = np.random.default_rng(10)
        h = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        lines = []
        solve_sdp(build_qos_sdr(channel_set_from_vectors([[h]]), 5.0), log=lines.append)
        # lines appear only every 250 iterations; small problems may finish first
        for line in lines:
            parts = line.split(",")
            assert len(parts) == 4
            int(parts[0])
            float(parts[1]), float(parts[2]), float(parts[3])
