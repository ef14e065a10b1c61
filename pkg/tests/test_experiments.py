import numpy as np
import pytest

import mhp.experiments as experiments
from mhp.evaluation import ResultRecord
from mhp.experiments import (
    CSV_HEADER,
    ExperimentSpec,
    SpecFormatError,
    aggregate_records,
    emit_csv,
    format_report,
    parse_experiment_spec,
    quantization_summary,
    read_csv_records,
    realization_seed,
    run_experiment,
    run_realization,
    splitmix64,
)
from mhp.fd_design import InfeasibleDesignError

SMALL_MMF_SPEC = """
# tiny campaign used by the unit tests
name = unit-mmf
problem = MMF
N = 4
G = 1
K = 2
L = 2
P = 10
bits = 2,inf
n_realizations = 2
n_rand = 8
base_seed = 42
"""

SMALL_QOS_SPEC = """
name = unit-qos
problem = QoS
N = 4
G = 2
K = 1,1
L = 2
gamma = 2.0
bits = inf
n_realizations = 2
n_rand = 8
base_seed = 9
"""


class TestSeedMixing:
    def test_splitmix_reference_values(self):
        # first outputs of the SplitMix64 sequence seeded with 0 and 1
        assert splitmix64(0) == 0xE220A8397B1DCDAF
        assert splitmix64(1) == 0x910A2DEC89025CC1

    def test_realization_seed_determinism_and_spread(self):
        a = realization_seed(42, 8, 0)
        b = realization_seed(42, 8, 0)
        assert a == b
        assert realization_seed(42, 8, 1) != a
        assert realization_seed(42, 16, 0) != a
        assert realization_seed(43, 8, 0) != a
        assert 0 <= a < 2**64


class TestSpecParsing:
    def test_parse_full_spec(self):
        spec = parse_experiment_spec(SMALL_MMF_SPEC)
        assert spec.name == "unit-mmf"
        assert spec.problem == "MMF"
        assert spec.n_list == (4,)
        assert spec.group_sizes == (2,)
        assert spec.power_budget == 10.0
        assert spec.bits_list == (2, None)
        assert spec.n_realizations == 2
        assert spec.base_seed == 42

    def test_defaults(self):
        spec = parse_experiment_spec(
            "name = d\nproblem = MMF\nN = 4\nG = 1\nK = 2\nP = 1\n"
        )
        assert spec.n_paths == 3
        assert spec.n_rand == 100
        assert spec.bits_list == (None,)
        assert spec.family == "primary"

    def test_k_broadcasts_over_groups(self):
        spec = parse_experiment_spec(
            "name = d\nproblem = QoS\nN = 8\nG = 2\nK = 5\ngamma = 2\n"
        )
        assert spec.group_sizes == (5, 5)

    def test_bad_integer_reports_line(self):
        text = "name = d\nproblem = MMF\nN = x\nG = 1\nK = 2\nP = 1\n"
        with pytest.raises(SpecFormatError) as err:
            parse_experiment_spec(text, source="f.spec")
        assert "f.spec:3" in str(err.value)
        assert "'N'" in str(err.value)

    def test_missing_required_field(self):
        with pytest.raises(SpecFormatError) as err:
            parse_experiment_spec("name = d\nproblem = MMF\nN = 4\nG = 1\n")
        assert "'K'" in str(err.value)

    def test_unknown_field_reports_line(self):
        text = SMALL_MMF_SPEC + "wibble = 3\n"
        with pytest.raises(SpecFormatError) as err:
            parse_experiment_spec(text)
        assert "wibble" in str(err.value)

    def test_duplicate_field(self):
        with pytest.raises(SpecFormatError):
            parse_experiment_spec("name = a\nname = b\n")

    def test_missing_equals(self):
        with pytest.raises(SpecFormatError) as err:
            parse_experiment_spec("name = d\nproblem MMF\n")
        assert ":2" in str(err.value)

    def test_mmf_requires_budget(self):
        with pytest.raises(SpecFormatError):
            parse_experiment_spec("name = d\nproblem = MMF\nN = 4\nG = 1\nK = 2\n")

    def test_antennas_must_cover_groups(self):
        with pytest.raises(SpecFormatError):
            parse_experiment_spec(
                "name = d\nproblem = QoS\nN = 1\nG = 2\nK = 1,1\ngamma = 1\n"
            )


@pytest.fixture(scope="module")
def mmf_records():
    spec = parse_experiment_spec(SMALL_MMF_SPEC)
    return spec, run_experiment(spec, workers=1)


class TestRunExperiment:

    def test_record_inventory(self, mmf_records):
        spec, records = mmf_records
        # per realization: FD + Hybrid(inf) + HybridQuantized(min_sinr, ratio)
        assert len(records) == spec.n_realizations * 4
        kinds = {(r.precoder_kind, r.metric_name) for r in records}
        assert kinds == {
            ("FD", "min_sinr"),
            ("Hybrid", "min_sinr"),
            ("HybridQuantized", "min_sinr"),
            ("HybridQuantized", "ratio_to_fd"),
        }

    def test_infinite_resolution_hybrid_matches_fd(self, mmf_records):
        _, records = mmf_records
        fd = {r.seed: r.value for r in records if r.precoder_kind == "FD"}
        hybrid = {r.seed: r.value for r in records if r.precoder_kind == "Hybrid"}
        assert fd.keys() == hybrid.keys()
        for seed, value in fd.items():
            assert hybrid[seed] == pytest.approx(value, rel=1e-9)

    def test_ratio_records_consistent(self, mmf_records):
        _, records = mmf_records
        for seed in {r.seed for r in records}:
            fd = next(
                r.value for r in records
                if r.seed == seed and r.precoder_kind == "FD"
            )
            quant = next(
                r.value for r in records
                if r.seed == seed and r.precoder_kind == "HybridQuantized"
                and r.metric_name == "min_sinr"
            )
            ratio = next(
                r.value for r in records
                if r.seed == seed and r.metric_name == "ratio_to_fd"
            )
            assert ratio == pytest.approx(quant / fd, rel=1e-12)

    def test_deterministic_rerun_and_worker_invariance(self, tmp_path, mmf_records):
        spec, records = mmf_records
        again = run_experiment(spec, workers=2)
        path_a, path_b = tmp_path / "a.csv", tmp_path / "b.csv"
        emit_csv(records, path_a)
        emit_csv(again, path_b)
        assert path_a.read_bytes() == path_b.read_bytes()

    def test_truncated_campaign_is_a_prefix(self, mmf_records):
        spec, records = mmf_records
        import dataclasses
        short_spec = dataclasses.replace(spec, n_realizations=1)
        short = run_experiment(short_spec, workers=1)
        short_seeds = {r.seed for r in short}
        assert short_seeds == {realization_seed(spec.base_seed, 4, 0)}
        subset = [r for r in records if r.seed in short_seeds]
        assert subset == short

    def test_qos_campaign_metrics(self):
        spec = parse_experiment_spec(SMALL_QOS_SPEC)
        records = run_experiment(spec, workers=1)
        assert {r.metric_name for r in records} == {"total_power_watts"}
        fd = [r for r in records if r.precoder_kind == "FD" and not r.infeasible]
        hybrid = [r for r in records if r.precoder_kind == "Hybrid" and not r.infeasible]
        for f, h in zip(fd, hybrid):
            assert h.value == pytest.approx(f.value, rel=1e-9)

    def test_infeasible_realizations_are_flagged(self, monkeypatch):
        def always_infeasible(*args, **kwargs):
            raise InfeasibleDesignError("forced for the test")

        monkeypatch.setattr(experiments, "solve_qos", always_infeasible)
        spec = parse_experiment_spec(SMALL_QOS_SPEC)
        records = [
            rec
            for n in spec.n_list
            for r in range(spec.n_realizations)
            for rec in run_realization(spec, n, r)
        ]
        assert all(r.infeasible for r in records)
        assert all(r.precoder_kind == "FD" for r in records)
        assert all(np.isnan(r.value) for r in records)


class TestCsv:
    def make_record(self, **overrides):
        base = dict(
            experiment_id="t",
            seed=1,
            n_antennas=4,
            n_groups=1,
            total_ues=2,
            n_paths=3,
            bits=None,
            problem="MMF",
            precoder_kind="FD",
            metric_name="min_sinr",
            value=1.25,
            infeasible=False,
        )
        base.update(overrides)
        return ResultRecord(**base)

    def test_empty_records_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        emit_csv([], path)
        assert path.read_text() == CSV_HEADER + "\n"

    def test_single_record_two_lines(self, tmp_path):
        path = tmp_path / "one.csv"
        emit_csv([self.make_record()], path)
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        assert lines[0] == CSV_HEADER
        assert lines[1] == "t,1,4,1,2,3,inf,MMF,FD,min_sinr,1.25,false"

    def test_round_trip(self, tmp_path):
        records = [
            self.make_record(),
            self.make_record(bits=3, precoder_kind="HybridQuantized", value=0.875),
            self.make_record(value=float("nan"), infeasible=True),
        ]
        path = tmp_path / "rt.csv"
        emit_csv(records, path)
        loaded = read_csv_records(path)
        assert len(loaded) == 3
        for orig, back in zip(sorted(records, key=experiments.record_sort_key), loaded):
            if np.isnan(orig.value):
                assert np.isnan(back.value)
            else:
                assert back.value == orig.value
            assert back.bits == orig.bits
            assert back.infeasible == orig.infeasible

    def test_rows_sorted_by_contract(self, tmp_path):
        records = [
            self.make_record(seed=2),
            self.make_record(seed=1, bits=4, precoder_kind="HybridQuantized"),
            self.make_record(seed=1),
            self.make_record(n_antennas=2, seed=9),
        ]
        path = tmp_path / "sorted.csv"
        emit_csv(records, path)
        loaded = read_csv_records(path)
        keys = [experiments.record_sort_key(r) for r in loaded]
        assert keys == sorted(keys)

    def test_values_use_12_significant_digits(self, tmp_path):
        path = tmp_path / "digits.csv"
        emit_csv([self.make_record(value=np.pi)], path)
        assert "3.14159265359" in path.read_text()


class TestReport:
    def test_aggregate_matches_naive_recomputation(self):
        spec = parse_experiment_spec(SMALL_MMF_SPEC)
        records = run_experiment(spec, workers=1)
        rows = aggregate_records(records)
        for row in rows:
            naive = [
                r.value
                for r in records
                if (r.n_antennas, r.precoder_kind, r.bits, r.metric_name)
                == (row.n_antennas, row.precoder_kind, row.bits, row.metric_name)
                and not r.infeasible
            ]
            assert row.n_total >= len(naive)
            assert row.mean == pytest.approx(sum(naive) / len(naive), rel=1e-12)

    def test_quantization_summary_ratio_of_means(self):
        spec = parse_experiment_spec(SMALL_MMF_SPEC)
        records = run_experiment(spec, workers=1)
        summary = quantization_summary(records)
        assert len(summary) == 1  # one (N, bits) cell
        cell = summary[0]
        fd_vals = [r.value for r in records if r.precoder_kind == "FD"]
        q_vals = [
            r.value
            for r in records
            if r.precoder_kind == "HybridQuantized" and r.metric_name == "min_sinr"
        ]
        expected = (sum(q_vals) / len(q_vals)) / (sum(fd_vals) / len(fd_vals))
        assert cell["ratio_of_means"] == pytest.approx(expected, rel=1e-12)
        assert cell["bits"] == 2

    def test_format_report_runs(self):
        spec = parse_experiment_spec(SMALL_MMF_SPEC)
        records = run_experiment(spec, workers=1)
        text = format_report(records)
        assert "ratio_of_means" in text
        assert "FD" in text


class TestWorkers:
    def test_env_variable_caps_workers(self, monkeypatch):
        monkeypatch.setenv("MHP_THREADS", "3")
        assert experiments.default_workers() == 3

    def test_env_variable_must_be_positive(self, monkeypatch):
        monkeypatch.setenv("MHP_THREADS", "0")
        with pytest.raises(ValueError):
            experiments.default_workers()

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            ExperimentSpec(
                name="x", problem="MMF", n_list=(4,), group_sizes=(1,),
                power_budget=1.0, n_realizations=0,
            )
