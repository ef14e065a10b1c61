"""Monte Carlo experiment orchestration.

An experiment sweeps antenna counts and channel realizations for one design
problem, decomposes each fully-digital solution into its hybrid form, scores
every requested phase-shifter resolution, and emits one flat CSV.

Seeding: realization r at antenna count N uses a SplitMix64-mixed seed
    seed(N, r) = mix(mix(mix(base_seed) ^ N) ^ r)
so truncating or extending the realization count never changes earlier
realizations.  The randomization stage inside the design uses
mix(seed ^ RANDOMIZATION_SALT).  Records are merged in sorted order, so
identical specs reproduce byte-identical CSV files regardless of the worker
count (capped by the MHP_THREADS environment variable).
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import SystemConfig, generate_channels
from .evaluation import ResultRecord, min_sinr, performance_ratio, total_power
from .fd_design import DesignError, solve_mmf, solve_qos
from .hybrid import decompose, quantize_phases, reconstruct

MASK64 = (1 << 64) - 1
RANDOMIZATION_SALT = 0xD1B54A32D192ED03

CSV_HEADER = (
    "experiment_id,seed,N,G,total_K,L,bits,problem,precoder_kind,"
    "metric_name,value,infeasible"
)


def splitmix64(x: int) -> int:
    """One SplitMix64 avalanche step (Steele et al. constants)."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & MASK64
    x ^= x >> 31
    return x


def realization_seed(base_seed: int, n_antennas: int, realization: int) -> int:
    """Channel seed for realization r at antenna count N."""
    h = splitmix64(base_seed & MASK64)
    h = splitmix64(h ^ (n_antennas & MASK64))
    return splitmix64(h ^ (realization & MASK64))


def randomization_seed(channel_seed: int) -> int:
    return splitmix64(channel_seed ^ RANDOMIZATION_SALT)


@dataclass
class ExperimentSpec:
    """Declarative description of one Monte Carlo campaign."""

    name: str
    problem: str  # "QoS" or "MMF"
    n_list: tuple[int, ...]
    group_sizes: tuple[int, ...]
    n_paths: int = 3
    power_budget: float | None = None  # MMF
    sinr_target: float | None = None  # QoS
    bits_list: tuple[int | None, ...] = (None,)
    n_realizations: int = 100
    n_rand: int = 100
    base_seed: int = 0
    family: str = "primary"
    rho_mode: str = "per_group"
    spacing_ratio: float = 0.5
    noise_power: float = 1.0

    def __post_init__(self):
        if self.problem not in ("QoS", "MMF"):
            raise ValueError(f"problem must be 'QoS' or 'MMF', got {self.problem!r}")
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")
        if self.n_rand < 1:
            raise ValueError("n_rand must be >= 1")
        g = len(self.group_sizes)
        if any(n < g for n in self.n_list):
            raise ValueError("every antenna count must be >= the group count")
        if self.problem == "MMF" and (self.power_budget is None or self.power_budget <= 0):
            raise ValueError("MMF experiments need a positive power budget P")
        if self.problem == "QoS" and (self.sinr_target is None or self.sinr_target <= 0):
            raise ValueError("QoS experiments need a positive SINR target gamma")
        if any(b is not None and b < 1 for b in self.bits_list):
            raise ValueError("finite bit depths must be >= 1")


class SpecFormatError(ValueError):
    """Raised with file/line context when an experiment file is malformed."""

    def __init__(self, source: str, line_no: int, message: str):
        super().__init__(f"{source}:{line_no}: {message}")
        self.source = source
        self.line_no = line_no


_REQUIRED_FIELDS = ("name", "problem", "N", "G", "K")


def parse_experiment_spec(text: str, source: str = "<spec>") -> ExperimentSpec:
    """Parse the flat `key = value` experiment format.

    Lists are comma separated; the bits list accepts `inf` for infinite
    resolution.  Unknown keys, bad types, and missing required fields raise
    SpecFormatError with a line diagnostic.
    """
    fields: dict[str, str] = {}
    lines: dict[str, int] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecFormatError(source, line_no, "expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise SpecFormatError(source, line_no, "expected 'key = value'")
        if key in fields:
            raise SpecFormatError(source, line_no, f"duplicate field {key!r}")
        fields[key] = value
        lines[key] = line_no

    def fail(key: str, message: str):
        raise SpecFormatError(source, lines.get(key, 0), f"field {key!r}: {message}")

    def parse_int(key: str, value: str) -> int:
        try:
            return int(value)
        except ValueError:
            fail(key, f"expected an integer, got {value!r}")

    def parse_float(key: str, value: str) -> float:
        try:
            return float(value)
        except ValueError:
            fail(key, f"expected a number, got {value!r}")

    for required in _REQUIRED_FIELDS:
        if required not in fields:
            raise SpecFormatError(source, 0, f"missing required field {required!r}")

    problem = fields["problem"]
    if problem.lower() == "qos":
        problem = "QoS"
    elif problem.lower() == "mmf":
        problem = "MMF"

    n_list = tuple(parse_int("N", v) for v in fields["N"].split(","))
    g = parse_int("G", fields["G"])
    group_sizes = tuple(parse_int("K", v) for v in fields["K"].split(","))
    if len(group_sizes) == 1 and g > 1:
        group_sizes = group_sizes * g
    if len(group_sizes) != g:
        fail("K", f"expected {g} group sizes, got {len(group_sizes)}")

    bits_list: tuple[int | None, ...] = (None,)
    if "bits" in fields:
        parsed: list[int | None] = []
        for item in fields["bits"].split(","):
            item = item.strip()
            parsed.append(None if item == "inf" else parse_int("bits", item))
        bits_list = tuple(parsed)

    known = {
        "name", "problem", "N", "G", "K", "L", "P", "gamma", "bits",
        "n_realizations", "n_rand", "base_seed", "family", "rho_mode",
        "spacing", "noise",
    }
    for key in fields:
        if key not in known:
            raise SpecFormatError(source, lines[key], f"unknown field {key!r}")

    try:
        return ExperimentSpec(
            name=fields["name"],
            problem=problem,
            n_list=n_list,
            group_sizes=group_sizes,
            n_paths=parse_int("L", fields.get("L", "3")),
            power_budget=parse_float("P", fields["P"]) if "P" in fields else None,
            sinr_target=parse_float("gamma", fields["gamma"]) if "gamma" in fields else None,
            bits_list=bits_list,
            n_realizations=parse_int("n_realizations", fields.get("n_realizations", "100")),
            n_rand=parse_int("n_rand", fields.get("n_rand", "100")),
            base_seed=parse_int("base_seed", fields.get("base_seed", "0")),
            family=fields.get("family", "primary"),
            rho_mode=fields.get("rho_mode", "per_group"),
            spacing_ratio=parse_float("spacing", fields.get("spacing", "0.5")),
            noise_power=parse_float("noise", fields.get("noise", "1.0")),
        )
    except ValueError as exc:
        raise SpecFormatError(source, 0, str(exc)) from None


def load_experiment_spec(path) -> ExperimentSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_experiment_spec(fh.read(), source=str(path))


def _bits_sort_key(bits: int | None) -> float:
    return np.inf if bits is None else float(bits)


def record_sort_key(rec: ResultRecord):
    return (
        rec.n_antennas,
        rec.seed,
        rec.precoder_kind,
        _bits_sort_key(rec.bits),
        rec.metric_name,
    )


def run_realization(spec: ExperimentSpec, n_antennas: int, realization: int) -> list[ResultRecord]:
    """All records of one (N, r) cell; pure function of its arguments."""
    seed = realization_seed(spec.base_seed, n_antennas, realization)
    cfg = SystemConfig(
        n_antennas=n_antennas,
        group_sizes=spec.group_sizes,
        n_paths=spec.n_paths,
        spacing_ratio=spec.spacing_ratio,
        noise_power=spec.noise_power,
    )
    channels = generate_channels(cfg, seed)
    base = dict(
        experiment_id=spec.name,
        seed=seed,
        n_antennas=n_antennas,
        n_groups=cfg.n_groups,
        total_ues=cfg.total_ues,
        n_paths=cfg.n_paths,
        problem=spec.problem,
    )
    fd_metric = "min_sinr" if spec.problem == "MMF" else "total_power_watts"

    try:
        if spec.problem == "MMF":
            design = solve_mmf(
                channels,
                spec.power_budget,
                n_rand=spec.n_rand,
                seed=randomization_seed(seed),
            )
            fd_value = design.min_sinr
        else:
            design = solve_qos(
                channels,
                spec.sinr_target,
                n_rand=spec.n_rand,
                seed=randomization_seed(seed),
            )
            fd_value = design.total_power
    except DesignError:
        return [
            ResultRecord(
                **base, bits=None, precoder_kind="FD", metric_name=fd_metric,
                value=float("nan"), infeasible=True,
            )
        ]

    w_fd = design.precoder.W
    records = [
        ResultRecord(
            **base, bits=None, precoder_kind="FD", metric_name=fd_metric,
            value=float(fd_value),
        )
    ]
    hybrid = decompose(w_fd, family=spec.family, rho_mode=spec.rho_mode)
    fd_norm = float(np.linalg.norm(w_fd))
    for bits in spec.bits_list:
        if bits is None:
            w_eval = reconstruct(hybrid)
            kind = "Hybrid"
        else:
            w_eval = reconstruct(quantize_phases(hybrid, bits))
            kind = "HybridQuantized"
            # a real deployment would retune the digital gains to the power
            # budget, so quantized precoders are rescaled to the FD power
            nrm = float(np.linalg.norm(w_eval))
            if nrm > 0.0 and fd_norm > 0.0:
                w_eval = w_eval * (fd_norm / nrm)
        if spec.problem == "MMF":
            value = min_sinr(channels, w_eval)
        else:
            value = total_power(w_eval)
        records.append(
            ResultRecord(
                **base, bits=bits, precoder_kind=kind, metric_name=fd_metric,
                value=float(value),
            )
        )
        if bits is not None and spec.problem == "MMF":
            if fd_value > 0.0:
                ratio_value, flagged = performance_ratio(value, fd_value), False
            else:
                ratio_value, flagged = float("nan"), True
            records.append(
                ResultRecord(
                    **base, bits=bits, precoder_kind=kind,
                    metric_name="ratio_to_fd", value=ratio_value,
                    infeasible=flagged,
                )
            )
    return records


def _worker(args) -> list[ResultRecord]:
    spec, n_antennas, realization = args
    return run_realization(spec, n_antennas, realization)


def default_workers() -> int:
    env = os.environ.get("MHP_THREADS")
    if env is not None:
        count = int(env)
        if count < 1:
            raise ValueError("MHP_THREADS must be a positive integer")
        return count
    return os.cpu_count() or 1


def run_experiment(spec: ExperimentSpec, workers: int | None = None) -> list[ResultRecord]:
    """Run the full campaign and return records in deterministic order."""
    jobs = [
        (spec, n, r) for n in spec.n_list for r in range(spec.n_realizations)
    ]
    if workers is None:
        workers = default_workers()
    workers = min(workers, len(jobs))
    if workers <= 1:
        batches = [_worker(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_worker, jobs, chunksize=1))
    records = [rec for batch in batches for rec in batch]
    records.sort(key=record_sort_key)
    return records


def format_value(value: float) -> str:
    return "%.12g" % value


def emit_csv(records: list[ResultRecord], path) -> None:
    """Write records sorted by (N, seed, kind, bits, metric) with the
    documented header; bit depth `inf` marks infinite resolution."""
    rows = sorted(records, key=record_sort_key)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(CSV_HEADER + "\n")
            for rec in rows:
                bits = "inf" if rec.bits is None else str(rec.bits)
                fh.write(
                    f"{rec.experiment_id},{rec.seed},{rec.n_antennas},"
                    f"{rec.n_groups},{rec.total_ues},{rec.n_paths},{bits},"
                    f"{rec.problem},{rec.precoder_kind},{rec.metric_name},"
                    f"{format_value(rec.value)},"
                    f"{'true' if rec.infeasible else 'false'}\n"
                )
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv_records(path) -> list[ResultRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: missing or unexpected CSV header")
    records = []
    for line in lines[1:]:
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 12:
            raise ValueError(f"{path}: expected 12 columns, got {len(parts)}")
        records.append(
            ResultRecord(
                experiment_id=parts[0],
                seed=int(parts[1]),
                n_antennas=int(parts[2]),
                n_groups=int(parts[3]),
                total_ues=int(parts[4]),
                n_paths=int(parts[5]),
                bits=None if parts[6] == "inf" else int(parts[6]),
                problem=parts[7],
                precoder_kind=parts[8],
                metric_name=parts[9],
                value=float(parts[10]),
                infeasible=parts[11] == "true",
            )
        )
    return records


@dataclass
class AggregateRow:
    n_antennas: int
    precoder_kind: str
    bits: int | None
    metric_name: str
    n_total: int
    n_infeasible: int
    mean: float


def aggregate_records(records: list[ResultRecord]) -> list[AggregateRow]:
    """Mean of each (N, kind, bits, metric) cell over feasible realizations."""
    groups: dict[tuple, list[ResultRecord]] = {}
    for rec in records:
        key = (rec.n_antennas, rec.precoder_kind, rec.bits, rec.metric_name)
        groups.setdefault(key, []).append(rec)
    rows = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], _bits_sort_key(k[2]), k[3])):
        cell = groups[key]
        feasible = [r.value for r in cell if not r.infeasible]
        mean = float(np.mean(feasible)) if feasible else float("nan")
        rows.append(
            AggregateRow(
                n_antennas=key[0],
                precoder_kind=key[1],
                bits=key[2],
                metric_name=key[3],
                n_total=len(cell),
                n_infeasible=len(cell) - len(feasible),
                mean=mean,
            )
        )
    return rows


def quantization_summary(records: list[ResultRecord]) -> list[dict]:
    """Ratio-of-means of quantized min-SINR against the FD baseline.

    Emitted per (N, bits); the mean of per-realization ratios is included
    for comparison.
    """
    rows = aggregate_records(records)
    fd_mean = {
        row.n_antennas: row.mean
        for row in rows
        if row.precoder_kind == "FD" and row.metric_name == "min_sinr"
    }
    out = []
    for row in rows:
        if row.precoder_kind != "HybridQuantized" or row.metric_name != "min_sinr":
            continue
        baseline = fd_mean.get(row.n_antennas, float("nan"))
        ratio_rows = [
            r.mean
            for r in rows
            if r.precoder_kind == "HybridQuantized"
            and r.metric_name == "ratio_to_fd"
            and r.n_antennas == row.n_antennas
            and r.bits == row.bits
        ]
        out.append(
            {
                "N": row.n_antennas,
                "bits": row.bits,
                "ratio_of_means": row.mean / baseline if baseline > 0 else float("nan"),
                "mean_of_ratios": ratio_rows[0] if ratio_rows else float("nan"),
            }
        )
    return out


def format_report(records: list[ResultRecord]) -> str:
    """Human-readable aggregate tables for one campaign CSV."""
    lines = []
    problems = sorted({r.problem for r in records})
    ids = sorted({r.experiment_id for r in records})
    lines.append(f"experiments: {', '.join(ids)}  problems: {', '.join(problems)}")
    lines.append("")
    lines.append(f"{'N':>6} {'kind':<16} {'bits':>5} {'metric':<18} "
                 f"{'mean':>16} {'n':>5} {'infeas':>7}")
    for row in aggregate_records(records):
        bits = "inf" if row.bits is None else str(row.bits)
        lines.append(
            f"{row.n_antennas:>6} {row.precoder_kind:<16} {bits:>5} "
            f"{row.metric_name:<18} {row.mean:>16.6g} {row.n_total:>5} "
            f"{row.n_infeasible:>7}"
        )
    summary = quantization_summary(records)
    if summary:
        lines.append("")
        lines.append("quantized min-SINR relative to FD (ratio of means / mean of ratios):")
        lines.append(f"{'N':>6} {'bits':>5} {'ratio_of_means':>16} {'mean_of_ratios':>16}")
        for row in summary:
            bits = "inf" if row["bits"] is None else str(row["bits"])
            lines.append(
                f"{row['N']:>6} {bits:>5} {row['ratio_of_means']:>16.6g} "
                f"{row['mean_of_ratios']:>16.6g}"
            )
    return "\n".join(lines) + "\n"
