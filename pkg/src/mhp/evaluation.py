"""Performance metrics for fully-digital and hybrid precoders."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .fd_design import sinr

PROBLEMS = ("QoS", "MMF")
PRECODER_KINDS = ("FD", "Hybrid", "HybridQuantized")
METRICS = ("min_sinr", "total_power_watts", "ratio_to_fd")


@dataclass
class ResultRecord:
    """One CSV row of a Monte Carlo campaign."""

    experiment_id: str
    seed: int
    n_antennas: int
    n_groups: int
    total_ues: int
    n_paths: int
    bits: int | None  # None means infinite resolution
    problem: str
    precoder_kind: str
    metric_name: str
    value: float
    infeasible: bool = False


def min_sinr(channels: ChannelSet, w, sigma2: float | None = None) -> float:
    """Minimum per-UE SINR over every (group, UE) pair."""
    return min(sinr(channels, w, j, k, sigma2) for j, k, _ in channels.pairs())


def total_power(w) -> float:
    """Squared Frobenius norm of the precoding matrix, in Watts."""
    return float(np.linalg.norm(np.asarray(w)) ** 2)


def performance_ratio(quantized_value: float, fd_value: float) -> float:
    """Quantized-over-baseline metric ratio; undefined for a zero baseline."""
    if fd_value <= 0.0:
        raise ValueError("baseline value must be strictly positive")
    return float(quantized_value) / float(fd_value)
