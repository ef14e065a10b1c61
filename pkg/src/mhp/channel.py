"""Geometric mmWave multicast channel generation for a uniform linear array.

Channels follow the sparse geometric model: each (group, UE) vector is a sum
of L planar-wavefront paths with circularly-symmetric complex Gaussian gains
and azimuth angles drawn uniformly on [0, 2*pi).

Randomness comes from a counter-based Philox generator keyed by a 64-bit
seed, so regeneration with the same (config, seed) is bit-identical.  Draws
are consumed in a fixed documented order: groups outer, UEs middle, paths
inner; per path the gain (real part, then imaginary part) precedes the angle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class SystemConfig:
    """Static description of one multicast scenario.

    group_sizes holds the number of UEs per group; its length is the number
    of groups G.  UEs are identified by (group, index) pairs, so group
    membership is disjoint by construction.
    """

    n_antennas: int
    group_sizes: tuple[int, ...]
    n_paths: int = 3
    spacing_ratio: float = 0.5
    noise_power: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "group_sizes", tuple(int(k) for k in self.group_sizes))
        if self.n_antennas < 1:
            raise ValueError(f"n_antennas must be >= 1, got {self.n_antennas}")
        if len(self.group_sizes) < 1:
            raise ValueError("at least one group is required")
        if any(k < 1 for k in self.group_sizes):
            raise ValueError(f"all group sizes must be >= 1, got {self.group_sizes}")
        if self.n_paths < 1:
            raise ValueError(f"n_paths must be >= 1, got {self.n_paths}")
        if self.spacing_ratio <= 0:
            raise ValueError(f"spacing_ratio must be > 0, got {self.spacing_ratio}")
        if self.noise_power <= 0:
            raise ValueError(f"noise_power must be > 0, got {self.noise_power}")

    @property
    def n_groups(self) -> int:
        return len(self.group_sizes)

    @property
    def total_ues(self) -> int:
        return sum(self.group_sizes)


@dataclass
class ChannelSet:
    """Per-(group, UE) channel vectors of length n_antennas."""

    config: SystemConfig
    seed: int
    vectors: list[list[np.ndarray]] = field(repr=False)

    def vector(self, group: int, ue: int) -> np.ndarray:
        return self.vectors[group][ue]

    def pairs(self):
        """Yield (group, ue, h) over all UEs in group-major order."""
        for j, group in enumerate(self.vectors):
            for k, h in enumerate(group):
                yield j, k, h


def array_response(phi: float, n_antennas: int, spacing_ratio: float = 0.5) -> np.ndarray:
    """Unit-norm ULA response at azimuth phi (radians).

    Entry n is exp(i * 2*pi * spacing_ratio * n * sin(phi)) / sqrt(N).
    """
    if n_antennas < 1:
        raise ValueError("n_antennas must be >= 1")
    if spacing_ratio <= 0:
        raise ValueError("spacing_ratio must be > 0")
    n = np.arange(n_antennas)
    return np.exp(1j * TWO_PI * spacing_ratio * n * np.sin(phi)) / np.sqrt(n_antennas)


def generate_channels(config: SystemConfig, seed: int) -> ChannelSet:
    """Draw one channel realization, deterministic in (config, seed).

    Each vector is sqrt(N/L) * sum_l conj(alpha_l) * a(phi_l) with
    alpha_l ~ CN(0, 1) built from two unit normals scaled by 1/sqrt(2) and
    phi_l uniform on [0, 2*pi).  E||h||^2 = N.
    """
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    n = config.n_antennas
    scale = np.sqrt(n / config.n_paths)
    vectors: list[list[np.ndarray]] = []
    for size in config.group_sizes:
        group: list[np.ndarray] = []
        for _ in range(size):
            h = np.zeros(n, dtype=np.complex128)
            for _ in range(config.n_paths):
                gain_re = rng.standard_normal()
                gain_im = rng.standard_normal()
                alpha = (gain_re + 1j * gain_im) / np.sqrt(2.0)
                phi = rng.uniform(0.0, TWO_PI)
                h += np.conj(alpha) * array_response(phi, n, config.spacing_ratio)
            group.append(scale * h)
        vectors.append(group)
    return ChannelSet(config=config, seed=int(seed), vectors=vectors)
