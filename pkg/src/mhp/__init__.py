"""Multi-group multicast precoder design with exact hybrid factorization."""

from .channel import ChannelSet, SystemConfig, array_response, generate_channels
from .evaluation import ResultRecord, min_sinr, performance_ratio, total_power
from .fd_design import (
    DesignError,
    FDPrecoder,
    InfeasibleDesignError,
    MmfDesign,
    QosDesign,
    SolverStalledError,
    sinr,
    solve_mmf,
    solve_qos,
)
from .hybrid import (
    HybridPrecoder,
    PhaseInfeasibleError,
    decompose,
    decompose_rank_deficient,
    digital_gains,
    phase_solution,
    quantize_phases,
    reconstruct,
)
from .power_control import (
    PowerAllocation,
    coupling_gains,
    power_control_mmf,
    power_control_qos,
)
from .sdr import SdrSolution, build_qos_sdr, gaussian_randomize, solve_sdp
from .sdp import SdpStatus

__version__ = "0.1.0"

__all__ = [
    "ChannelSet",
    "DesignError",
    "FDPrecoder",
    "HybridPrecoder",
    "InfeasibleDesignError",
    "MmfDesign",
    "PhaseInfeasibleError",
    "PowerAllocation",
    "QosDesign",
    "ResultRecord",
    "SdpStatus",
    "SdrSolution",
    "SolverStalledError",
    "SystemConfig",
    "array_response",
    "build_qos_sdr",
    "coupling_gains",
    "decompose",
    "decompose_rank_deficient",
    "digital_gains",
    "gaussian_randomize",
    "generate_channels",
    "min_sinr",
    "performance_ratio",
    "phase_solution",
    "power_control_mmf",
    "power_control_qos",
    "quantize_phases",
    "reconstruct",
    "sinr",
    "solve_mmf",
    "solve_qos",
    "solve_sdp",
    "total_power",
    "__version__",
]
