"""HTTP service exposing channel generation, design, and factorization.

The service is stateless: channel sets travel inside the requests, so any
number of clients can share one solver box.  Long campaigns (the `run`
subcommand) stay on the CLI, which writes files locally.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..channel import ChannelSet, SystemConfig, generate_channels
from ..evaluation import min_sinr, total_power
from ..fd_design import DesignError, sinr, solve_mmf, solve_qos
from ..hybrid import decompose, quantize_phases, reconstruct
from . import schemas

app = FastAPI(
    title="mhp design service",
    description="Multi-group multicast precoding and hybrid factorization",
    version=__version__,
)


def _to_config(model: schemas.SystemConfigModel) -> SystemConfig:
    return SystemConfig(
        n_antennas=model.n_antennas,
        group_sizes=tuple(model.group_sizes),
        n_paths=model.n_paths,
        spacing_ratio=model.spacing_ratio,
        noise_power=model.noise_power,
    )


def _to_channel_set(model: schemas.ChannelSetModel) -> ChannelSet:
    cfg = _to_config(model.config)
    vectors: list[list[np.ndarray]] = [
        [np.zeros(cfg.n_antennas, dtype=np.complex128)] * size
        for size in cfg.group_sizes
    ]
    seen = set()
    for entry in model.channels:
        if entry.group >= cfg.n_groups or entry.ue >= cfg.group_sizes[entry.group]:
            raise HTTPException(422, f"channel entry ({entry.group}, {entry.ue}) out of range")
        if len(entry.re) != cfg.n_antennas or len(entry.im) != cfg.n_antennas:
            raise HTTPException(422, "channel vector length must equal n_antennas")
        vectors[entry.group][entry.ue] = np.asarray(entry.re) + 1j * np.asarray(entry.im)
        seen.add((entry.group, entry.ue))
    expected = {(j, k) for j, size in enumerate(cfg.group_sizes) for k in range(size)}
    if seen != expected:
        raise HTTPException(422, "channel set must cover every (group, ue) pair exactly once")
    return ChannelSet(config=cfg, seed=model.seed, vectors=vectors)


def _from_channel_set(channels: ChannelSet) -> schemas.ChannelSetModel:
    cfg = channels.config
    return schemas.ChannelSetModel(
        config=schemas.SystemConfigModel(
            n_antennas=cfg.n_antennas,
            group_sizes=list(cfg.group_sizes),
            n_paths=cfg.n_paths,
            spacing_ratio=cfg.spacing_ratio,
            noise_power=cfg.noise_power,
        ),
        seed=channels.seed,
        channels=[
            schemas.ChannelVector(
                group=j, ue=k, re=h.real.tolist(), im=h.imag.tolist()
            )
            for j, k, h in channels.pairs()
        ],
    )


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/channels/generate", response_model=schemas.ChannelSetModel)
def channels_generate(req: schemas.GenerateChannelsRequest) -> schemas.ChannelSetModel:
    try:
        cfg = _to_config(req.config)
    except ValueError as exc:
        raise HTTPException(422, str(exc)) from exc
    return _from_channel_set(generate_channels(cfg, req.seed))


@app.post("/design/qos", response_model=schemas.DesignResponse)
def design_qos(req: schemas.QosDesignRequest) -> schemas.DesignResponse:
    channels = _to_channel_set(req.channels)
    try:
        design = solve_qos(
            channels, req.sinr_target, n_rand=req.n_rand, seed=req.seed
        )
    except DesignError as exc:
        raise HTTPException(409, f"infeasible: {exc}") from exc
    w = design.precoder.W
    return schemas.DesignResponse(
        precoder=schemas.ComplexMatrix.from_array(w),
        total_power=design.total_power,
        min_sinr=min_sinr(channels, w),
        sdr_objective=design.sdr_objective,
        candidate_index=design.candidate_index,
    )


@app.post("/design/mmf", response_model=schemas.DesignResponse)
def design_mmf(req: schemas.MmfDesignRequest) -> schemas.DesignResponse:
    channels = _to_channel_set(req.channels)
    try:
        design = solve_mmf(
            channels, req.power_budget, n_rand=req.n_rand, seed=req.seed
        )
    except DesignError as exc:
        raise HTTPException(409, f"infeasible: {exc}") from exc
    w = design.precoder.W
    return schemas.DesignResponse(
        precoder=schemas.ComplexMatrix.from_array(w),
        total_power=total_power(w),
        min_sinr=design.min_sinr,
        sdr_gamma_upper=design.sdr_gamma_upper,
        candidate_index=design.candidate_index,
    )


@app.post("/hybrid/decompose", response_model=schemas.DecomposeResponse)
def hybrid_decompose(req: schemas.DecomposeRequest) -> schemas.DecomposeResponse:
    w = req.precoder.to_array()
    try:
        hybrid = decompose(w, family=req.family, rho_mode=req.rho_mode)
        if req.bits is not None:
            hybrid = quantize_phases(hybrid, req.bits)
    except ValueError as exc:
        raise HTTPException(422, str(exc)) from exc
    w_hat = reconstruct(hybrid)
    scale = float(np.linalg.norm(w))
    rel = float(np.linalg.norm(w_hat - w)) / scale if scale > 0 else 0.0
    return schemas.DecomposeResponse(
        hybrid=schemas.HybridModel(
            phases_a=hybrid.phases_a.tolist(),
            phases_b=hybrid.phases_b.tolist(),
            digital=schemas.ComplexMatrix.from_array(hybrid.digital),
            n_rf=hybrid.n_rf,
            family=hybrid.family,
            bits=hybrid.bits,
        ),
        n_phase_shifters=hybrid.n_phase_shifters,
        relative_reconstruction_error=rel,
    )


@app.post("/evaluate", response_model=schemas.EvaluateResponse)
def evaluate(req: schemas.EvaluateRequest) -> schemas.EvaluateResponse:
    channels = _to_channel_set(req.channels)
    w = req.precoder.to_array()
    cfg = channels.config
    if w.shape != (cfg.n_antennas, cfg.n_groups):
        raise HTTPException(
            422,
            f"precoder shape {w.shape} does not match system "
            f"({cfg.n_antennas}, {cfg.n_groups})",
        )
    per_ue = [
        schemas.SinrEntry(group=j, ue=k, sinr=sinr(channels, w, j, k))
        for j, k, _ in channels.pairs()
    ]
    return schemas.EvaluateResponse(
        min_sinr=min(entry.sinr for entry in per_ue),
        total_power=total_power(w),
        per_ue=per_ue,
    )
