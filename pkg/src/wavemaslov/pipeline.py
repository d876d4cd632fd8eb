"""The ``lambda = 0`` analysis chain shared by the FHN case and the CLI."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .bundles import (
    lazutkin_treschev,
    strong_stable_solution,
    strong_unstable_solution,
    unstable_bundle,
    unstable_plane,
)
from .evans import (
    DerivativeReport,
    EvansSample,
    ZeroData,
    default_window,
    evans_derivative_at_zero,
    evans_scan,
    sign_changes,
)
from .exterior import omega
from .maslov import MaslovResult, beta_trace, default_tau, maslov_analysis, parity_check, reference_plane
from .profile import WaveProfile
from .system import SystemParams, essential_spectrum_clearance


class PipelineError(RuntimeError):
    """A stage of the analysis failed; ``stage`` names it."""

    def __init__(self, stage: str, err: Exception):
        super().__init__(f"[{stage}] {err}")
        self.stage = stage
        self.cause = err


@dataclass(frozen=True)
class AnalysisOptions:
    lambda_min: float | None = None
    lambda_max: float | None = None
    lambda_steps: int = 20
    tau: float | None = None
    scan_evans: bool = True
    workers: int | None = None
    beta_points: int = 2000
    debug_flip_lt: bool = False


@dataclass
class WaveAnalysis:
    params: SystemParams
    wave: WaveProfile
    derivative: DerivativeReport
    maslov: MaslovResult
    consistent: bool
    parity_detail: dict
    beta: tuple
    evans: list = field(default_factory=list)
    candidates: list = field(default_factory=list)
    essential: tuple = (True, float("nan"))
    diagnostics: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)

    @property
    def lt(self) -> float:
        return self.derivative.lt

    @property
    def sign_routes_agree(self) -> bool:
        return np.sign(self.derivative.dPrime0) == np.sign(self.derivative.fdCheck)


def _stage(name, fn, timing, *args, **kw):
    t0 = time.perf_counter()
    try:
        return fn(*args, **kw)
    except Exception as err:  # tag and re-raise
        raise PipelineError(name, err) from err
    finally:
        timing[name] = time.perf_counter() - t0


def analyze_wave(params: SystemParams, wave: WaveProfile, opts: AnalysisOptions | None = None) -> WaveAnalysis:
    """Evans scan, ``D'(0)``, Maslov index and parity check for one wave."""
    opts = opts or AnalysisOptions()
    timing: dict = {}
    wave = wave if wave.tails is not None else wave.with_tails(params)
    essential = _stage("essential", essential_spectrum_clearance, timing, params)
    lo, hi = default_window(params)
    lo = lo if opts.lambda_min is None else opts.lambda_min
    hi = hi if opts.lambda_max is None else opts.lambda_max
    evans, cands = [], []
    if opts.scan_evans:
        grid = np.linspace(lo, hi, opts.lambda_steps)
        evans = _stage("evans", evans_scan, timing, params, wave, grid, opts.workers)
        cands = sign_changes(evans)
    u1 = _stage("u1", strong_stable_solution, timing, params, wave)
    u4 = _stage("u4", strong_unstable_solution, timing, params, wave)
    deriv = _stage("derivative", evans_derivative_at_zero, timing, params, wave, ZeroData(u1, u4),
                   window=(lo, hi))
    Ub = _stage("bundle", unstable_bundle, timing, params, wave, 0.0, 0.0)
    U = _stage("bundle", unstable_plane, timing, params, wave, Ub, u4)
    tau = opts.tau if opts.tau is not None else default_tau(wave)
    mres = _stage("maslov", maslov_analysis, timing, params, wave, u1, U, tau)
    lt = -deriv.lt if opts.debug_flip_lt else deriv.lt
    # transversality: the invariant relative to the sizes of u1 and u4
    x1, _ = u1.unit(0.0)
    x4, _ = u4.unit(0.0)
    transversality = abs(omega(x1, x4))
    consistent, detail = _stage("parity", parity_check, timing, mres, lt, transversality)
    zs = np.linspace(U.span[0], tau, opts.beta_points)
    ref = reference_plane(params, wave, u1, tau, sweep=2)
    bvals, _ = beta_trace(ref, U, zs)
    diagnostics = {
        "lt_drift": deriv.drift,
        "transversality": transversality,
        "plane_switch_mismatch": U.mismatch,
        "beta_minus_inf_over_rho": mres.beta_minus_inf / mres.rho,
    }
    return WaveAnalysis(params, wave, deriv, mres, consistent, detail, (zs, bvals), evans, cands,
                        essential, diagnostics, timing)
