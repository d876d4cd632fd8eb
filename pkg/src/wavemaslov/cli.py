"""Command-line entry point.

Commands (all take ``--config PATH``):

``analyze``
    wave, Evans scan, ``D'(0)``, Maslov index and parity check; writes
    ``report.json``, ``evans.csv`` and ``beta.csv``.
``evans-scan``
    wave and the Evans scan only; writes ``evans.csv``.
``beta-trace``
    wave and the Maslov analysis; writes ``beta.csv``.
``wave``
    the wave only; writes ``profile.json``.

Exit codes: 0 success, 1 operational error (the message names the stage or
the offending path), 2 parity inconsistency.
"""
from __future__ import annotations

import argparse
import logging
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import io as _io
from .config import ConfigError, RunConfig, apply_overrides, load_config
from .evans import default_window, evans_scan
from .fhn_case import fhn_wave
from .homoclinic import solve_homoclinic
from .pipeline import PipelineError, WaveAnalysis, analyze_wave
from .profile import ProfileError, WaveProfile, load_profile, save_profile
from .system import SystemParams

log = logging.getLogger("wavemaslov")

EXIT_OK, EXIT_ERROR, EXIT_PARITY = 0, 1, 2
EVANS_HEADER = "lambda,D_wedge,D_symplectic,agreement"
BETA_HEADER = "z,beta"


class CliError(RuntimeError):
    """An operational failure with a one-line diagnostic."""


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


# ---------------------------------------------------------------------------
# wave acquisition
# ---------------------------------------------------------------------------


def acquire_wave(cfg: RunConfig) -> tuple[SystemParams, WaveProfile]:
    """The wave requested by ``cfg`` and the system at its speed."""
    s, w = cfg.system, cfg.wave
    kin = s.kinetics()
    if w.source == "file":
        try:
            prof = load_profile(w.path, validate=False)
            params = SystemParams(kin, prof.c)
            prof = prof.with_tails(params)
            prof.validate()
        except (FileNotFoundError, ProfileError) as err:
            raise CliError(f"[wave-file] {w.path}: {err}") from err
        return params, prof
    if s.preset == "fhn":
        prof, c = fhn_wave(s.fhn(), w.solver)
        return SystemParams(kin, c), prof
    try:
        guess = load_profile(w.guess, validate=False)
    except (FileNotFoundError, ProfileError) as err:
        raise CliError(f"[wave-guess] {w.guess}: {err}") from err
    c0 = s.c if s.c is not None else guess.c
    try:
        prof, c = solve_homoclinic(SystemParams(kin, c0), guess, w.solver)
    except Exception as err:
        raise PipelineError("homoclinic", err) from err
    return SystemParams(kin, c), prof


# ---------------------------------------------------------------------------
# report assembly
# ---------------------------------------------------------------------------


def wave_summary(prof: WaveProfile) -> dict:
    return {
        "c": prof.c,
        "L": prof.L,
        "nodes": int(prof.grid.size),
        "u_max": float(np.max(prof.u)),
        "v_max": float(np.max(prof.v)),
        "tail_size": prof.tail_size(),
        "du_max": float(np.max(np.abs(prof.du))),
    }


def evans_rows(samples) -> list:
    return [(s.lam, s.D_wedge, s.D_symplectic, s.agreement) for s in samples]


def build_report(cfg: RunConfig, res: WaveAnalysis, meta: dict) -> dict:
    m, d = res.maslov, res.derivative
    evans = None
    if res.evans:
        D = np.array([s.D_wedge for s in res.evans])
        evans = {
            "points": len(res.evans),
            "lambda_min": res.evans[0].lam,
            "lambda_max": res.evans[-1].lam,
            "max_abs_D": float(np.max(np.abs(D))),
            "worst_agreement": max(s.agreement for s in res.evans),
            "D_at_lambda_max": res.evans[-1].D_wedge,
            "sign_change_brackets": [list(b) for b in res.candidates],
        }
    return {
        "system": cfg.system.echo(),
        "wave": wave_summary(res.wave),
        "essential_spectrum": {"clear": res.essential[0], "K_estimate": res.essential[1]},
        "evans": evans,
        "maslov": {
            "tau": m.tau,
            "crossings": [cp.to_dict() for cp in m.crossings],
            "endpoint": m.endpoint.to_dict(),
            "signatures": m.signatures(),
            "index": m.index,
            "parity_prediction": m.parityPrediction,
            "beta_slope_tau": m.beta_slope_tau,
            "omega_phi_tau": m.omega_phi_tau,
        },
        "derivative": {
            "lt": -d.lt if cfg.analysis.debug_flip_lt else d.lt,
            "melnikov": d.integral,
            "dPrime0": d.dPrime0,
            "fdCheck": d.fdCheck,
            "relGap": d.relGap,
            "h": d.h,
        },
        "parity": {"consistent": res.consistent, "sign_routes_agree": bool(res.sign_routes_agree),
                   **res.parity_detail},
        "consistent": bool(res.consistent and res.sign_routes_agree),
        "diagnostics": res.diagnostics,
        "meta": meta,
    }


def _meta(t0: float, res: WaveAnalysis | None = None) -> dict:
    meta = {
        "tool_version": tool_version(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "finished_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "wall_seconds": time.perf_counter() - t0,
    }
    if res is not None:
        meta["timing"] = res.timing
    return meta


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _write(path: Path, text: str) -> None:
    try:
        _io.atomic_write(path, text)
    except OSError as err:
        raise CliError(f"[output] cannot write {path}: {err}") from err


def cmd_analyze(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    params, prof = acquire_wave(cfg)
    res = analyze_wave(params, prof, cfg.analysis.options(scan_evans=True))
    report = build_report(cfg, res, _meta(t0, res))
    out = cfg.output
    _write(out / "evans.csv", _io.csv_text(EVANS_HEADER, evans_rows(res.evans)))
    _write(out / "beta.csv", _io.csv_text(BETA_HEADER, zip(*res.beta)))
    _write(out / "report.json", _io.dumps(report) + "\n")
    if not report["consistent"]:
        print(f"parity inconsistency: index={res.maslov.index} lt={report['derivative']['lt']:.6g} "
              f"dPrime0={res.derivative.dPrime0:.6g} fdCheck={res.derivative.fdCheck:.6g}", file=sys.stderr)
        return EXIT_PARITY
    print(f"index={res.maslov.index} signatures={res.maslov.signatures()} "
          f"dPrime0={res.derivative.dPrime0:.6g} consistent=true -> {out}")
    return EXIT_OK


def cmd_evans_scan(cfg: RunConfig) -> int:
    params, prof = acquire_wave(cfg)
    prof = prof if prof.tails is not None else prof.with_tails(params)
    lo, hi = default_window(params)
    an = cfg.analysis
    lo = lo if an.lambda_min is None else an.lambda_min
    hi = hi if an.lambda_max is None else an.lambda_max
    grid = np.linspace(lo, hi, an.lambda_steps)
    try:
        samples = evans_scan(params, prof, grid)
    except Exception as err:
        raise PipelineError("evans", err) from err
    _write(cfg.output / "evans.csv", _io.csv_text(EVANS_HEADER, evans_rows(samples)))
    print(f"{len(samples)} Evans samples -> {cfg.output / 'evans.csv'}")
    return EXIT_OK


def cmd_beta_trace(cfg: RunConfig) -> int:
    params, prof = acquire_wave(cfg)
    res = analyze_wave(params, prof, cfg.analysis.options(scan_evans=False))
    _write(cfg.output / "beta.csv", _io.csv_text(BETA_HEADER, zip(*res.beta)))
    print(f"signatures={res.maslov.signatures()} tau={res.maslov.tau:.6g} -> {cfg.output / 'beta.csv'}")
    return EXIT_OK


def cmd_wave(cfg: RunConfig) -> int:
    _, prof = acquire_wave(cfg)
    path = cfg.output / "profile.json"
    try:
        save_profile(prof, path)
    except OSError as err:
        raise CliError(f"[output] cannot write {path}: {err}") from err
    print(f"c={prof.c:.17g} nodes={prof.grid.size} -> {path}")
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "evans-scan": cmd_evans_scan,
    "beta-trace": cmd_beta_trace,
    "wave": cmd_wave,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wavemaslov", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", help="output directory (overrides output.directory)")
    ap.add_argument("--preset", choices=["fhn", "custom"], help="system preset (overrides system.preset)")
    ap.add_argument("--lambda-min", type=float)
    ap.add_argument("--lambda-max", type=float)
    ap.add_argument("--lambda-steps", type=int)
    ap.add_argument("--tau", type=float, help="reference-plane position")
    ap.add_argument("--eps", type=float)
    ap.add_argument("--a", type=float)
    ap.add_argument("--gamma", type=float)
    ap.add_argument("--debug-flip-lt", action="store_true", help="invert the sign of lt (tests the alarm path)")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = apply_overrides(load_config(args.config), args).validate()
        return COMMANDS[args.command](cfg)
    except ConfigError as err:
        print(f"error: [config] {err}", file=sys.stderr)
    except (CliError, PipelineError) as err:
        print(f"error: {err}", file=sys.stderr)
    except Exception as err:  # noqa: BLE001 - last-resort diagnostic
        print(f"error: [{args.command}] {type(err).__name__}: {err}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
