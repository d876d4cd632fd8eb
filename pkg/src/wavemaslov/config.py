"""Run configuration: a single JSON document, optionally overridden by CLI flags.

Precedence (highest first): command-line flags, the config file, the
built-in defaults below.  Layout::

    {
      "system":   {"preset": "fhn", "a": 0.25, "eps": 0.0005, "gamma": 0.0}
               or {"preset": "custom", "f": [...], "g": [...],
                   "sigma": 1.0, "alpha": 1.0, "c": -0.3},
      "wave":     {"source": "solve" | "analytic" | "file",
                   "path": "profile.json", "guess": "guess.json",
                   "solver": {"h_front": 0.05, "L": null, ...}},
      "analysis": {"lambda_min": null, "lambda_max": null, "lambda_steps": 20,
                   "tau": null, "beta_points": 2000},
      "output":   {"directory": "out"}
    }

``f`` and ``g`` are coefficient lists, lowest degree first.  Relative paths
are resolved against the directory holding the config file.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .fhn import FhnParams
from .homoclinic import HomoclinicOptions
from .pipeline import AnalysisOptions
from .system import Kinetics, ParameterError, PolynomialKinetics

WAVE_SOURCES = ("solve", "analytic", "file")


class ConfigError(ValueError):
    """The configuration is malformed or refers to missing files."""


@dataclass(frozen=True)
class SystemConfig:
    preset: str = "fhn"
    a: float = 0.25
    eps: float = 0.0005
    gamma: float = 0.0
    f: tuple = ()
    g: tuple = ()
    sigma: float = 1.0
    alpha: float = 1.0
    c: float | None = None

    def fhn(self) -> FhnParams:
        return FhnParams(self.a, self.eps, self.gamma)

    def kinetics(self) -> Kinetics:
        if self.preset == "fhn":
            return self.fhn().kinetics
        return PolynomialKinetics(self.f, self.g, self.sigma, self.alpha)

    def echo(self) -> dict:
        if self.preset == "fhn":
            return {"preset": "fhn", **self.fhn().to_dict()}
        return {**self.kinetics().describe(), "c": self.c}


@dataclass(frozen=True)
class WaveConfig:
    source: str = "solve"
    path: Path | None = None
    guess: Path | None = None
    solver: HomoclinicOptions = field(default_factory=HomoclinicOptions)


@dataclass(frozen=True)
class AnalysisConfig:
    lambda_min: float | None = None
    lambda_max: float | None = None
    lambda_steps: int = 20
    tau: float | None = None
    beta_points: int = 2000
    debug_flip_lt: bool = False

    def options(self, scan_evans: bool = True) -> AnalysisOptions:
        return AnalysisOptions(
            lambda_min=self.lambda_min,
            lambda_max=self.lambda_max,
            lambda_steps=self.lambda_steps,
            tau=self.tau,
            scan_evans=scan_evans,
            beta_points=self.beta_points,
            debug_flip_lt=self.debug_flip_lt,
        )


@dataclass(frozen=True)
class RunConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    wave: WaveConfig = field(default_factory=WaveConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output: Path = Path("out")

    def validate(self) -> "RunConfig":
        s, w, an = self.system, self.wave, self.analysis
        if s.preset not in ("fhn", "custom"):
            raise ConfigError(f"unknown system preset {s.preset!r} (expected 'fhn' or 'custom')")
        try:
            s.kinetics()
        except ParameterError as err:
            raise ConfigError(f"system: {err}") from err
        if s.preset == "custom":
            if not s.f or not s.g:
                raise ConfigError("custom system needs coefficient lists 'f' and 'g'")
        if w.source not in WAVE_SOURCES:
            raise ConfigError(f"unknown wave source {w.source!r} (expected one of {', '.join(WAVE_SOURCES)})")
        if w.source == "file":
            if w.path is None:
                raise ConfigError("wave source 'file' needs 'path'")
            if not w.path.exists():
                raise ConfigError(f"profile file not found: {w.path}")
        if s.preset == "custom" and w.source != "file":
            if w.guess is None:
                raise ConfigError("custom systems are solved from a guess profile: set wave.guess")
            if not w.guess.exists():
                raise ConfigError(f"guess profile not found: {w.guess}")
        if an.lambda_steps < 1:
            raise ConfigError("lambda_steps must be positive")
        if an.beta_points < 2:
            raise ConfigError("beta_points must be at least 2")
        if an.lambda_min is not None and an.lambda_max is not None and an.lambda_min >= an.lambda_max:
            raise ConfigError("lambda_min must be below lambda_max")
        for f in fields(w.solver):
            val = getattr(w.solver, f.name)
            if f.name.endswith("tol") and not (val > 0):
                raise ConfigError(f"solver tolerance {f.name} must be positive")
        return self


def _pick(cls, data: dict, where: str, **conv):
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown key(s) in '{where}': {', '.join(sorted(unknown))}")
    out = {}
    for k, v in data.items():
        out[k] = conv[k](v) if k in conv and v is not None else v
    return out


def _path(base: Path):
    return lambda p: (base / p) if not Path(p).is_absolute() else Path(p)


def config_from_dict(d: dict, base: Path = Path(".")) -> RunConfig:
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(d) - {"system", "wave", "analysis", "output"}
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(unknown))}")
    system = SystemConfig(**_pick(SystemConfig, d.get("system", {}), "system", f=tuple, g=tuple))
    wd = dict(d.get("wave", {}))
    solver = HomoclinicOptions(**_pick(HomoclinicOptions, wd.pop("solver", {}), "wave.solver"))
    wave = WaveConfig(solver=solver, **_pick(WaveConfig, wd, "wave", path=_path(base), guess=_path(base)))
    analysis = AnalysisConfig(**_pick(AnalysisConfig, d.get("analysis", {}), "analysis"))
    od = d.get("output", {})
    if set(od) - {"directory", "formats"}:
        raise ConfigError("unknown key(s) in 'output'")
    out = _path(base)(od.get("directory", "out"))
    return RunConfig(system, wave, analysis, out)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path} is not valid JSON: {err}") from err
    try:
        return config_from_dict(d, path.parent)
    except TypeError as err:
        raise ConfigError(f"config file {path}: {err}") from err


def apply_overrides(cfg: RunConfig, args) -> RunConfig:
    """Fold command-line flags (``None`` means not given) into ``cfg``."""
    sysd = {k: getattr(args, k) for k in ("a", "eps", "gamma") if getattr(args, k, None) is not None}
    if getattr(args, "preset", None):
        sysd["preset"] = args.preset
    an_ = {}
    for k in ("lambda_min", "lambda_max", "lambda_steps", "tau"):
        if getattr(args, k, None) is not None:
            an_[k] = getattr(args, k)
    if getattr(args, "debug_flip_lt", False):
        an_["debug_flip_lt"] = True
    cfg = replace(cfg, system=replace(cfg.system, **sysd), analysis=replace(cfg.analysis, **an_))
    if getattr(args, "out", None):
        cfg = replace(cfg, output=Path(args.out))
    return cfg
