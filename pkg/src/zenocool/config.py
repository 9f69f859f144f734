"""Run configuration: sectioned ``key = value`` files plus command-line overrides."""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import DomainError
from .quadrature import QuadratureSpec
from .spectrum import BathParams, ModifiedLorentzian, SpectralModel, SuperOhmic, Tabulated

# section -> key -> default (as text, parsed like file values)
DEFAULTS: Dict[str, Dict[str, str]] = {
    "model": {"kind": "modified_lorentzian", "alpha": "0.01", "lambda": "0.25",
              "omega0": "1.5", "s": "3", "omega_c": "2", "file": "", "cutoff": ""},
    "bath": {"beta": "2", "omega_a": "1"},
    "protocol": {"tau": "2.5", "n_meas": "40", "rho_ee0": "0.15", "horizon": "100",
                 "method": "rk45", "table_dt": "0.01", "continuous_clock": "false"},
    "grid": {"t_min": "0", "t_max": "50", "t_step": "0.5",
             "tau_min": "0.5", "tau_max": "20", "tau_step": "0.1",
             "domain_tau": "2", "omega0_list": "1.2, 1.5, 2.0, 2.5, 3.0",
             "beta_list": "", "s_list": "", "sweep": "omega0",
             "points_per_period": "40"},
    "tolerances": {"rel_tol": "1e-8", "abs_tol": "1e-12", "max_panels": "16384"},
    "output": {"dir": "out", "formats": "csv,json,svg", "threads": ""},
}
FORMATS = ("csv", "json", "svg")
SWEEPS = ("omega0", "s", "beta")


class ConfigError(ValueError):
    pass


def _floats(text: str) -> List[float]:
    text = text.strip()
    if not text:
        return []
    return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]


@dataclass
class RunConfig:
    model: SpectralModel
    bath: BathParams
    tau: float
    n_meas: int
    rho_ee0: float
    horizon: float
    method: str
    table_dt: float
    continuous_clock: bool
    t_grid: np.ndarray
    tau_grid: np.ndarray
    domain_tau: float
    omega0_list: List[float]
    beta_list: List[float]
    s_list: List[float]
    sweep: str
    points_per_period: int
    spec: QuadratureSpec
    out_dir: Path
    formats: List[str]
    threads: int
    raw: Dict[str, Dict[str, str]] = field(default_factory=dict, repr=False)

    def wants(self, fmt: str) -> bool:
        return fmt in self.formats


def parse_override(text: str):
    """``section.key=value`` -> (section, key, value)."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form section.key=value")
    lhs, value = text.split("=", 1)
    if "." not in lhs:
        raise ConfigError(f"override {text!r} needs a section, e.g. bath.beta=2")
    section, key = lhs.strip().split(".", 1)
    return section.strip(), key.strip(), value.strip()


def _grid(lo: float, hi: float, step: float, name: str) -> np.ndarray:
    if not step > 0:
        raise ConfigError(f"{name} step must be positive")
    if hi < lo:
        raise ConfigError(f"{name} range is empty")
    n = int(round((hi - lo) / step))
    grid = lo + step * np.arange(n + 1)
    if grid[-1] < hi - 1e-9 * step:
        grid = np.append(grid, hi)
    return grid


def build_model(sec: Dict[str, str], base_dir: Path) -> SpectralModel:
    kind = sec["kind"].strip()
    if kind == "modified_lorentzian":
        return ModifiedLorentzian(float(sec["alpha"]), float(sec["lambda"]), float(sec["omega0"]))
    if kind == "super_ohmic":
        return SuperOhmic(float(sec["alpha"]), float(sec["s"]), float(sec["omega_c"]))
    if kind == "tabulated":
        if not sec["file"]:
            raise ConfigError("tabulated model needs model.file")
        path = Path(sec["file"])
        if not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise ConfigError(f"tabulated spectrum file {path} does not exist")
        cutoff = float(sec["cutoff"]) if sec["cutoff"].strip() else None
        return Tabulated.from_file(path, cutoff)
    raise ConfigError(f"unknown model kind {kind!r}")


def load_config(path: Optional[str] = None, overrides: Sequence[str] = (),
                out_dir: Optional[str] = None, threads: Optional[int] = None,
                formats: Optional[str] = None) -> RunConfig:
    """Defaults, then the file, then ``--set`` overrides in order (later wins)."""
    raw = {s: dict(v) for s, v in DEFAULTS.items()}
    base_dir = Path.cwd()
    if path:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file {p} does not exist")
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        parser.read(p)
        base_dir = p.resolve().parent
        for section in parser.sections():
            if section not in raw:
                raise ConfigError(f"unknown config section [{section}]")
            for key, value in parser.items(section):
                if key not in raw[section]:
                    raise ConfigError(f"unknown key {section}.{key}")
                raw[section][key] = value
    for item in overrides:
        section, key, value = parse_override(item)
        if section not in raw or key not in raw[section]:
            raise ConfigError(f"unknown key {section}.{key}")
        raw[section][key] = value
    if out_dir is not None:
        raw["output"]["dir"] = out_dir
    if formats is not None:
        raw["output"]["formats"] = formats
    if threads is not None:
        raw["output"]["threads"] = str(threads)
    try:
        return _assemble(raw, base_dir)
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def _assemble(raw, base_dir: Path) -> RunConfig:
    m, b, p, g, tol, o = (raw[s] for s in ("model", "bath", "protocol", "grid", "tolerances",
                                            "output"))
    try:
        model = build_model(m, base_dir)
        bath = BathParams(float(b["beta"]), float(b["omega_a"]))
        spec = QuadratureSpec(float(tol["rel_tol"]), float(tol["abs_tol"]),
                              int(tol["max_panels"]))
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    formats = [f.strip() for f in o["formats"].split(",") if f.strip()]
    bad = [f for f in formats if f not in FORMATS]
    if bad or not formats:
        raise ConfigError(f"formats must be a non-empty subset of {FORMATS}, got {o['formats']!r}")
    threads_text = o["threads"].strip() or os.environ.get("ZENOCOOL_THREADS", "").strip() or "1"
    threads = int(threads_text)
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    sweep = g["sweep"].strip()
    if sweep not in SWEEPS:
        raise ConfigError(f"grid.sweep must be one of {SWEEPS}")
    clock = p["continuous_clock"].strip().lower()
    if clock not in ("true", "false", "1", "0", "yes", "no"):
        raise ConfigError("protocol.continuous_clock must be a boolean")
    cfg = RunConfig(
        model=model, bath=bath, tau=float(p["tau"]), n_meas=int(p["n_meas"]),
        rho_ee0=float(p["rho_ee0"]), horizon=float(p["horizon"]), method=p["method"].strip(),
        table_dt=float(p["table_dt"]), continuous_clock=clock in ("true", "1", "yes"),
        t_grid=_grid(float(g["t_min"]), float(g["t_max"]), float(g["t_step"]), "t"),
        tau_grid=_grid(float(g["tau_min"]), float(g["tau_max"]), float(g["tau_step"]), "tau"),
        domain_tau=float(g["domain_tau"]), omega0_list=_floats(g["omega0_list"]),
        beta_list=_floats(g["beta_list"]), s_list=_floats(g["s_list"]), sweep=sweep,
        points_per_period=int(g["points_per_period"]), spec=spec,
        out_dir=Path(o["dir"]), formats=formats, threads=threads, raw=raw)
    if not cfg.tau > 0 or cfg.n_meas < 0 or not cfg.horizon > 0:
        raise ConfigError("protocol needs tau > 0, n_meas >= 0 and horizon > 0")
    if not 0.0 < cfg.rho_ee0 < 1.0:
        raise ConfigError("protocol.rho_ee0 must lie in (0, 1)")
    if cfg.t_grid[0] < 0 or cfg.tau_grid[0] <= 0:
        raise ConfigError("time grids must be non-negative and tau grids positive")
    return cfg
