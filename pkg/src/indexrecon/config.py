"""Experiment configuration read from an INI-style key = value file.

Example::

    [problem]
    k = 5.0

    [scenario]
    name = disc-in-disc

    [data]
    m_e = 30
    m_m = 30
    noise = 0.02
    noise_seed = 7

    [reconstruction]
    strategy = combined

    [strategy]
    threshold = 0.1

    [output]
    dir = out

A custom scenario is given by ``background``, ``known`` and
``perturbations`` keys in ``[scenario]``; discs are ``x y r value`` groups
separated by ``;`` where value is a Python complex literal (``1.6+0.2j``).
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .forward import DirectionGrid
from .localization import EIGEN, SINGULAR
from .reconstruction import GNConfig
from .strategies import StrategyConfig
from .synthetic import Disc, Scenario, get_scenario

STRATEGIES = ("full", "selective", "adaptive", "combined")
VARIANTS = ("auto", EIGEN, SINGULAR)


class ConfigError(ValueError):
    pass


@dataclass
class MeshConfig:
    radius: float = 1.0
    epw: float = 20.0
    seed: int = 7
    buffer: float | None = None
    pml: float | None = None


@dataclass
class DataConfig:
    m_e: int = 30
    m_m: int = 30
    e_start: float = 0.0
    e_stop: float = 2 * np.pi
    m_start: float = 0.0
    m_stop: float = 2 * np.pi
    noise: float = 0.02
    noise_seed: int = 0
    mesh_epw: float = 40.0
    mesh_seed: int = 101


@dataclass
class ReconConfig:
    strategy: str = "full"
    zones: int = 0  # 0: one zone per D element
    zone_seed: int = 0
    c2: float = 1e-2
    stop_tol: float = 1e-4
    max_iters: int = 20
    real_constraint: bool | None = None  # None: follow the scenario


@dataclass
class StrategySection:
    threshold: float = 0.1
    n_max: int = 76
    delta: float | None = None
    variant: str = SINGULAR
    anchor: str = "initial"
    detect_factor: float = 2.0
    split_seed: int = 0


@dataclass
class SweepConfig:
    workers: int = 1
    grid: dict[str, list[str]] = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    k: float = 5.0
    scenario: Scenario = field(default_factory=lambda: get_scenario("disc-in-disc"))
    mesh: MeshConfig = field(default_factory=MeshConfig)
    data: DataConfig = field(default_factory=DataConfig)
    recon: ReconConfig = field(default_factory=ReconConfig)
    strategy: StrategySection = field(default_factory=StrategySection)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    output: Path = Path("out")

    def validate(self) -> "ExperimentConfig":
        if self.k <= 0:
            raise ConfigError("k must be positive")
        if self.mesh.epw < 10 or self.data.mesh_epw < 10:
            raise ConfigError("elements per wavelength must be >= 10")
        if self.data.mesh_seed == self.mesh.seed and self.data.mesh_epw == self.mesh.epw:
            raise ConfigError("data and reconstruction meshes must differ")
        if min(self.data.m_e, self.data.m_m) < 1:
            raise ConfigError("direction grids need at least one direction")
        if self.data.noise < 0:
            raise ConfigError("noise must be non-negative")
        if self.recon.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}")
        if self.recon.zones < 0:
            raise ConfigError("zones must be >= 0")
        if self.strategy.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}")
        try:
            self.gn_config()
            self.strategy_config()
            self.grids()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def grids(self) -> tuple[DirectionGrid, DirectionGrid]:
        d = self.data
        return (DirectionGrid.uniform(d.m_e, d.e_start, d.e_stop),
                DirectionGrid.uniform(d.m_m, d.m_start, d.m_stop))

    @property
    def real(self) -> bool:
        rc = self.recon.real_constraint
        return self.scenario.real if rc is None else rc

    def gn_config(self) -> GNConfig:
        r = self.recon
        return GNConfig(c2=r.c2, stop_tol=r.stop_tol, max_iters=r.max_iters,
                        real_constraint=self.real)

    def strategy_config(self) -> StrategyConfig:
        s = self.strategy
        return StrategyConfig(
            threshold=s.threshold, n_max=s.n_max, gn=self.gn_config(), noise=self.data.noise,
            delta=s.delta, variant=None if s.variant == "auto" else s.variant,
            detect_factor=s.detect_factor, seed=s.split_seed, anchor=s.anchor,
        )

    def with_overrides(self, overrides: dict[str, str]) -> "ExperimentConfig":
        """Copy with ``section.key`` values replaced (strings, parsed by type)."""
        cfg = replace(self, mesh=replace(self.mesh), data=replace(self.data),
                      recon=replace(self.recon), strategy=replace(self.strategy))
        for dotted, raw in overrides.items():
            sec, _, key = dotted.partition(".")
            if sec == "problem" and key == "k":
                cfg.k = float(raw)
                continue
            if sec == "scenario" and key == "name":
                cfg.scenario = get_scenario(raw.strip())
                continue
            target = _SECTIONS.get(sec)
            if target is None:
                raise ConfigError(f"unknown section {sec!r}")
            obj = getattr(cfg, target)
            _set_field(obj, key, raw, sec)
        return cfg.validate()


_SECTIONS = {"mesh": "mesh", "data": "data", "reconstruction": "recon",
             "strategy": "strategy"}


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_value(raw: str, kind: str):
    """Parse ``raw`` according to a field annotation such as ``float | None``."""
    raw = raw.strip()
    optional = kind.endswith("| None")
    base = kind.split("|")[0].strip()
    if optional and raw.lower() in ("", "none", "auto"):
        return None
    if base == "bool":
        return _parse_bool(raw)
    if base == "int":
        return int(raw)
    if base == "float":
        return eval_angle(raw)
    return raw


def eval_angle(raw: str) -> float:
    """Float, optionally written as a multiple of pi: ``1.5pi``, ``2*pi``, ``pi``."""
    s = raw.replace(" ", "").lower()
    if s.endswith("pi"):
        head = s[:-2].rstrip("*")
        return (float(head) if head else 1.0) * np.pi
    return float(s)


def _set_field(obj, key: str, raw: str, section: str) -> None:
    kinds = {f.name: str(f.type) for f in fields(obj)}
    if key not in kinds:
        raise ConfigError(f"unknown key {section}.{key}")
    try:
        setattr(obj, key, _parse_value(raw, kinds[key]))
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: {exc}") from exc


def _parse_discs(raw: str) -> tuple[Disc, ...]:
    discs = []
    for chunk in raw.split(";"):
        parts = chunk.split()
        if not parts:
            continue
        if len(parts) != 4:
            raise ConfigError(f"disc needs 'x y r value', got {chunk!r}")
        x, y, r = (float(p) for p in parts[:3])
        discs.append(Disc((x, y), r, complex(parts[3])))
    return tuple(discs)


def _scenario(sec: configparser.SectionProxy) -> Scenario:
    name = sec.get("name", "disc-in-disc")
    if "background" not in sec:
        return get_scenario(name)
    try:
        background = complex(sec["background"].replace(" ", ""))
        known = _parse_discs(sec.get("known", ""))
        pert = _parse_discs(sec.get("perturbations", ""))
        real = _parse_bool(sec.get("real", "true"))
    except ValueError as exc:
        raise ConfigError(f"scenario: {exc}") from exc
    return Scenario(name, background, known, pert, real)


def load_config(path) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    known_sections = {"problem", "scenario", "output", "sweep", *_SECTIONS}
    unknown = set(parser.sections()) - known_sections
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    cfg = ExperimentConfig()
    try:
        if parser.has_section("problem"):
            cfg.k = float(parser["problem"].get("k", cfg.k))
        if parser.has_section("scenario"):
            cfg.scenario = _scenario(parser["scenario"])
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    except ValueError as exc:
        raise ConfigError(f"problem: {exc}") from exc
    for sec, attr in _SECTIONS.items():
        if parser.has_section(sec):
            for key, raw in parser[sec].items():
                _set_field(getattr(cfg, attr), key, raw, sec)
    if parser.has_section("output"):
        cfg.output = Path(parser["output"].get("dir", str(cfg.output)))
    if parser.has_section("sweep"):
        sec = parser["sweep"]
        cfg.sweep.workers = int(sec.get("workers", "1"))
        cfg.sweep.grid = {k: [v.strip() for v in raw.split(",") if v.strip()]
                          for k, raw in sec.items() if k != "workers"}
    return cfg.validate()


def dump_config(cfg: ExperimentConfig) -> dict:
    """Flat summary for logging/metadata."""
    out = {"k": cfg.k, "scenario": cfg.scenario.name, "output": str(cfg.output)}
    for attr in ("mesh", "data", "recon", "strategy"):
        out.update({f"{attr}.{k}": v for k, v in asdict(getattr(cfg, attr)).items()})
    return out
