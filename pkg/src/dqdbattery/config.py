"""Run configuration stored as an INI-style key/value file.

All quantities are in units of the right tunnel rate (hbar = k_B = 1).
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field, fields

from .dynamics import (
    CONTROL_LIMIT,
    DEFAULT_DT,
    DEFAULT_RECORD_EVERY,
    ProtocolSchedule,
    Stage,
    direct_schedule,
    staged_schedule,
)
from .ergotropy import QubitHamiltonian
from .feedback import ControlParams, ReservoirRates, target_state
from .phonons import PhononParams

CONTROL_MODES = ("auto", "explicit", "off")
PRESETS = ("staged", "direct", "custom")
FORMATS = ("csv", "json")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class SystemConfig:
    epsilon: float = 1.0
    tc: float = 1.0


@dataclass
class ReservoirConfig:
    gamma_l: float = 1.0
    gamma_r: float = 1.0


@dataclass
class ControlConfig:
    mode: str = "auto"
    theta: float = 0.0
    theta_c: float = 0.0


@dataclass
class PhononConfig:
    enabled: bool = False
    g: float = 4e-4
    omega_c: float = 500.0
    kT: float = 1.0


@dataclass
class StageConfig:
    label: str
    gamma_l: float = 0.0
    gamma_r: float = 0.0
    control: bool = False
    phonons: bool = True
    duration: float | None = None
    residual_tol: float | None = None
    max_time: float = 1e3
    record_every: int = DEFAULT_RECORD_EVERY


@dataclass
class ProtocolConfig:
    preset: str = "staged"
    charge_gamma_r: float = 1e-3
    charge_time: float = 20.0
    discharge_time: float = 5000.0
    stages: list[StageConfig] = field(default_factory=list)


@dataclass
class IntegratorConfig:
    dt: float = DEFAULT_DT
    record_every: int = DEFAULT_RECORD_EVERY


@dataclass
class SurfaceConfig:
    r: float = 1.0
    n_theta: int = 181
    n_phi: int = 361


@dataclass
class OutputConfig:
    path: str = "out.csv"
    format: str = "csv"


SECTIONS = {
    "system": SystemConfig,
    "reservoirs": ReservoirConfig,
    "control": ControlConfig,
    "phonons": PhononConfig,
    "protocol": ProtocolConfig,
    "integrator": IntegratorConfig,
    "surface": SurfaceConfig,
    "output": OutputConfig,
}


@dataclass
class RunConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    reservoirs: ReservoirConfig = field(default_factory=ReservoirConfig)
    control: ControlConfig = field(default_factory=ControlConfig)
    phonons: PhononConfig = field(default_factory=PhononConfig)
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    surface: SurfaceConfig = field(default_factory=SurfaceConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    # -- derived physics objects -------------------------------------------------

    def hamiltonian(self) -> QubitHamiltonian:
        return QubitHamiltonian(self.system.epsilon, self.system.tc)

    def phonon_params(self) -> PhononParams | None:
        p = self.phonons
        if not p.enabled:
            return None
        return PhononParams.from_temperature(p.g, p.omega_c, p.kT)

    def control_spec(self) -> ControlParams | str | None:
        c = self.control
        if c.mode == "auto":
            return CONTROL_LIMIT
        if c.mode == "explicit":
            return ControlParams(c.theta, c.theta_c)
        return None

    def schedule(self, preset: str | None = None) -> ProtocolSchedule:
        preset = preset or self.protocol.preset
        p, res, integ = self.protocol, self.reservoirs, self.integrator
        ctrl = self.control_spec()
        if preset == "staged":
            return staged_schedule(
                res.gamma_l, res.gamma_r, ctrl, p.charge_gamma_r, p.discharge_time, integ.dt, integ.record_every
            )
        if preset == "direct":
            return direct_schedule(res.gamma_l, ctrl, p.charge_time, p.discharge_time, integ.dt, integ.record_every)
        if preset == "custom":
            stages = tuple(
                Stage(
                    s.label,
                    ReservoirRates(s.gamma_l, s.gamma_r),
                    ctrl if s.control else None,
                    phonons=s.phonons,
                    duration=s.duration,
                    residual_tol=s.residual_tol,
                    max_time=s.max_time,
                    record_every=s.record_every,
                )
                for s in p.stages
            )
            return ProtocolSchedule(stages, dt=integ.dt)
        raise ConfigError("protocol.preset", f"unknown preset {preset!r}")

    # -- validation --------------------------------------------------------------

    def validate(self) -> "RunConfig":
        def check(name, fn):
            try:
                return fn()
            except ConfigError:
                raise
            except (ValueError, ZeroDivisionError) as exc:
                raise ConfigError(name, str(exc)) from None

        for section in SECTIONS:
            obj = getattr(self, section)
            for f in fields(obj):
                value = getattr(obj, f.name)
                if isinstance(value, float) and not math.isfinite(value):
                    raise ConfigError(f"{section}.{f.name}", "must be finite")

        h = check("system", self.hamiltonian)
        check("reservoirs", lambda: ReservoirRates(self.reservoirs.gamma_l, self.reservoirs.gamma_r))
        if self.control.mode not in CONTROL_MODES:
            raise ConfigError("control.mode", f"must be one of {CONTROL_MODES}")
        if self.control.mode == "auto":
            check("system", lambda: target_state(h, 0.0))
        if self.phonons.enabled:
            if not self.phonons.kT > 0.0:
                raise ConfigError("phonons.kT", "must be > 0")
            if not self.phonons.g >= 0.0:
                raise ConfigError("phonons.g", "must be >= 0")
            if not self.phonons.omega_c > 0.0:
                raise ConfigError("phonons.omega_c", "must be > 0")
            if h.delta == 0.0:
                raise ConfigError("system", "phonon rates need a nonzero gap")
            check("phonons", self.phonon_params)
        if self.protocol.preset not in PRESETS:
            raise ConfigError("protocol.preset", f"must be one of {PRESETS}")
        if self.protocol.preset == "custom" and not self.protocol.stages:
            raise ConfigError("protocol.stages", "custom preset needs at least one stage")
        if not self.protocol.charge_gamma_r >= 0.0:
            raise ConfigError("protocol.charge_gamma_r", "must be >= 0")
        for name in ("charge_time", "discharge_time"):
            if not getattr(self.protocol, name) >= 0.0:
                raise ConfigError(f"protocol.{name}", "must be >= 0")
        if not self.integrator.dt > 0.0:
            raise ConfigError("integrator.dt", "must be > 0")
        if self.integrator.record_every < 1:
            raise ConfigError("integrator.record_every", "must be >= 1")
        for s in self.protocol.stages:
            check(f"stage.{s.label}", lambda s=s: Stage(
                s.label, ReservoirRates(s.gamma_l, s.gamma_r), None, s.phonons,
                s.duration, s.residual_tol, s.max_time, s.record_every))
        check("protocol", self.schedule)
        if not 0.0 <= self.surface.r <= 1.0:
            raise ConfigError("surface.r", "must lie in [0, 1]")
        if self.surface.n_theta < 2:
            raise ConfigError("surface.n_theta", "must be >= 2")
        if self.surface.n_phi < 2:
            raise ConfigError("surface.n_phi", "must be >= 2")
        if self.output.format not in FORMATS:
            raise ConfigError("output.format", f"must be one of {FORMATS}")
        return self

    # -- serialisation -----------------------------------------------------------

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        for section in SECTIONS:
            obj = getattr(self, section)
            items = {}
            for f in fields(obj):
                value = getattr(obj, f.name)
                if f.name == "stages":
                    if value:
                        items["stages"] = ", ".join(s.label for s in value)
                    continue
                items[f.name] = _format(value)
            cp[section] = items
        for s in self.protocol.stages:
            cp[f"stage.{s.label}"] = {f.name: _format(getattr(s, f.name)) for f in fields(s) if f.name != "label"}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError("file", str(exc).splitlines()[0]) from None
        known = set(SECTIONS) | {f"stage.{x}" for x in _stage_labels(cp)}
        for section in cp.sections():
            if section not in known:
                raise ConfigError(section, "unknown section")
        cfg = cls()
        for section, klass in SECTIONS.items():
            if section not in cp:
                continue
            obj = getattr(cfg, section)
            names = {f.name: f for f in fields(klass) if f.name != "stages"}
            for key, raw in cp[section].items():
                if key == "stages" and section == "protocol":
                    continue
                if key not in names:
                    raise ConfigError(f"{section}.{key}", "unknown key")
                setattr(obj, key, _parse(f"{section}.{key}", raw, type(getattr(klass(), key))))
        stages = []
        for label in _stage_labels(cp):
            name = f"stage.{label}"
            if name not in cp:
                raise ConfigError(name, "stage listed in protocol.stages but section missing")
            stage = StageConfig(label)
            for key, raw in cp[name].items():
                kinds = {
                    "gamma_l": float, "gamma_r": float, "control": bool, "phonons": bool,
                    "duration": float, "residual_tol": float, "max_time": float, "record_every": int,
                }
                if key not in kinds:
                    raise ConfigError(f"{name}.{key}", "unknown key")
                setattr(stage, key, _parse(f"{name}.{key}", raw, kinds[key], optional=True))
            stages.append(stage)
        cfg.protocol.stages = stages
        return cfg.validate()

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError("file", str(exc)) from None
        return cls.from_ini(text)


def _stage_labels(cp: configparser.ConfigParser) -> list[str]:
    if "protocol" not in cp or "stages" not in cp["protocol"]:
        return []
    return [x.strip() for x in cp["protocol"]["stages"].split(",") if x.strip()]


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(name: str, raw: str, kind, optional: bool = False):
    raw = raw.strip()
    if optional and raw.lower() == "none":
        return None
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError:
        raise ConfigError(name, f"cannot parse {raw!r} as {kind.__name__}") from None
    return raw
