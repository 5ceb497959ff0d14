"""Scenario configuration and its INI-style file format.

A scenario file has up to six sections; every key is optional::

    [scenario]
    n_turbines = 3
    dt = 0.1
    duration = 1000
    case = 1                  ; 0-4, or leave out and give alpha
    alpha = 0.5, 0.3, 0.2     ; custom split, normalised if needed
    mode = II                 ; turbine control mode, I or II
    dispatch = uniform        ; uniform | unsaturated
    transient = 200           ; seconds discarded by the metrics
    output = run.csv

    [reference]
    schedule = 0: 10e6, 500: 8e6   ; piecewise-constant farm reference, W

    [flow]
    u_mean = 9.0
    ti = 0.05
    spacing = 5                ; or positions = 0, 5, 10 (rotor diameters)
    wake_decay = 0.05
    correlation_time = 10
    seed = 0
    wind_schedule = 0: 9, 600: 12

    [turbine]                  ; TurbineParams overrides
    rotor_inertia = 1.6e8

    [controller]               ; ControllerConfig overrides, same field names
    max_pitch_rate = 10

    [steptest]
    low = 3.0e6
    high = 3.5e6
    t_up = 150
    t_down = 300
    duration = 450
    wind = 9.0
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError
from ..farm_ctrl import select_case
from ..flow import FlowConfig
from ..turbine import TurbineParams, default_params
from ..turbine_ctrl import ControlFlag, ControllerConfig

Schedule = tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class StepTestConfig:
    low: float = 3.0e6
    high: float = 3.5e6
    t_up: float = 150.0
    t_down: float = 300.0
    duration: float = 450.0
    wind: float = 9.0

    def schedule(self) -> Schedule:
        return ((0.0, self.low), (self.t_up, self.high), (self.t_down, self.low))


@dataclass(frozen=True)
class ScenarioConfig:
    n_turbines: int = 3
    dt: float = 0.1
    duration: float = 1000.0
    reference: Schedule = ((0.0, 10.0e6),)
    case: int | None = 1
    alpha: tuple[float, ...] | None = None
    flow: FlowConfig = field(default_factory=FlowConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    turbine: dict = field(default_factory=dict)
    mode: ControlFlag = ControlFlag.MODE_II
    dispatch_rescale: bool = False
    transient: float = 200.0
    output: str | None = None
    steptest: StepTestConfig = field(default_factory=StepTestConfig)

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if not self.duration >= self.dt:
            raise ConfigError("duration must be at least one time step")
        if self.n_turbines < 1:
            raise ConfigError("n_turbines must be at least 1")
        if not self.reference or self.reference[0][0] > 0:
            raise ConfigError("reference schedule must start at t = 0")
        if any(b[0] <= a[0] for a, b in zip(self.reference, self.reference[1:])):
            raise ConfigError("reference schedule times must be strictly increasing")
        if any(v < 0 for _, v in self.reference):
            raise ConfigError("reference values must be non-negative")
        if self.flow.n_turbines != self.n_turbines:
            raise ConfigError(f"flow layout has {self.flow.n_turbines} positions for {self.n_turbines} turbines")
        if self.case is not None:
            select_case(self.case)
        if self.alpha is not None and len(self.alpha) != self.n_turbines:
            raise ConfigError("alpha length must equal n_turbines")
        if self.case is None and self.alpha is None and self.n_turbines > 1:
            raise ConfigError("give either a case id or an explicit alpha")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def turbine_params(self) -> TurbineParams:
        overrides = dict(self.turbine)
        overrides.setdefault("rated_power", self.controller.rated_power)
        overrides.setdefault("generator_efficiency", self.controller.generator_efficiency)
        overrides.setdefault("fine_pitch", self.controller.theta_fine)
        return default_params(self.controller.k_greedy, **overrides)

    def reference_at(self, t: float) -> float:
        value = self.reference[0][1]
        for start, v in self.reference:
            if t >= start:
                value = v
        return value

    def replace(self, **changes) -> ScenarioConfig:
        return dataclasses.replace(self, **changes)


def parse_schedule(text: str) -> Schedule:
    points = []
    for chunk in text.replace(";", ",").split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        t, _, v = chunk.partition(":")
        if not _:
            raise ConfigError(f"schedule entry {chunk!r} must look like 't: value'")
        points.append((float(t), float(v)))
    return tuple(points)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _coerce(raw: str, current):
    if isinstance(current, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if isinstance(current, tuple):
        return _floats(raw)
    return raw


def _override(obj, section: configparser.SectionProxy, skip=()):
    changes = {}
    valid = {f.name for f in dataclasses.fields(obj)}
    for key, raw in section.items():
        if key in skip:
            continue
        if key not in valid:
            raise ConfigError(f"unknown key {key!r} in [{section.name}]")
        changes[key] = _coerce(raw, getattr(obj, key))
    return dataclasses.replace(obj, **changes) if changes else obj


def load_config(path: str | Path) -> ScenarioConfig:
    """Read a scenario file; raises ConfigError on any malformed or unknown entry."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        return _from_parser(parser)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _from_parser(parser: configparser.ConfigParser) -> ScenarioConfig:
    known = {"scenario", "reference", "flow", "turbine", "controller", "steptest"}
    extra = set(parser.sections()) - known
    if extra:
        raise ConfigError(f"unknown sections: {sorted(extra)}")

    sc = parser["scenario"] if parser.has_section("scenario") else {}
    unknown = set(sc) - {"n_turbines", "dt", "duration", "case", "alpha", "mode", "dispatch",
                         "transient", "output"}
    if unknown:
        raise ConfigError(f"unknown keys in [scenario]: {sorted(unknown)}")
    n = int(sc.get("n_turbines", 3))
    kwargs: dict = {"n_turbines": n}
    for key in ("dt", "duration", "transient"):
        if key in sc:
            kwargs[key] = float(sc[key])
    if "alpha" in sc:
        kwargs["alpha"] = _floats(sc["alpha"])
        kwargs["case"] = None
    if "case" in sc:
        kwargs["case"] = int(sc["case"])
    if n == 1 and "case" not in sc:
        kwargs["case"] = None
    if "mode" in sc:
        try:
            kwargs["mode"] = ControlFlag(sc["mode"].strip().upper())
        except ValueError:
            raise ConfigError(f"mode must be I or II, got {sc['mode']!r}") from None
    if "dispatch" in sc:
        choice = sc["dispatch"].strip().lower()
        if choice not in ("uniform", "unsaturated"):
            raise ConfigError("dispatch must be 'uniform' or 'unsaturated'")
        kwargs["dispatch_rescale"] = choice == "unsaturated"
    if "output" in sc:
        kwargs["output"] = sc["output"].strip()

    if parser.has_section("reference") and "schedule" in parser["reference"]:
        kwargs["reference"] = parse_schedule(parser["reference"]["schedule"])

    flow = FlowConfig(positions=tuple(5.0 * i for i in range(n)))
    if parser.has_section("flow"):
        sec = parser["flow"]
        if "positions" in sec:
            flow = dataclasses.replace(flow, positions=_floats(sec["positions"]))
        elif "spacing" in sec:
            s = float(sec["spacing"])
            flow = dataclasses.replace(flow, positions=tuple(s * i for i in range(n)))
        if "wind_schedule" in sec:
            flow = dataclasses.replace(flow, wind_schedule=parse_schedule(sec["wind_schedule"]))
        flow = _override(flow, sec, skip=("positions", "spacing", "wind_schedule"))
    kwargs["flow"] = flow

    if parser.has_section("controller"):
        kwargs["controller"] = _override(ControllerConfig(), parser["controller"])
    if parser.has_section("turbine"):
        valid = {f.name for f in dataclasses.fields(TurbineParams)} - {"cp_max"}
        tur = {}
        for key, raw in parser["turbine"].items():
            if key not in valid:
                raise ConfigError(f"unknown key {key!r} in [turbine]")
            tur[key] = float(raw)
        kwargs["turbine"] = tur
    if parser.has_section("steptest"):
        kwargs["steptest"] = _override(StepTestConfig(), parser["steptest"])
    return ScenarioConfig(**kwargs)
