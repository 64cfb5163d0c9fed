"""Run configuration: dataclasses plus a YAML loader with line/field diagnostics."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import yaml

from .surface import CATALOG_NAMES


class ConfigError(ValueError):
    """Schema violation; the message names the field and, when known, the line."""


@dataclass
class SurfaceSpec:
    name: str = "plane"
    params: Dict[str, Any] = field(default_factory=dict)


@dataclass
class RadiiSpec:
    start: float = 1.0
    stop: float = 8.0
    count: int = 8
    log: bool = False

    def grid(self) -> np.ndarray:
        if self.log:
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)

    @classmethod
    def parse(cls, text: str) -> "RadiiSpec":
        """``START:STOP:COUNT[:log]``."""
        parts = text.split(":")
        if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] not in ("log", "lin")):
            raise ConfigError(f"radii: expected START:STOP:COUNT[:log], got {text!r}")
        try:
            spec = cls(float(parts[0]), float(parts[1]), int(parts[2]), len(parts) == 4 and parts[3] == "log")
        except ValueError as exc:
            raise ConfigError(f"radii: {exc}") from None
        spec.validate()
        return spec

    def validate(self, where: str = "radii") -> None:
        if self.count < 2:
            raise ConfigError(f"{where}.count: need at least 2 radii")
        if not 0 < self.start < self.stop:
            raise ConfigError(f"{where}: radii must be increasing and positive (start < stop)")


@dataclass
class FlowSpec:
    r0: Optional[float] = None       # None: the reported tail radius for c
    t_end: float = 18.0
    step: float = 1e-2
    trajectories: int = 20


@dataclass
class ToneSpec:
    radii: List[float] = field(default_factory=lambda: [5.0, 10.0, 20.0])
    lumped: bool = False


@dataclass
class Tolerances:
    slack: float = 0.05
    ode: float = 1e-8
    eigen_rtol: float = 1e-8
    gauss_bonnet: float = 2e-2
    coarea: float = 2e-2
    flow_bound: float = 1e-6
    critical_grad: float = 1e-6


@dataclass
class OutputSpec:
    dir: str = "out"
    formats: List[str] = field(default_factory=lambda: ["csv", "json"])


@dataclass
class RunConfig:
    surface: SurfaceSpec = field(default_factory=SurfaceSpec)
    chi: Optional[int] = None        # None: the known value for catalog surfaces
    window: Optional[Tuple[float, float, float, float]] = None
    resolution: int = 256
    radii: RadiiSpec = field(default_factory=RadiiSpec)
    c: float = 0.5
    delta: str = "default"
    tail_fraction: float = 0.5
    epsilon: Optional[float] = None
    annulus: Tuple[float, float] = (1.0, 2.0)
    flow: FlowSpec = field(default_factory=FlowSpec)
    tone: ToneSpec = field(default_factory=ToneSpec)
    tolerances: Tolerances = field(default_factory=Tolerances)
    output: OutputSpec = field(default_factory=OutputSpec)
    seed: int = 0

    def validate(self) -> "RunConfig":
        if self.surface.name not in CATALOG_NAMES:
            raise ConfigError(f"surface.name: unknown surface {self.surface.name!r} "
                              f"(choose from {', '.join(CATALOG_NAMES)})")
        if self.resolution < 16:
            raise ConfigError("resolution: must be at least 16")
        self.radii.validate()
        if not 0 < self.c < 1:
            raise ConfigError("c: must lie in (0, 1)")
        if self.chi is not None and not isinstance(self.chi, int):
            raise ConfigError("chi: expected an integer")
        if self.delta not in ("default", "zero"):
            raise ConfigError("delta: 'default' or 'zero'")
        if not 0 < self.tail_fraction <= 1:
            raise ConfigError("tail_fraction: must lie in (0, 1]")
        if self.window is not None and len(self.window) != 4:
            raise ConfigError("window: four numbers u0, u1, v0, v1")
        if len(self.annulus) != 2 or not 0 < self.annulus[0] < self.annulus[1]:
            raise ConfigError("annulus: two increasing positive radii")
        for f in self.output.formats:
            if f not in ("csv", "json"):
                raise ConfigError(f"output.formats: unknown format {f!r}")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTIONS = {"surface": SurfaceSpec, "radii": RadiiSpec, "flow": FlowSpec, "tone": ToneSpec,
             "tolerances": Tolerances, "output": OutputSpec}


def _key_lines(text: str) -> Dict[str, int]:
    """Dotted key path -> 1-based line number from the YAML node tree."""
    lines: Dict[str, int] = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                path = f"{prefix}{k.value}"
                lines[path] = k.start_mark.line + 1
                walk(v, path + ".")

    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines
    walk(root, "")
    return lines


def _coerce(cls, data: Any, path: str, lines: Dict[str, int]):
    def fail(msg, key=path):
        ln = lines.get(key)
        raise ConfigError(f"{key}: {msg}" + (f" (line {ln})" if ln else ""))

    if not isinstance(data, dict):
        fail("expected a mapping")
    names = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        sub = f"{path}.{key}" if path else key
        if key not in names:
            fail(f"unknown field (allowed: {', '.join(names)})", sub)
        if path == "" and key in _SECTIONS:
            kwargs[key] = _coerce(_SECTIONS[key], value, sub, lines)
            continue
        default = names[key].default
        if default is not dataclasses.MISSING and default is not None and value is not None:
            if isinstance(default, bool) and not isinstance(value, bool):
                fail("expected true/false", sub)
            if isinstance(default, (int, float)) and not isinstance(default, bool):
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    fail(f"expected a number, got {value!r}", sub)
                if isinstance(default, int) and not float(value).is_integer():
                    fail(f"expected an integer, got {value!r}", sub)
                value = type(default)(value)
            if isinstance(default, str) and not isinstance(value, str):
                fail("expected a string", sub)
            if isinstance(default, tuple):
                value = tuple(float(v) for v in value)
        if key == "window" and value is not None:
            value = tuple(float(v) for v in value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        fail(str(exc))


def from_dict(data: Dict[str, Any], text: str = "") -> RunConfig:
    lines = _key_lines(text) if text else {}
    cfg = _coerce(RunConfig, data or {}, "", lines)
    try:
        return cfg.validate()
    except ConfigError as exc:
        key = str(exc).split(":")[0]
        ln = lines.get(key)
        if ln:
            raise ConfigError(f"{exc} (line {ln})") from None
        raise


def load(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"not valid YAML: {exc}") from None
    return from_dict(data, text)


def dump(cfg: RunConfig) -> str:
    d = cfg.to_dict()
    for k in ("window", "annulus"):
        if d[k] is not None:
            d[k] = list(d[k])
    return yaml.safe_dump(d, sort_keys=False)
