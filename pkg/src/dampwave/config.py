"""Plain-text run configuration: INI sections structure, grid, data, stepper, experiment.

Every key is typed and validated; unknown sections or keys are errors that
carry the line number.  ``echo()`` renders a canonical mapping that parses
back to an identical configuration.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .evolution import ConfigError, SimulationConfig
from .experiments import ExperimentSpec
from .graded import GradedStructure, new_graded
from .spectral import Grid


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in re.split(r"[,\s]+", text.strip()) if x)


def _ints(text: str) -> tuple:
    return tuple(int(x) for x in re.split(r"[,\s]+", text.strip()) if x)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _order(text: str) -> str:
    t = text.strip().lower()
    if t not in ("etd1", "etd2"):
        raise ValueError(f"order must be etd1 or etd2, got {text!r}")
    return t


# section -> key -> (parser, default)
SCHEMA = {
    "structure": {
        "weights": (_ints, (1,)),
        "coeffs": (_floats, (1.0,)),
        "nu0": (int, 1),
    },
    "grid": {
        "box": (_floats, (2000.0,)),
        "points": (_ints, (8192,)),
    },
    "data": {
        "p": (float, 2.0),
        "epsilon": (float, 0.5),
        "gamma": (float, 0.25),
        "c1": (float, 1.0),
    },
    "stepper": {
        "dt": (float, 0.05),
        "t_max": (float, 100.0),
        "order": (_order, "etd1"),
        "dealias": (_bool, False),
        "blowup_threshold": (float, 1e8),
        "adaptive": (_bool, False),
        "cfl": (float, 0.05),
        "dt_max": (float, 0.5),
        "growth": (float, 0.0),
        "sample_stride": (int, 10),
        "snapshot_stride": (int, 0),
        "s": (float, 1.0),
        "max_steps": (int, 50_000_000),
    },
    "experiment": {
        "s": (float, 0.0),
        "eps_list": (_floats, ()),
        "p_list": (_floats, ()),
        "R_list": (_floats, ()),
        "epsilon": (float, 0.25),
        "box": (float, 2000.0),
        "dx": (float, 0.25),
        "q": (float, 4.0),
        "fields": (int, 100),
        "points": (int, 32),
        "band": (int, 10),
        "delta": (float, 0.1),
        "big_n": (float, 10.0),
        "c": (float, 0.25),
        "seed": (int, 0),
    },
}


def _render(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_render(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class Config:
    values: dict
    explicit: set = field(default_factory=set)
    source: str = "<defaults>"

    def __getitem__(self, dotted: str):
        section, key = dotted.split(".", 1)
        return self.values[section][key]

    def is_set(self, dotted: str) -> bool:
        return dotted in self.explicit

    def __eq__(self, other) -> bool:
        return isinstance(other, Config) and self.values == other.values

    def echo(self) -> dict:
        return {sec: {k: _render(v) for k, v in keys.items()} for sec, keys in self.values.items()}

    def to_ini(self) -> str:
        lines = []
        for sec, keys in self.echo().items():
            lines.append(f"[{sec}]")
            lines.extend(f"{k} = {v}" for k, v in keys.items())
            lines.append("")
        return "\n".join(lines)

    def structure(self) -> GradedStructure:
        s = self.values["structure"]
        return new_graded(s["weights"], s["coeffs"], s["nu0"])

    def grid(self, gs: GradedStructure | None = None) -> Grid:
        gs = gs or self.structure()
        box, points = self.values["grid"]["box"], self.values["grid"]["points"]
        if len(box) == 1:
            box = tuple(box[0] ** w for w in gs.weights)
        if len(points) == 1:
            points = points * gs.n
        if len(box) != gs.n or len(points) != gs.n:
            raise ConfigError(f"grid needs 1 or {gs.n} entries: got {len(box)} box lengths "
                              f"and {len(points)} point counts")
        return Grid(box, points)

    def simulation(self) -> SimulationConfig:
        gs = self.structure()
        d, st = self.values["data"], self.values["stepper"]
        return SimulationConfig(
            gs, self.grid(gs), p=d["p"], epsilon=d["epsilon"], gamma=d["gamma"], c1=d["c1"],
            dt=st["dt"], t_max=st["t_max"], order=st["order"], dealias=st["dealias"],
            blowup_threshold=st["blowup_threshold"], adaptive=st["adaptive"], cfl=st["cfl"],
            dt_max=st["dt_max"], growth=st["growth"], sample_stride=st["sample_stride"],
            snapshot_stride=st["snapshot_stride"], s=st["s"], max_steps=st["max_steps"],
        ).validate()

    def experiment(self, kind: str, defaults: dict | None = None, jobs: int = 1) -> ExperimentSpec:
        """ExperimentSpec for ``kind``; ``defaults`` fill keys the file leaves unset.

        ``defaults`` keys are dotted (``data.p``, ``experiment.eps_list``, ...).
        """
        defaults = defaults or {}

        def pick(dotted):
            # empty lists in a file count as unset
            if dotted in defaults and (not self.is_set(dotted) or self[dotted] == ()):
                return defaults[dotted]
            return self[dotted]

        gs = self.structure()
        if "structure" in defaults and not any(k.startswith("structure.") for k in self.explicit):
            gs = defaults["structure"]
        return ExperimentSpec(
            kind=kind, gs=gs, gamma=pick("data.gamma"), s=pick("experiment.s"), p=pick("data.p"),
            eps_list=tuple(pick("experiment.eps_list")), p_list=tuple(pick("experiment.p_list")),
            R_list=tuple(pick("experiment.R_list")), epsilon=pick("experiment.epsilon"),
            t_max=pick("stepper.t_max"), dt=pick("stepper.dt"), cfl=pick("stepper.cfl"),
            dt_max=pick("stepper.dt_max"), growth=pick("stepper.growth"),
            order=pick("stepper.order"), box=pick("experiment.box"), dx=pick("experiment.dx"),
            q=pick("experiment.q"), fields=pick("experiment.fields"),
            points=pick("experiment.points"), band=pick("experiment.band"),
            delta=pick("experiment.delta"), big_n=pick("experiment.big_n"),
            c=pick("experiment.c"), seed=pick("experiment.seed"), jobs=jobs,
        ).validate()


def _line_numbers(text: str) -> dict:
    """(section, key) -> 1-based line number, for error messages."""
    out = {}
    section = None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            out.setdefault((section, None), no)
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", s)
        if m and section is not None:
            out[(section, m.group(1).strip())] = no
    return out


def defaults() -> Config:
    return Config({sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()})


def _assign(cfg: Config, section: str, key: str, raw: str, where: str):
    if section not in SCHEMA:
        raise ConfigError(f"{where}: unknown section [{section}]; known: {', '.join(SCHEMA)}")
    if key not in SCHEMA[section]:
        raise ConfigError(f"{where}: unknown key '{key}' in [{section}]; "
                          f"known: {', '.join(SCHEMA[section])}")
    parser, _ = SCHEMA[section][key]
    try:
        cfg.values[section][key] = parser(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {section}.{key}: {exc}") from None
    cfg.explicit.add(f"{section}.{key}")


def parse_config(text: str, source: str = "<string>") -> Config:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        # configparser messages already name the offending line
        raise ConfigError(f"{source}: parse error: {exc}") from None
    lines = _line_numbers(text)
    cfg = defaults()
    cfg.source = source
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{source}, line {lines.get((section, None), '?')}: unknown "
                              f"section [{section}]; known: {', '.join(SCHEMA)}")
        for key, raw in cp.items(section):
            _assign(cfg, section, key, raw, f"{source}, line {lines.get((section, key), '?')}")
    return cfg


def load_config(path) -> Config:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return parse_config(text, str(path))


def apply_overrides(cfg: Config, overrides) -> Config:
    """Apply ``section.key=value`` strings; later entries win."""
    for item in overrides or ():
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        dotted, raw = item.split("=", 1)
        section, key = dotted.strip().split(".", 1)
        _assign(cfg, section, key, raw.strip(), f"override {item!r}")
    return cfg


def from_echo(echo: dict) -> Config:
    """Rebuild a configuration from ``Config.echo()`` output."""
    cfg = defaults()
    for section, keys in echo.items():
        for key, raw in keys.items():
            _assign(cfg, section, key, raw, "echo")
    return cfg


def geometric(lo: float, hi: float, n: int) -> tuple:
    return tuple(float(x) for x in np.geomspace(lo, hi, n))
