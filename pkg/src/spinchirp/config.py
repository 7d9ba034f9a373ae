"""Key-value experiment configuration: parsing, validation and rendering.

The grammar is INI-style with flat sections.  Dimensioned values take an
SI-unit suffix ("26.5 GHz", "0.5 mT", "400 us") or are bare numbers in
base units (Hz, T, s).  Parsing is strict: unknown sections, unknown keys
and wrong-dimension units are hard errors, so a misspelled Rabi key can
never silently default to zero.

``render_config`` produces a canonical dump that parses back to an
identical configuration; it is embedded in every output file as the
provenance header.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, replace

from .core import ElectronParams
from .drive import ChirpSchedule, DriveProgram, gaas_species
from .ensemble import MeasurementModel, NuclearFieldModel
from .sweep import SweepConfig

EXPERIMENTS = ("lineshape", "duration", "parity", "fixedfreq", "lz-table",
               "validate-rwa")
OUTPUT_FORMATS = ("csv", "json-lines")

_UNITS = {
    "frequency": {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9},
    "field": {"t": 1.0, "mt": 1e-3, "ut": 1e-6, "nt": 1e-9},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9},
}

# section -> key -> value kind
_SCHEMA = {
    "run": {"experiment": "choice", "seed": "int", "output": "str",
            "format": "choice"},
    "drive": {"f_center": "frequency", "fm_depth": "frequency",
              "duration": "time", "shape": "choice", "rabi_so": "frequency",
              "rabi_hf_as": "frequency", "hf_ratio_ga69": "number",
              "hf_ratio_ga71": "number"},
    "electron": {"g_factor": "number", "t2": "time"},
    "field": {"b_start": "field", "b_stop": "field", "b_step": "field"},
    "nuclear": {"sigma": "field", "correlation_time": "time"},
    "measurement": {"fidelity_up": "number", "fidelity_down": "number",
                    "shots": "int"},
    "ensemble": {"mode": "choice", "mc_samples": "int"},
    "propagation": {"dt": "time"},
    "duration-sweep": {"durations": "time-list"},
    "parity": {"window_centers": "frequency-list", "fm_depth": "frequency"},
    "fixedfreq": {"measurement_time": "time"},
    "lz": {"rabi": "frequency", "ratios": "number-list"},
    "rwa": {"f_larmor": "frequency", "rabi": "frequency",
            "fm_depth": "frequency", "duration": "time"},
}

_PROGRAM_EXPERIMENTS = ("lineshape", "duration", "parity", "fixedfreq")
# hyperfine Rabi and isotope ratios must be spelled out for quantitative
# multi-tone runs; they are never invented
_HF_MANDATORY = ("lineshape", "parity")


class ConfigError(ValueError):
    """Invalid configuration text or values (CLI exit code 1)."""


@dataclass(frozen=True)
class RunConfig:
    """Fully validated description of one experiment run."""

    experiment: str
    seed: int
    output_path: str | None
    output_format: str
    electron: ElectronParams = ElectronParams()
    sweep: SweepConfig | None = None
    hf_params: tuple[float, float, float] | None = None
    durations: tuple[float, ...] | None = None
    parity_centers: tuple[float, ...] | None = None
    parity_fm_depth: float | None = None
    fixedfreq_time: float | None = None
    lz_rabi: float | None = None
    lz_ratios: tuple[float, ...] | None = None
    rwa_f_larmor: float | None = None
    rwa_rabi: float | None = None
    rwa_fm_depth: float | None = None
    rwa_duration: float | None = None

    def with_seed(self, seed: int) -> "RunConfig":
        sweep = None if self.sweep is None else replace(self.sweep, seed=seed)
        return replace(self, seed=seed, sweep=sweep)


def _parse_quantity(text: str, dimension: str, where: str) -> float:
    parts = text.split()
    if len(parts) == 1:
        try:
            return float(parts[0])
        except ValueError as exc:
            raise ConfigError(f"{where}: cannot parse number {text!r}") from exc
    if len(parts) != 2:
        raise ConfigError(f"{where}: expected 'value [unit]', got {text!r}")
    try:
        value = float(parts[0])
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse number {parts[0]!r}") from exc
    unit = parts[1].lower()
    table = _UNITS[dimension]
    if unit not in table:
        for other, tbl in _UNITS.items():
            if unit in tbl:
                raise ConfigError(
                    f"{where}: unit {parts[1]!r} is a {other} unit, "
                    f"expected {dimension}"
                )
        raise ConfigError(f"{where}: unknown unit {parts[1]!r}")
    return value * table[unit]


def _parse_value(kind: str, raw: str, where: str):
    if kind in _UNITS:
        return _parse_quantity(raw, kind, where)
    if kind == "number":
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{where}: cannot parse number {raw!r}") from exc
    if kind == "int":
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{where}: cannot parse integer {raw!r}") from exc
    if kind.endswith("-list"):
        base = kind[:-5]
        items = [s.strip() for s in raw.split(",")]
        if not any(items):
            raise ConfigError(f"{where}: empty list")
        return tuple(_parse_value(base, item, where) for item in items if item)
    return raw.strip()  # choice / str


class _Section:
    """One parsed section with tracked key access."""

    def __init__(self, name, values):
        self.name = name
        self.values = values

    def get(self, key, default=None):
        return self.values.get(key, default)

    def require(self, key):
        if key not in self.values:
            raise ConfigError(f"missing mandatory key '{self.name}.{key}'")
        return self.values[key]


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration document."""
    parser = configparser.ConfigParser(interpolation=None, strict=True,
                                       inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    if parser.defaults():
        raise ConfigError("a [DEFAULT] section is not supported")

    sections: dict[str, _Section] = {}
    for name in parser.sections():
        if name not in _SCHEMA:
            raise ConfigError(f"unknown section [{name}]")
        schema = _SCHEMA[name]
        values = {}
        for key, raw in parser[name].items():
            if key not in schema:
                raise ConfigError(f"unknown key '{name}.{key}'")
            values[key] = _parse_value(schema[key], raw, f"{name}.{key}")
        sections[name] = _Section(name, values)

    def section(name):
        return sections.get(name, _Section(name, {}))

    run = sections.get("run")
    if run is None:
        raise ConfigError("missing [run] section")
    experiment = run.require("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(
            f"run.experiment must be one of {EXPERIMENTS}, got {experiment!r}"
        )
    seed = run.get("seed", 0)
    output_path = run.get("output")
    output_format = run.get("format", "csv")
    if output_format not in OUTPUT_FORMATS:
        raise ConfigError(
            f"run.format must be one of {OUTPUT_FORMATS}, got {output_format!r}"
        )

    try:
        electron = ElectronParams(
            g_factor=section("electron").get("g_factor", -0.339),
            t2=section("electron").get("t2", 100e-6),
        )
        nuclear = NuclearFieldModel(
            sigma=section("nuclear").get("sigma", 0.5e-3),
            correlation_time=section("nuclear").get("correlation_time", 1.0),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    measurement = None
    if "measurement" in sections:
        m = sections["measurement"]
        try:
            measurement = MeasurementModel(
                fidelity_up=m.get("fidelity_up", 0.95),
                fidelity_down=m.get("fidelity_down", 0.80),
                shots=m.get("shots", 1000),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    sweep = None
    hf_params = None
    if experiment in _PROGRAM_EXPERIMENTS:
        d = sections.get("drive")
        if d is None:
            raise ConfigError(f"experiment {experiment!r} needs a [drive] section")
        fld = sections.get("field")
        if fld is None:
            raise ConfigError(f"experiment {experiment!r} needs a [field] section")
        shape = d.get("shape", "up")
        if experiment in _HF_MANDATORY and "rabi_hf_as" not in d.values:
            raise ConfigError(
                f"missing mandatory key 'drive.rabi_hf_as': hyperfine Rabi "
                f"frequencies and isotope ratios must be given explicitly "
                f"for {experiment} runs"
            )
        species = ()
        if "rabi_hf_as" in d.values:
            for ratio_key in ("hf_ratio_ga69", "hf_ratio_ga71"):
                if ratio_key not in d.values:
                    raise ConfigError(
                        f"missing mandatory key 'drive.{ratio_key}' "
                        f"(required alongside drive.rabi_hf_as)"
                    )
            hf_params = (d.values["rabi_hf_as"], d.values["hf_ratio_ga69"],
                         d.values["hf_ratio_ga71"])
            species = gaas_species(*hf_params)
        try:
            schedule = ChirpSchedule(
                f_center=d.require("f_center"),
                fm_depth=d.get("fm_depth", 0.0),
                duration=d.require("duration"),
                shape=shape,
            )
            program = DriveProgram(schedule=schedule,
                                   rabi_so=d.require("rabi_so"),
                                   species=species)
            ens = section("ensemble")
            b_start = fld.require("b_start")
            b_step = fld.get("b_step", 0.25e-3)
            b_stop = fld.get("b_stop", b_start + b_step)
            sweep = SweepConfig(
                b_start=b_start,
                b_stop=b_stop,
                b_step=b_step,
                program=program,
                electron=electron,
                nuclear=nuclear,
                measurement=measurement,
                ensemble_mode=ens.get("mode", "convolution"),
                mc_samples=ens.get("mc_samples", 1),
                seed=seed,
                dt=section("propagation").get("dt"),
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    cfg = RunConfig(experiment=experiment, seed=seed, output_path=output_path,
                    output_format=output_format, electron=electron,
                    sweep=sweep, hf_params=hf_params)

    if experiment == "duration":
        cfg = replace(cfg, durations=section("duration-sweep").require("durations"))
    elif experiment == "parity":
        p = sections.get("parity")
        if p is None:
            raise ConfigError("experiment 'parity' needs a [parity] section")
        cfg = replace(cfg, parity_centers=p.require("window_centers"),
                      parity_fm_depth=p.require("fm_depth"))
    elif experiment == "fixedfreq":
        cfg = replace(cfg, fixedfreq_time=section("fixedfreq").get(
            "measurement_time", 1.0))
    elif experiment == "lz-table":
        lz = section("lz")
        cfg = replace(cfg, lz_rabi=lz.get("rabi", 0.2e6),
                      lz_ratios=lz.get("ratios", (0.1, 0.3, 1.0, 3.0, 10.0)))
    elif experiment == "validate-rwa":
        r = section("rwa")
        cfg = replace(
            cfg,
            rwa_f_larmor=r.get("f_larmor", 200e6),
            rwa_rabi=r.get("rabi", 1e6),
            rwa_fm_depth=r.get("fm_depth", 10e6),
            rwa_duration=r.get("duration", 50e-6),
        )
    return cfg


def parse_config_file(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _fmt(value: float) -> str:
    return repr(float(value))


def render_config(cfg: RunConfig) -> str:
    """Canonical dump of a RunConfig; parses back to an equal RunConfig.

    All quantities are written in base SI units with full precision.
    """
    lines = ["[run]", f"experiment = {cfg.experiment}", f"seed = {cfg.seed}"]
    if cfg.output_path is not None:
        lines.append(f"output = {cfg.output_path}")
    lines.append(f"format = {cfg.output_format}")
    lines += ["", "[electron]",
              f"g_factor = {_fmt(cfg.electron.g_factor)}",
              f"t2 = {_fmt(cfg.electron.t2)}"]

    sw = cfg.sweep
    if sw is not None:
        sched = sw.program.schedule
        lines += ["", "[drive]",
                  f"f_center = {_fmt(sched.f_center)}",
                  f"fm_depth = {_fmt(sched.fm_depth)}",
                  f"duration = {_fmt(sched.duration)}",
                  f"shape = {sched.shape}",
                  f"rabi_so = {_fmt(sw.program.rabi_so)}"]
        if cfg.hf_params is not None:
            lines += [f"rabi_hf_as = {_fmt(cfg.hf_params[0])}",
                      f"hf_ratio_ga69 = {_fmt(cfg.hf_params[1])}",
                      f"hf_ratio_ga71 = {_fmt(cfg.hf_params[2])}"]
        lines += ["", "[field]",
                  f"b_start = {_fmt(sw.b_start)}",
                  f"b_stop = {_fmt(sw.b_stop)}",
                  f"b_step = {_fmt(sw.b_step)}",
                  "", "[nuclear]",
                  f"sigma = {_fmt(sw.nuclear.sigma)}",
                  f"correlation_time = {_fmt(sw.nuclear.correlation_time)}",
                  "", "[ensemble]",
                  f"mode = {sw.ensemble_mode}",
                  f"mc_samples = {sw.mc_samples}"]
        if sw.measurement is not None:
            m = sw.measurement
            lines += ["", "[measurement]",
                      f"fidelity_up = {_fmt(m.fidelity_up)}",
                      f"fidelity_down = {_fmt(m.fidelity_down)}",
                      f"shots = {m.shots}"]
        if sw.dt is not None:
            lines += ["", "[propagation]", f"dt = {_fmt(sw.dt)}"]

    if cfg.durations is not None:
        lines += ["", "[duration-sweep]",
                  "durations = " + ", ".join(_fmt(t) for t in cfg.durations)]
    if cfg.parity_centers is not None:
        lines += ["", "[parity]",
                  "window_centers = " + ", ".join(_fmt(f) for f in cfg.parity_centers),
                  f"fm_depth = {_fmt(cfg.parity_fm_depth)}"]
    if cfg.fixedfreq_time is not None:
        lines += ["", "[fixedfreq]",
                  f"measurement_time = {_fmt(cfg.fixedfreq_time)}"]
    if cfg.lz_rabi is not None:
        lines += ["", "[lz]", f"rabi = {_fmt(cfg.lz_rabi)}",
                  "ratios = " + ", ".join(_fmt(r) for r in cfg.lz_ratios)]
    if cfg.rwa_f_larmor is not None:
        lines += ["", "[rwa]",
                  f"f_larmor = {_fmt(cfg.rwa_f_larmor)}",
                  f"rabi = {_fmt(cfg.rwa_rabi)}",
                  f"fm_depth = {_fmt(cfg.rwa_fm_depth)}",
                  f"duration = {_fmt(cfg.rwa_duration)}"]
    return "\n".join(lines) + "\n"
