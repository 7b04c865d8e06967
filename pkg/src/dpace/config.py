"""
INI configuration for the command-line pipeline, and the scenario file format.

A pipeline config has the sections ``[radio]``, ``[impairments]``,
``[estimator]``, ``[trace]``, ``[classifier]``, ``[io]`` and ``[pipeline]``;
every key is optional and unknown sections or keys are rejected.  ``auto``
stands for a value derived at run time (``None`` in memory).

A scenario file describes the moving targets either with activity presets

    [scenario]
    duration_s = 2.0

    [target.1]
    activity = constant
    v_mps = 1.0
    a_mps2 = 0.5

placed in the default multipath geometry, or with explicit paths

    [path.1]
    kind = dynamic
    amplitude = 0.1
    tof_s = 2e-8
    pieces = 1.0 1.0 0.5; 1.0 1.5 0.0

where ``pieces`` lists ``duration v0 a`` triples.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from .estimator import EstimatorConfig
from .pipeline import TraceConfig
from .scenarios import ACTIVITIES, DEFAULT_IMPAIRMENTS, DYNAMIC_AMPLITUDE, activity_profile, make_scenario, \
    noise_power_for_snr
from .svm import DEFAULT_C, DEFAULT_GAMMA
from .synth import ImpairmentSpec, KinematicProfile, PathSpec, RadioConfig, Scenario


class ConfigError(ValueError):
    """A config or scenario file is malformed or holds invalid values."""


AUTO = "auto"


@dataclass(frozen=True)
class ImpairmentConfig:
    pdd_s: float = DEFAULT_IMPAIRMENTS["pdd_s"]
    sfo_s: float = DEFAULT_IMPAIRMENTS["sfo_s"]
    cfo_cycles: float = DEFAULT_IMPAIRMENTS["cfo_cycles"]
    snr_db: Optional[float] = 20.0  # auto = noiseless


@dataclass(frozen=True)
class ClassifierConfig:
    gamma: Optional[float] = DEFAULT_GAMMA  # auto = cross-validated grid search
    C: Optional[float] = DEFAULT_C
    tol: float = 1e-5
    cv_folds: int = 5
    gamma_grid: tuple = tuple(2.0 ** k for k in range(-8, 0))
    C_grid: tuple = (1.0, 10.0, 100.0)


@dataclass(frozen=True)
class IoConfig:
    """File names; relative names resolve against the run directory (``--out``)."""

    stream: str = "stream.dpac"
    truth: str = "truth.csv"
    events: str = "events.csv"
    peaks: str = "peaks.csv"
    plane_prefix: str = "plane_"
    windows: tuple = (0,)  # packet index of each window dumped by ``estimate``
    traces: str = "traces.csv"
    features: str = "features.csv"
    model: str = "model.txt"
    detections: str = "detections.csv"
    eval: str = "eval.csv"
    summary: str = "summary.txt"
    train_runs: tuple = ()  # run directories whose features train the model; empty = this run
    eval_runs: tuple = ()  # run directories aggregated by ``eval``; empty = this run


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "scenario.ini"  # relative to the config file
    seed: int = 0
    trace_id: Optional[str] = None  # auto = name of the run directory


@dataclass(frozen=True)
class PipelineConfig:
    radio: RadioConfig = field(default_factory=RadioConfig)
    impairments: ImpairmentConfig = field(default_factory=ImpairmentConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    trace: TraceConfig = field(default_factory=TraceConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    io: IoConfig = field(default_factory=IoConfig)
    pipeline: RunConfig = field(default_factory=RunConfig)
    base_dir: Path = field(default=Path("."), compare=False)

    @property
    def scenario_path(self) -> Path:
        p = Path(self.pipeline.scenario)
        return p if p.is_absolute() else self.base_dir / p


SECTIONS = ("radio", "impairments", "estimator", "trace", "classifier", "io", "pipeline")

# ---------------------------------------------------------------- value codecs


def _optional(parse):
    def p(text):
        return None if text.strip().lower() == AUTO else parse(text)
    return p


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int(text):
    return int(text.strip())


def _float(text):
    return float(text.strip())


def _str(text):
    return text.strip()


def _list(parse):
    def p(text):
        return tuple(parse(x) for x in text.replace(",", " ").split())
    return p


_PARSERS = {
    "float": _float,
    "int": _int,
    "str": _str,
    "bool": _bool,
    "Optional[float]": _optional(_float),
    "Optional[int]": _optional(_int),
    "Optional[str]": _optional(_str),
    "Optional[tuple]": _optional(_list(_int)),
}

# tuple-valued fields need their element type spelled out
_TUPLE_ELEMENTS = {
    ("classifier", "gamma_grid"): _float,
    ("classifier", "C_grid"): _float,
    ("io", "windows"): _int,
    ("io", "train_runs"): _str,
    ("io", "eval_runs"): _str,
}


def _format(value) -> str:
    if value is None:
        return AUTO
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ", ".join(_format(v) for v in value)
    return str(value)


def _section_fields(cls):
    return {f.name: f for f in fields(cls) if f.init}


def _parse_section(section, cls, items):
    known = _section_fields(cls)
    kw = {}
    for key, text in items:
        if key not in known:
            raise ConfigError(f"unknown key '{key}' in section [{section}]")
        ann = known[key].type
        if ann == "tuple":
            parse = _list(_TUPLE_ELEMENTS.get((section, key), _str))
        elif ann in _PARSERS:
            parse = _PARSERS[ann]
        else:
            raise ConfigError(f"[{section}] {key}: unsupported field type {ann}")
        try:
            kw[key] = parse(text)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from None
    try:
        return cls(**kw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{section}]: {exc}") from None


def _reader():
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case sensitive (W, C)
    return cp


def parse_config(text: str, base_dir=".") -> PipelineConfig:
    cp = _reader()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    for name in cp.sections():
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
    kw = {}
    for f in fields(PipelineConfig):
        if f.name in SECTIONS and cp.has_section(f.name):
            default = f.default_factory()
            kw[f.name] = _parse_section(f.name, type(default), cp.items(f.name))
    return PipelineConfig(**kw, base_dir=Path(base_dir))


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, path.parent)


def format_config(cfg: PipelineConfig) -> str:
    """INI text listing every field; ``parse_config(format_config(c)) == c``."""
    out = []
    for name in SECTIONS:
        out.append(f"[{name}]")
        section = getattr(cfg, name)
        for key in _section_fields(type(section)):
            out.append(f"{key} = {_format(getattr(section, key))}")
        out.append("")
    return "\n".join(out)


def with_seed(cfg: PipelineConfig, seed: Optional[int]) -> PipelineConfig:
    if seed is None:
        return cfg
    return replace(cfg, pipeline=replace(cfg.pipeline, seed=int(seed)))


def impairment_spec(imp: ImpairmentConfig, reference_amplitude: float = DYNAMIC_AMPLITUDE) -> ImpairmentSpec:
    return ImpairmentSpec(imp.pdd_s, imp.sfo_s, imp.cfo_cycles, noise_power_for_snr(imp.snr_db, reference_amplitude))


# ---------------------------------------------------------------- scenario files

_PRESET_KEYS = {
    "activity": _str, "v_mps": _float, "a_mps2": _float, "amplitude": _float, "direction": _float,
    "n_steps": _int, "rest_s": _float, "step_s": _float, "accel_amp": _float, "jitter": _float,
    "fall_peak": _float, "transition_s": _float, "resume_steps": _int,
}
_PATH_KEYS = {"kind": _str, "amplitude": complex, "tof_s": _float, "pieces": _str}
_SCENARIO_KEYS = {"duration_s": _float, "layout_seed": _int, "static_paths": _int}


def _typed(section, items, schema):
    out = {}
    for key, text in items:
        if key not in schema:
            raise ConfigError(f"unknown key '{key}' in section [{section}]")
        try:
            out[key] = schema[key](text.strip())
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from None
    return out


def _pieces(section, text):
    pieces = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        vals = chunk.split()
        if len(vals) != 3:
            raise ConfigError(f"[{section}] pieces: expected 'duration v0 a' triples, got {chunk.strip()!r}")
        try:
            pieces.append(tuple(float(v) for v in vals))
        except ValueError:
            raise ConfigError(f"[{section}] pieces: non-numeric entry in {chunk.strip()!r}") from None
    try:
        return KinematicProfile(tuple(pieces))
    except ValueError as exc:
        raise ConfigError(f"[{section}] pieces: {exc}") from None


def _indexed(cp, prefix):
    out = []
    for name in cp.sections():
        if name.startswith(prefix):
            idx = name[len(prefix):]
            if not idx.isdigit():
                raise ConfigError(f"section [{name}] needs a numeric index")
            out.append((int(idx), name))
    return [name for _, name in sorted(out)]


def _preset_profile(section, spec, scenario_duration):
    spec = dict(spec)
    kind = spec.pop("activity", None)
    amp = spec.pop("amplitude", DYNAMIC_AMPLITUDE)
    if kind is None:
        raise ConfigError(f"[{section}] needs an 'activity' key")
    if kind == "constant":
        extra = set(spec) - {"v_mps", "a_mps2"}
        if extra:
            raise ConfigError(f"[{section}] key '{sorted(extra)[0]}' does not apply to a constant target")
        if scenario_duration is None:
            raise ConfigError(f"[{section}] constant targets need [scenario] duration_s")
        return KinematicProfile.constant(spec.get("v_mps", 1.0), spec.get("a_mps2", 0.0), scenario_duration), amp, None
    if kind not in ACTIVITIES:
        raise ConfigError(f"[{section}] unknown activity {kind!r}")
    if "a_mps2" in spec:
        raise ConfigError(f"[{section}] key 'a_mps2' only applies to constant targets")
    if "v_mps" in spec:
        spec["v_mean"] = spec.pop("v_mps")
    try:
        prof, event = activity_profile(kind, **spec)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{section}] {exc}") from None
    return prof, amp, event


def parse_scenario(text: str, radio: RadioConfig = RadioConfig(), impairments: ImpairmentConfig = ImpairmentConfig(),
                   seed: int = 0):
    """Build a :class:`Scenario` from scenario-file text.

    Returns (scenario, events) where events lists (dynamic_row, kind,
    t_start, t_end) for every fall in the file.
    """
    cp = _reader()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed scenario: {exc}") from None
    for name in cp.sections():
        if name != "scenario" and not name.startswith(("target.", "path.")):
            raise ConfigError(f"unknown section [{name}]")
    head = _typed("scenario", cp.items("scenario"), _SCENARIO_KEYS) if cp.has_section("scenario") else {}
    duration = head.get("duration_s")
    if duration is not None and not duration > 0:
        raise ConfigError("[scenario] duration_s must be positive")
    targets = _indexed(cp, "target.")
    paths = _indexed(cp, "path.")
    if targets and paths:
        raise ConfigError("use either [target.N] presets or explicit [path.N] sections, not both")
    if not targets and not paths:
        raise ConfigError("empty channel: the scenario defines no target or path")
    events = []
    if targets:
        profiles, amps = [], []
        for row, name in enumerate(targets):
            prof, amp, ev = _preset_profile(name, _typed(name, cp.items(name), _PRESET_KEYS), duration)
            profiles.append(prof)
            amps.append(amp)
            if ev is not None:
                events.append((row, "fall", ev[0], ev[1]))
        if duration is None:
            duration = min(p.duration for p in profiles)
        short = [t for t, p in zip(targets, profiles) if p.duration < duration - 1e-9]
        if short:
            raise ConfigError(f"[{short[0]}] activity is shorter than the scenario duration")
        snr_ref = max(amps)
        sc = make_scenario(profiles, duration, radio=radio, snr_db=None, amplitudes=amps, seed=seed,
                           layout_seed=head.get("layout_seed", seed), n_static=head.get("static_paths", 2))
        sc = replace(sc, impairments=impairment_spec(impairments, snr_ref))
    else:
        if duration is None:
            raise ConfigError("explicit paths need [scenario] duration_s")
        specs = []
        for name in paths:
            spec = _typed(name, cp.items(name), _PATH_KEYS)
            prof = _pieces(name, spec["pieces"]) if "pieces" in spec else None
            try:
                specs.append(PathSpec(spec.get("kind", "dynamic"), spec.get("amplitude", 1.0),
                                      spec.get("tof_s", 0.0), prof))
            except ValueError as exc:
                raise ConfigError(f"[{name}] {exc}") from None
        dyn = [abs(complex(p.amplitude)) for p in specs if p.kind == "dynamic"]
        sc = Scenario(radio, tuple(specs), impairment_spec(impairments, max(dyn, default=DYNAMIC_AMPLITUDE)),
                      duration, seed)
    if sc.n_packets < 1:
        raise ConfigError("scenario is shorter than one packet")
    return sc, events


def load_scenario(path, radio: RadioConfig = RadioConfig(), impairments: ImpairmentConfig = ImpairmentConfig(),
                  seed: int = 0):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc.strerror}") from None
    return parse_scenario(text, radio, impairments, seed)

