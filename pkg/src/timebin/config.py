"""TOML run configuration.

Every dimensioned key carries its unit in the name: ``_gamma`` for rates
and Rabi frequencies, ``_inv_gamma`` (or ``_us`` together with
``params.gamma_per_s``) for times, ``_rad`` / ``_rad2`` for phases and
phase variances, ``_cm`` for the fiber length. A dimensioned key written
without its suffix is rejected.

Sections: ``[params] [write] [reads] [read.N] [design] [grid] [franson]
[sweep] [output]``. See ``configs/`` for complete examples.
"""

from __future__ import annotations

import copy
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .designer import DesignError, DesignTarget
from .dynamics import GridSpec
from .franson import NoiseKind, PhaseNoiseModel
from .pulse_model import (
    ParameterError,
    PhysicalParams,
    PulseShape,
    PulseTrain,
    pulse_exposure,
    write_peak_for_gain,
)


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


PARAM_KEYS = {
    "delta_w_gamma": "delta_W",
    "delta_r_gamma": "delta_R",
    "n_atoms": "N_atoms",
    "chi_gamma": "chi",
    "gs_gamma": "gS",
    "gas_gamma": "gAS",
    "gamma32_gamma": "gamma32",
    "gamma41_gamma": "gamma41",
    "gamma_c_gamma": "gamma_c",
}
PARAM_EXTRA = {"fiber_length_cm", "gamma_per_s", "separation_factor"}

# bare names that must carry a unit suffix, with the suffix to suggest
DIMENSIONED = {
    "delta_w": "_gamma", "delta_r": "_gamma", "chi": "_gamma", "gs": "_gamma", "gas": "_gamma",
    "gamma32": "_gamma", "gamma41": "_gamma", "gamma_c": "_gamma", "gamma": "_per_s",
    "fiber_length": "_cm", "peak": "_gamma", "center": "_inv_gamma", "duration": "_inv_gamma",
    "first_center": "_inv_gamma", "spacing": "_inv_gamma", "mode_width": "_inv_gamma",
    "dt_out": "_inv_gamma", "t_start": "_inv_gamma", "t_end": "_inv_gamma",
    "fixed_step": "_inv_gamma", "phase": "_rad", "phases": "_rad", "variance": "_rad2",
    "variances": "_rad2", "theta_min": "_rad", "theta_max": "_rad",
}

SECTIONS = {"params", "write", "reads", "read", "design", "grid", "franson", "sweep", "output",
            "schema_version"}


@dataclass
class FransonConfig:
    source: str = "ideal"
    bins: int = 3
    weights: tuple[float, ...] | None = None
    spacing: float = 150.0
    mode_width: float = 20.0
    phases: tuple[float, ...] | None = None
    trace_dir: Path | None = None
    noise: NoiseKind = NoiseKind.SHARED_GAUSSIAN
    variances: tuple[float, ...] = (0.0,)
    samples: int = 100_000
    seed: int = 0
    theta_points: int = 121
    theta_min: float = 0.0
    theta_max: float = 2 * math.pi
    workers: int = 1

    def noise_model(self, variance: float) -> PhaseNoiseModel:
        return PhaseNoiseModel(self.noise, variance, self.samples, self.seed)


@dataclass
class DesignConfig:
    target: DesignTarget
    rel_tol: float = 1e-4
    max_iter: int = 50


@dataclass
class SweepConfig:
    key: str
    values: tuple[Any, ...]
    workers: int = 1


@dataclass
class OutputConfig:
    dir: Path = Path("out")
    csv: bool = True
    json: bool = True
    plot_script: bool = True


@dataclass
class RunConfig:
    params: PhysicalParams
    train: PulseTrain | None = None
    design: DesignConfig | None = None
    grid: GridSpec = field(default_factory=GridSpec)
    franson: FransonConfig | None = None
    sweep: SweepConfig | None = None
    output: OutputConfig = field(default_factory=OutputConfig)
    raw: dict = field(default_factory=dict, repr=False)
    base_dir: Path = Path(".")


# ---------------------------------------------------------------- helpers


class _Section:
    """Key reader that tracks consumption and reports unit problems."""

    def __init__(self, name: str, data: dict, gamma_per_s: float | None = None):
        if not isinstance(data, dict):
            raise ConfigError(name, "must be a table")
        self.name = name
        self.data = dict(data)
        self.used: set[str] = set()
        self.gamma_per_s = gamma_per_s
        for k in self.data:
            if k in DIMENSIONED:
                raise ConfigError(
                    f"{name}.{k}", f"dimensioned quantity needs a unit suffix, e.g. '{k}{DIMENSIONED[k]}'"
                )

    def key(self, k: str) -> str:
        return f"{self.name}.{k}"

    def has(self, k: str) -> bool:
        return k in self.data

    def raw(self, k: str, default=None):
        if k in self.data:
            self.used.add(k)
            return self.data[k]
        return default

    def number(self, k: str, default=None) -> float | None:
        v = self.raw(k, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(self.key(k), f"expected a number, got {v!r}")
        return float(v)

    def integer(self, k: str, default=None) -> int | None:
        v = self.raw(k, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(self.key(k), f"expected an integer, got {v!r}")
        return v

    def boolean(self, k: str, default=None) -> bool | None:
        v = self.raw(k, default)
        if v is None:
            return None
        if not isinstance(v, bool):
            raise ConfigError(self.key(k), f"expected true/false, got {v!r}")
        return v

    def numbers(self, k: str) -> tuple[float, ...] | None:
        v = self.raw(k)
        if v is None:
            return None
        if not isinstance(v, list) or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v):
            raise ConfigError(self.key(k), f"expected a list of numbers, got {v!r}")
        return tuple(float(x) for x in v)

    def time(self, base: str, default=None) -> float | None:
        """Time value from '<base>_inv_gamma' or '<base>_us'."""
        k1, k2 = f"{base}_inv_gamma", f"{base}_us"
        if self.has(k1) and self.has(k2):
            raise ConfigError(self.key(k1), f"give either {k1} or {k2}, not both")
        if self.has(k2):
            if self.gamma_per_s is None:
                raise ConfigError(self.key(k2), "microsecond input needs params.gamma_per_s")
            return self.number(k2) * 1e-6 * self.gamma_per_s
        return self.number(k1, default)

    def finish(self) -> None:
        extra = sorted(set(self.data) - self.used)
        if extra:
            raise ConfigError(self.key(extra[0]), "unknown key")


def parse_weights(spec, total: float | None, key: str) -> tuple[tuple[float, ...], float]:
    """Target weights from 'equal J', a comma list, or a TOML list.

    A list is taken as absolute weights when ``total`` is None, otherwise as a
    profile rescaled to ``total``.
    """
    if isinstance(spec, str):
        m = re.fullmatch(r"\s*equal\s+(\d+)\s*", spec)
        if m:
            if total is None:
                raise ConfigError(key, "'equal J' needs design.total_retrieval")
            J = int(m.group(1))
            t = DesignTarget.equal(J, total)
            return t.weights, total
        try:
            spec = [float(x) for x in spec.split(",") if x.strip()]
        except ValueError:
            raise ConfigError(key, f"cannot parse weights {spec!r}") from None
    if not isinstance(spec, list) or not spec:
        raise ConfigError(key, "weights must be 'equal J', a comma list or a list")
    vals = [float(x) for x in spec]
    if total is None:
        return tuple(vals), math.fsum(vals)
    t = DesignTarget.from_profile(vals, total)
    return t.weights, total


# ---------------------------------------------------------------- sections


def _parse_params(sec: _Section) -> tuple[PhysicalParams, float]:
    kw = {}
    for k, attr in PARAM_KEYS.items():
        v = sec.number(k)
        if v is not None:
            kw[attr] = v
    length = sec.number("fiber_length_cm")
    sep = sec.number("separation_factor", 6.0)
    if length is not None:
        if "chi" in kw:
            raise ConfigError(sec.key("fiber_length_cm"), "give either chi_gamma or fiber_length_cm")
        if sec.gamma_per_s is None:
            raise ConfigError(sec.key("fiber_length_cm"), "conversion to chi needs gamma_per_s")
        try:
            kw["chi"] = PhysicalParams.chi_from_length(length, sec.gamma_per_s)
        except ParameterError as e:
            raise ConfigError(sec.key("fiber_length_cm"), str(e)) from None
    sec.raw("gamma_per_s")
    try:
        params = PhysicalParams(**kw)
    except ParameterError as e:
        inv = {v: k for k, v in PARAM_KEYS.items()}
        raise ConfigError(sec.key(inv.get(e.field, e.field)), str(e)) from None
    return params, sep


def _shape(sec: _Section, default_shape="gaussian", **base) -> dict:
    shape = sec.raw("shape", default_shape)
    center = sec.time("center", base.get("center"))
    duration = sec.time("duration", base.get("duration"))
    phase = sec.number("phase_rad", base.get("phase", 0.0))
    if center is None:
        raise ConfigError(sec.key("center_inv_gamma"), "missing")
    if duration is None:
        raise ConfigError(sec.key("duration_inv_gamma"), "missing")
    return {"kind": shape, "center": center, "duration": duration, "phase": phase}


def _make_shape(sec: _Section, fields: dict, peak: float) -> PulseShape:
    try:
        return PulseShape(peak=peak, **fields)
    except ParameterError as e:
        suffix = {"duration": "duration_inv_gamma", "center": "center_inv_gamma",
                  "peak": "peak_gamma", "phase": "phase_rad"}.get(e.field, e.field)
        raise ConfigError(sec.key(suffix), str(e)) from None
    except ValueError as e:
        raise ConfigError(sec.key("shape"), str(e)) from None


def _parse_write(sec: _Section, params: PhysicalParams) -> PulseShape:
    fields = _shape(sec)
    options = [k for k in ("peak_gamma", "integrated_gain", "stokes_number") if sec.has(k)]
    if len(options) > 1:
        raise ConfigError(sec.key(options[1]), f"conflicts with {options[0]}")
    shape = _make_shape(sec, fields, 0.0)
    if not options:
        raise ConfigError(sec.key("peak_gamma"), "missing (or give integrated_gain / stokes_number)")
    opt = options[0]
    value = sec.number(opt)
    if value < 0:
        raise ConfigError(sec.key(opt), "must be >= 0")
    if opt == "peak_gamma":
        return shape.with_peak(value)
    gain = value if opt == "integrated_gain" else math.log1p(value)
    return shape.with_peak(write_peak_for_gain(params, shape, gain))


def _peak_from(shape: PulseShape, params: PhysicalParams, exposure: float) -> float:
    unit = pulse_exposure(params, shape.with_peak(1.0))
    return math.sqrt(exposure / unit)


def _parse_reads(data: dict, params: PhysicalParams, gps, need_peaks: bool):
    """Return (list of shapes, list of section names)."""
    uniform = data.get("reads")
    explicit = data.get("read")
    if uniform is not None and explicit is not None:
        raise ConfigError("reads", "use either [reads] or [read.N] sections, not both")
    shapes, names = [], []
    if uniform is not None:
        sec = _Section("reads", uniform, gps)
        count = sec.integer("count")
        if count is None or count < 0:
            raise ConfigError(sec.key("count"), "missing or negative")
        first = sec.time("first_center")
        spacing = sec.time("spacing")
        if count and first is None:
            raise ConfigError(sec.key("first_center_inv_gamma"), "missing")
        if count > 1 and spacing is None:
            raise ConfigError(sec.key("spacing_inv_gamma"), "missing")
        duration = sec.time("duration")
        kind = sec.raw("shape", "gaussian")
        phases = sec.numbers("phases_rad") or (0.0,) * count
        if len(phases) != count:
            raise ConfigError(sec.key("phases_rad"), f"need {count} phases")
        opts = [k for k in ("peak_gamma", "total_retrieval", "exposure") if sec.has(k)]
        if len(opts) > 1:
            raise ConfigError(sec.key(opts[1]), f"conflicts with {opts[0]}")
        if duration is None:
            raise ConfigError(sec.key("duration_inv_gamma"), "missing")
        for i in range(count):
            fields = {"kind": kind, "center": first + i * (spacing or 0.0),
                      "duration": duration, "phase": phases[i]}
            shapes.append(_make_shape(sec, fields, 0.0))
            names.append("reads")
        if opts:
            opt = opts[0]
            v = sec.number(opt)
            if opt == "peak_gamma":
                peak = v
            else:
                if opt == "total_retrieval":
                    if not 0 < v < 1:
                        raise ConfigError(sec.key(opt), "must lie in (0, 1)")
                    each = -math.log1p(-v) / max(count, 1)
                else:
                    if v <= 0:
                        raise ConfigError(sec.key(opt), "must be > 0")
                    each = v
                peak = _peak_from(shapes[0], params, each) if count else 0.0
            if peak < 0:
                raise ConfigError(sec.key(opt), "must be >= 0")
            shapes = [s.with_peak(peak) for s in shapes]
        elif need_peaks and count:
            raise ConfigError(sec.key("peak_gamma"), "missing (or give total_retrieval / exposure)")
        sec.finish()
    elif explicit is not None:
        if not isinstance(explicit, dict):
            raise ConfigError("read", "must be tables [read.1], [read.2], ...")
        try:
            order = sorted(explicit, key=int)
        except ValueError:
            raise ConfigError("read", "read sections must be numbered [read.1], [read.2], ...") from None
        if [int(k) for k in order] != list(range(1, len(order) + 1)):
            raise ConfigError("read", "read sections must be numbered consecutively from 1")
        for k in order:
            sec = _Section(f"read.{k}", explicit[k], gps)
            fields = _shape(sec)
            shape = _make_shape(sec, fields, 0.0)
            if sec.has("peak_gamma") and sec.has("exposure"):
                raise ConfigError(sec.key("exposure"), "conflicts with peak_gamma")
            if sec.has("peak_gamma"):
                shape = _make_shape(sec, fields, sec.number("peak_gamma"))
            elif sec.has("exposure"):
                e = sec.number("exposure")
                if e <= 0:
                    raise ConfigError(sec.key("exposure"), "must be > 0")
                shape = shape.with_peak(_peak_from(shape, params, e))
            elif need_peaks:
                raise ConfigError(sec.key("peak_gamma"), "missing (or give exposure)")
            sec.finish()
            shapes.append(shape)
            names.append(f"read.{k}")
    return shapes, names


def _forbid_read_peaks(data: dict) -> None:
    sections = []
    if isinstance(data.get("reads"), dict):
        sections.append(("reads", data["reads"]))
    if isinstance(data.get("read"), dict):
        sections += [(f"read.{k}", v) for k, v in data["read"].items() if isinstance(v, dict)]
    for name, sec in sections:
        for k in ("peak_gamma", "total_retrieval", "exposure"):
            if k in sec:
                raise ConfigError(
                    f"{name}.{k}", "a design run takes read timing only; peaks come from [design]"
                )


def _parse_grid(sec: _Section) -> GridSpec:
    spec = GridSpec(
        t_start=sec.time("t_start"),
        t_end=sec.time("t_end"),
        dt_out=sec.time("dt_out"),
        rtol=sec.number("rtol", 1e-8),
        atol=sec.number("atol", 1e-10),
        fixed_step=sec.time("fixed_step"),
        initial_n_sp=sec.number("initial_n_sp", 0.0),
    )
    for k, v in (("dt_out_inv_gamma", spec.dt_out), ("fixed_step_inv_gamma", spec.fixed_step)):
        if v is not None and not v > 0:
            raise ConfigError(sec.key(k), "must be > 0")
    if spec.rtol <= 0 or spec.atol <= 0:
        raise ConfigError(sec.key("rtol"), "tolerances must be > 0")
    if spec.initial_n_sp < 0:
        raise ConfigError(sec.key("initial_n_sp"), "must be >= 0")
    sec.finish()
    return spec


def _parse_franson(sec: _Section, base_dir: Path) -> FransonConfig:
    fc = FransonConfig()
    fc.source = sec.raw("source", "ideal")
    if fc.source not in ("ideal", "trace"):
        raise ConfigError(sec.key("source"), "must be 'ideal' or 'trace'")
    if fc.source == "trace":
        td = sec.raw("trace_dir")
        if not td:
            raise ConfigError(sec.key("trace_dir"), "required when source = 'trace'")
        fc.trace_dir = (base_dir / td) if not Path(td).is_absolute() else Path(td)
    fc.bins = sec.integer("bins", 3)
    if fc.bins < 1:
        raise ConfigError(sec.key("bins"), "must be >= 1")
    fc.weights = sec.numbers("weights")
    if fc.weights is not None and (len(fc.weights) != fc.bins or min(fc.weights) < 0 or sum(fc.weights) <= 0):
        raise ConfigError(sec.key("weights"), f"need {fc.bins} non-negative weights with positive sum")
    fc.spacing = sec.time("spacing", fc.spacing)
    fc.mode_width = sec.time("mode_width", fc.mode_width)
    if fc.spacing <= 0 or fc.mode_width <= 0:
        raise ConfigError(sec.key("spacing_inv_gamma"), "spacing and mode width must be > 0")
    fc.phases = sec.numbers("phases_rad")
    if fc.phases is not None and fc.source == "ideal" and len(fc.phases) != fc.bins:
        raise ConfigError(sec.key("phases_rad"), f"need {fc.bins} phases")
    try:
        fc.noise = NoiseKind(sec.raw("noise", "shared_gaussian"))
    except ValueError:
        raise ConfigError(sec.key("noise"), "must be none, shared_gaussian or iid_gaussian") from None
    if sec.has("variance_rad2") and sec.has("variances_rad2"):
        raise ConfigError(sec.key("variance_rad2"), "conflicts with variances_rad2")
    if sec.has("variance_rad2"):
        fc.variances = (sec.number("variance_rad2"),)
    else:
        fc.variances = sec.numbers("variances_rad2") or (0.0,)
    if any(v < 0 for v in fc.variances):
        raise ConfigError(sec.key("variances_rad2"), "variances must be >= 0")
    fc.samples = sec.integer("samples", fc.samples)
    if fc.samples < 1:
        raise ConfigError(sec.key("samples"), "must be >= 1")
    fc.seed = sec.integer("seed", 0)
    if not 0 <= fc.seed < 2**64:
        raise ConfigError(sec.key("seed"), "must be a 64-bit unsigned integer")
    fc.theta_points = sec.integer("theta_points", 121)
    if fc.theta_points < 2:
        raise ConfigError(sec.key("theta_points"), "must be >= 2")
    fc.theta_min = sec.number("theta_min_rad", 0.0)
    fc.theta_max = sec.number("theta_max_rad", 2 * math.pi)
    fc.workers = sec.integer("workers", 1)
    sec.finish()
    return fc


def _parse_design(sec: _Section, templates) -> DesignConfig:
    total = sec.number("total_retrieval")
    spec = sec.raw("weights")
    if spec is None:
        raise ConfigError(sec.key("weights"), "missing")
    try:
        weights, total = parse_weights(spec, total, sec.key("weights"))
    except DesignError as e:
        raise ConfigError(sec.key("total_retrieval"), str(e)) from None
    refine = sec.boolean("refine", False)
    rel_tol = sec.number("rel_tol", 1e-4)
    max_iter = sec.integer("max_iter", 50)
    sec.finish()
    if templates and len(templates) != len(weights):
        raise ConfigError(sec.key("weights"), f"{len(weights)} weights for {len(templates)} read slots")
    try:
        target = DesignTarget(weights, total, tuple(templates), refine)
    except DesignError as e:
        raise ConfigError(sec.key("total_retrieval" if "total" in str(e) else "weights"), str(e)) from None
    return DesignConfig(target, rel_tol, max_iter)


def parse_config(data: dict, base_dir: Path | str = ".") -> RunConfig:
    base_dir = Path(base_dir)
    for k in data:
        if k not in SECTIONS:
            raise ConfigError(k, "unknown section")
    raw_params = data.get("params", {})
    gps = raw_params.get("gamma_per_s") if isinstance(raw_params, dict) else None
    if gps is not None and (isinstance(gps, bool) or not isinstance(gps, (int, float)) or gps <= 0):
        raise ConfigError("params.gamma_per_s", "must be a positive number")
    psec = _Section("params", raw_params, gps)
    params, sep = _parse_params(psec)
    psec.finish()

    has_design = "design" in data
    train = None
    design = None
    if "write" in data:
        wsec = _Section("write", data["write"], gps)
        write = _parse_write(wsec, params)
        wsec.finish()
        if has_design:
            _forbid_read_peaks(data)
        reads, names = _parse_reads(data, params, gps, need_peaks=not has_design)
        try:
            train = PulseTrain(write, tuple(reads), sep)
        except ParameterError as e:
            m = re.match(r"reads\[(\d+)\]\.(\w+)", e.field)
            key = f"{names[int(m.group(1))]}.{m.group(2)}_inv_gamma" if m else e.field
            raise ConfigError(key, str(e)) from None
    elif any(k in data for k in ("reads", "read")):
        raise ConfigError("write", "a [write] section is required with read pulses")

    if has_design:
        if train is None or not train.reads:
            raise ConfigError("design", "needs [write] and read-slot timing ([reads] or [read.N])")
        design = _parse_design(_Section("design", data["design"]), train.reads)

    grid = _parse_grid(_Section("grid", data.get("grid", {}), gps))
    franson = None
    if "franson" in data:
        franson = _parse_franson(_Section("franson", data["franson"], gps), base_dir)

    sweep = None
    if "sweep" in data:
        ssec = _Section("sweep", data["sweep"])
        key = ssec.raw("key")
        values = ssec.raw("values")
        if values is None and ssec.has("start"):
            start, stop = ssec.number("start"), ssec.number("stop")
            num = ssec.integer("num")
            if stop is None or num is None or num < 0:
                raise ConfigError(ssec.key("num"), "start/stop/num must all be given")
            values = [start + (stop - start) * i / max(num - 1, 1) for i in range(num)]
        if not isinstance(key, str) or "." not in key:
            raise ConfigError(ssec.key("key"), "expected 'section.key'")
        if not isinstance(values, list):
            raise ConfigError(ssec.key("values"), "expected a list")
        sweep = SweepConfig(key, tuple(values), ssec.integer("workers", 1))
        ssec.finish()
        check_sweep_key(data, key)

    osec = _Section("output", data.get("output", {}))
    out = OutputConfig(
        dir=base_dir / osec.raw("dir", "out"),
        csv=osec.boolean("csv", True),
        json=osec.boolean("json", True),
        plot_script=osec.boolean("plot_script", True),
    )
    osec.finish()
    return RunConfig(params, train, design, grid, franson, sweep, out, copy.deepcopy(data), base_dir)


def check_sweep_key(data: dict, key: str) -> None:
    section, _, name = key.partition(".")
    allowed = {
        "params": set(PARAM_KEYS) | PARAM_EXTRA,
        "write": {"peak_gamma", "integrated_gain", "stokes_number", "center_inv_gamma",
                  "duration_inv_gamma", "center_us", "duration_us"},
        "reads": {"peak_gamma", "total_retrieval", "exposure", "spacing_inv_gamma",
                  "duration_inv_gamma", "first_center_inv_gamma", "count"},
        "grid": {"fixed_step_inv_gamma", "dt_out_inv_gamma", "rtol", "atol", "initial_n_sp"},
    }
    if section not in allowed or name not in allowed[section]:
        raise ConfigError(f"sweep.key={key}", "unknown or non-sweepable key")
    if section not in data and section != "params":
        raise ConfigError(f"sweep.key={key}", f"section [{section}] absent from config")


def with_override(data: dict, key: str, value) -> dict:
    """Copy of ``data`` with one dotted key replaced; mutually exclusive
    alternatives in the same section are dropped."""
    out = copy.deepcopy(data)
    section, _, name = key.partition(".")
    sec = out.setdefault(section, {})
    groups = [
        {"peak_gamma", "integrated_gain", "stokes_number"},
        {"peak_gamma", "total_retrieval", "exposure"},
        {"chi_gamma", "fiber_length_cm"},
    ]
    for g in groups:
        if name in g:
            for other in g - {name}:
                sec.pop(other, None)
    sec[name] = value
    return out


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(str(path), f"invalid TOML: {e}") from None
    return parse_config(data, path.parent)


# ---------------------------------------------------------------- emit


def params_section(params: PhysicalParams, separation: float) -> dict:
    out = {k: float(getattr(params, attr)) for k, attr in PARAM_KEYS.items()}
    out["separation_factor"] = float(separation)
    return out


def shape_section(p: PulseShape) -> dict:
    return {
        "shape": p.kind.value,
        "center_inv_gamma": float(p.center),
        "duration_inv_gamma": float(p.duration),
        "peak_gamma": float(p.peak),
        "phase_rad": float(p.phase),
    }


def train_sections(train: PulseTrain) -> dict:
    out: dict = {"write": shape_section(train.write)}
    if train.reads:
        out["read"] = {str(i): shape_section(r) for i, r in enumerate(train.reads, start=1)}
    return out


def grid_section(spec: GridSpec) -> dict:
    out: dict = {"rtol": spec.rtol, "atol": spec.atol, "initial_n_sp": spec.initial_n_sp}
    for k, v in (("t_start_inv_gamma", spec.t_start), ("t_end_inv_gamma", spec.t_end),
                 ("dt_out_inv_gamma", spec.dt_out), ("fixed_step_inv_gamma", spec.fixed_step)):
        if v is not None:
            out[k] = v
    return out


def train_from_sections(data: dict, separation: float) -> PulseTrain:
    """Rebuild a train from :func:`train_sections` output (peaks explicit)."""
    write = PulseShape(**_plain(data["write"]))
    reads = [PulseShape(**_plain(data["read"][k])) for k in sorted(data.get("read", {}), key=int)]
    return PulseTrain(write, tuple(reads), separation)


def _plain(sec: dict) -> dict:
    return {
        "kind": sec["shape"],
        "center": sec["center_inv_gamma"],
        "duration": sec["duration_inv_gamma"],
        "peak": sec["peak_gamma"],
        "phase": sec.get("phase_rad", 0.0),
    }
