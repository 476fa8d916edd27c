"""Experiment spec files: flat ``key = value`` text with ``[section]`` headers.

Example::

    # Fig-1 style sweep
    [experiment]
    kind = coverage_sweep
    seed = 42
    trials = 100000

    [channel]
    alpha = 3

    [sweep]
    axis = beta
    start = -30
    stop = 0
    steps = 16
    series = rho_jammer_factor
    values = 1, 2, 4

Blank lines and ``#`` comments are ignored. Every key belongs to exactly one
section (see :data:`PARAMETERS`). Errors carry the file name and line number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError
from .netmodel import DEFAULT_RHO_FOLLOWER

__all__ = [
    "KINDS",
    "KIND_ALIASES",
    "PARAMETERS",
    "SpecError",
    "Sweep",
    "ExperimentSpec",
    "parse_spec",
    "load_spec",
    "default_spec",
]

KINDS = (
    "coverage_sweep",
    "jamming_area_sweep",
    "jamming_distance_sweep",
    "auth_error_sweep",
    "roc",
    "consensus",
    "validate",
)

# CLI subcommand -> experiment kind
KIND_ALIASES = {
    "coverage": "coverage_sweep",
    "jamarea": "jamming_area_sweep",
    "jamdist": "jamming_distance_sweep",
    "autherr": "auth_error_sweep",
    "roc": "roc",
    "consensus": "consensus",
    "validate": "validate",
}


class SpecError(DomainError):
    """Invalid experiment spec; ``lineno`` is 0 when no line applies."""

    def __init__(self, message: str, source: str = "<spec>", lineno: int = 0):
        self.source = source
        self.lineno = lineno
        where = f"{source}:{lineno}" if lineno else source
        super().__init__(f"{where}: {message}")


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return parse


def _bool(text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean (true/false)")


def _float(text):
    v = float(text)
    if math.isnan(v):
        raise ValueError("NaN is not allowed")
    return v


def _int(text):
    return int(text)


def _floats(text):
    vals = [_float(t.strip()) for t in text.split(",") if t.strip()]
    if not vals:
        raise ValueError("expected a comma-separated list of numbers")
    return vals


def _optional_float(text):
    return None if text.lower() == "none" else _float(text)


# key -> (section, parser, sweepable)
PARAMETERS = {
    "kind": ("experiment", _choice(*KINDS, *KIND_ALIASES), False),
    "seed": ("experiment", _int, False),
    "trials": ("experiment", _int, False),
    "link": ("experiment", _choice("dl", "ul", "joint"), False),
    "geometry": ("experiment", _choice("origin", "receiver"), False),
    "alpha": ("channel", _float, True),
    "p_leader": ("channel", _float, True),
    "p_follower": ("channel", _float, True),
    "p_jammer": ("channel", _float, True),
    "beta_dl": ("channel", _float, True),
    "beta_ul": ("channel", _float, True),
    "beta": ("channel", _optional_float, True),
    "rho_follower": ("deployment", _float, True),
    "radius": ("deployment", _float, True),
    "field_seed": ("deployment", _int, False),
    "z1": ("jammer", _float, True),
    "z2": ("jammer", _float, True),
    "z2_offset": ("jammer", _optional_float, True),
    "rho_jammer": ("jammer", _optional_float, True),
    "rho_jammer_factor": ("jammer", _float, True),
    "rho_fr": ("jammer", _optional_float, True),
    "rho_fr_from_jammer": ("jammer", _bool, False),
    "resample_jammers": ("jammer", _bool, False),
    "m": ("auth", _int, False),
    "n": ("auth", _int, False),
    "realization_seed": ("auth", _int, False),
    "lq_db": ("auth", _float, True),
    "target_pfa": ("auth", _float, True),
    "epsilon": ("auth", _optional_float, True),
    "eve_model": ("auth", _choice("realization", "uniform"), False),
    "pmd_normalization": ("auth", _choice("mean", "sum", "union"), False),
    "pmc_boundaries": ("auth", _choice("infinite", "support"), False),
    "n_eves": ("auth", _int, True),
    "auth_enabled": ("auth", _bool, False),
    "axis": ("sweep", str, False),
    "start": ("sweep", _float, False),
    "stop": ("sweep", _float, False),
    "steps": ("sweep", _int, False),
    "scale": ("sweep", _choice("linear", "log"), False),
    "series": ("sweep", str, False),
    "values": ("sweep", _floats, False),
}

_SWEEP_KEYS = {"axis", "start", "stop", "steps", "scale", "series", "values"}
_RUN_KEYS = {"kind", "seed", "trials"}

BASE_PARAMS = {
    "link": "joint",
    "geometry": "origin",
    "alpha": 3.0,
    "p_leader": 30.0,
    "p_follower": 20.0,
    "p_jammer": 10.0,
    "beta_dl": -20.0,
    "beta_ul": -20.0,
    "beta": None,
    "rho_follower": DEFAULT_RHO_FOLLOWER,
    "radius": 500.0,
    "field_seed": 0,
    "z1": 50.0,
    "z2": 300.0,
    "z2_offset": None,
    "rho_jammer": None,
    "rho_jammer_factor": 1.0,
    "rho_fr": None,
    "rho_fr_from_jammer": False,
    "resample_jammers": False,
    "m": 5,
    "n": 5,
    "realization_seed": None,  # None -> the committed default realization
    "lq_db": 10.0,
    "target_pfa": 0.1,
    "epsilon": None,
    "eve_model": "realization",
    "pmd_normalization": "union",
    "pmc_boundaries": "infinite",
    "n_eves": 0,
    "auth_enabled": False,
}


@dataclass(frozen=True)
class Sweep:
    axis: str
    start: float
    stop: float
    steps: int
    scale: str = "linear"
    series: str | None = None
    values: tuple = ()

    def points(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.steps)
        return np.linspace(self.start, self.stop, self.steps)

    def series_values(self) -> tuple:
        return self.values if self.series else (None,)


# per-kind defaults: (sweep, trials, parameter overrides)
_KIND_DEFAULTS = {
    "coverage_sweep": (Sweep("beta", -30.0, 0.0, 16, series="rho_jammer_factor", values=(1.0, 2.0, 4.0)),
                       100_000, {}),
    "jamming_area_sweep": (Sweep("z2", 0.0, 300.0, 16, series="rho_jammer_factor", values=(1.0, 2.0, 4.0)),
                           100_000, {"z1": 0.0, "rho_fr_from_jammer": True}),
    "jamming_distance_sweep": (Sweep("z1", 0.0, 300.0, 16, series="beta", values=(-30.0, -20.0, -10.0, 0.0)),
                               100_000, {"z2_offset": 50.0}),
    "auth_error_sweep": (Sweep("lq_db", 0.0, 20.0, 5, series="epsilon", values=(0.1, 0.5, 1.0)),
                         100_000, {}),
    "roc": (Sweep("target_pfa", 0.01, 1.0, 100, series="lq_db", values=(0.0, 5.0, 10.0, 15.0)),
            100_000, {}),
    "consensus": (Sweep("beta", -30.0, 0.0, 7, series="rho_jammer_factor", values=(1.0, 2.0, 4.0)),
                  10_000, {}),
    "validate": (Sweep("beta", -30.0, 0.0, 7, series="rho_jammer_factor", values=(1.0, 2.0, 4.0)),
                 100_000, {}),
}

DEFAULT_SEED = 42


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    sweep: Sweep
    params: dict = field(default_factory=dict)
    trials: int = 100_000
    seed: int = DEFAULT_SEED
    source: str = "<defaults>"

    def with_overrides(self, seed=None, trials=None) -> "ExperimentSpec":
        return replace(
            self,
            seed=self.seed if seed is None else int(seed),
            trials=self.trials if trials is None else int(trials),
        )


def default_spec(kind: str) -> ExperimentSpec:
    kind = KIND_ALIASES.get(kind, kind)
    if kind not in _KIND_DEFAULTS:
        raise SpecError(f"unknown experiment kind {kind!r}")
    sweep, trials, overrides = _KIND_DEFAULTS[kind]
    return ExperimentSpec(kind, sweep, {**BASE_PARAMS, **overrides}, trials, DEFAULT_SEED)


def parse_spec(text: str, kind: str | None = None, source: str = "<spec>") -> ExperimentSpec:
    """Parse spec text. ``kind`` (e.g. from the CLI subcommand) must agree
    with a ``kind`` key in the file when both are given."""
    section = None
    entries = {}  # key -> (value, lineno)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise SpecError(f"malformed section header {raw.strip()!r}", source, lineno)
            section = line[1:-1].strip()
            if section not in {s for s, _, _ in PARAMETERS.values()}:
                raise SpecError(f"unknown section [{section}]", source, lineno)
            continue
        if "=" not in line:
            raise SpecError(f"expected 'key = value', got {raw.strip()!r}", source, lineno)
        key, value = (t.strip() for t in line.split("=", 1))
        if section is None:
            raise SpecError(f"key {key!r} appears before any [section] header", source, lineno)
        if key not in PARAMETERS:
            raise SpecError(f"unknown key {key!r} in [{section}]", source, lineno)
        want, parser, _ = PARAMETERS[key]
        if want != section:
            raise SpecError(f"key {key!r} belongs in [{want}], not [{section}]", source, lineno)
        if key in entries:
            raise SpecError(f"duplicate key {key!r} (first set on line {entries[key][1]})", source, lineno)
        try:
            parsed = parser(value)
        except ValueError as exc:
            raise SpecError(f"bad value {value!r} for {key!r}: {exc}", source, lineno) from None
        entries[key] = (parsed, lineno)

    file_kind = entries.get("kind", (None, 0))
    if file_kind[0] is not None:
        file_kind = (KIND_ALIASES.get(file_kind[0], file_kind[0]), file_kind[1])
    want_kind = KIND_ALIASES.get(kind, kind) if kind else None
    if want_kind and file_kind[0] and want_kind != file_kind[0]:
        raise SpecError(f"spec declares kind {file_kind[0]!r} but {want_kind!r} was requested",
                        source, file_kind[1])
    final_kind = want_kind or file_kind[0]
    if final_kind is None:
        raise SpecError("no experiment kind given (set 'kind' in [experiment])", source)

    base = default_spec(final_kind)
    params = dict(base.params)
    for key, (value, _) in entries.items():
        if key not in _SWEEP_KEYS and key not in _RUN_KEYS:
            params[key] = value

    sw = base.sweep
    sweep_kw = {k: entries[k][0] for k in _SWEEP_KEYS if k in entries}
    if "axis" in sweep_kw and sweep_kw["axis"] != sw.axis:
        # a new axis must come with its own range
        for k in ("start", "stop", "steps"):
            if k not in sweep_kw:
                raise SpecError(f"sweep axis changed to {sweep_kw['axis']!r}: {k!r} must be given too",
                                source, entries["axis"][1])
    if sweep_kw.get("series", sw.series) not in (sw.series, "none") and "values" not in sweep_kw:
        raise SpecError(f"series changed to {sweep_kw['series']!r}: 'values' must be given too",
                        source, entries["series"][1])
    if sweep_kw.get("series") == "none":
        sweep_kw["series"] = None
        sweep_kw["values"] = ()
    sweep = replace(sw, **{k: (tuple(v) if k == "values" else v) for k, v in sweep_kw.items()})
    _check_sweep(sweep, entries, source)

    spec = ExperimentSpec(
        kind=final_kind,
        sweep=sweep,
        params=params,
        trials=entries.get("trials", (base.trials, 0))[0],
        seed=entries.get("seed", (base.seed, 0))[0],
        source=source,
    )
    if spec.trials < 0:
        raise SpecError("trials must be >= 0", source, entries["trials"][1])
    return spec


def _line(entries, key):
    return entries.get(key, (None, 0))[1]


def _check_sweep(sweep: Sweep, entries, source):
    for name, key in ((sweep.axis, "axis"), (sweep.series, "series")):
        if name is None:
            continue
        if name not in PARAMETERS or not PARAMETERS[name][2]:
            raise SpecError(f"{key} {name!r} is not a sweepable parameter", source, _line(entries, key))
    if sweep.series is not None and sweep.series == sweep.axis:
        raise SpecError("series and axis must differ", source, _line(entries, "series"))
    if sweep.steps < 2:
        raise SpecError("steps must be >= 2", source, _line(entries, "steps"))
    if sweep.series is not None and not sweep.values:
        raise SpecError(f"series {sweep.series!r} needs 'values'", source, _line(entries, "series"))
    if sweep.scale == "log" and not (sweep.start > 0 and sweep.stop > 0):
        raise SpecError("log scale needs positive start and stop", source, _line(entries, "scale"))


def load_spec(path, kind: str | None = None) -> ExperimentSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SpecError(f"cannot read spec: {exc.strerror}", str(path)) from None
    return parse_spec(text, kind, str(path))
