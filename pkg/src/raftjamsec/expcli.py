"""Experiment runner and ``raftjamsec`` command line.

Each experiment kind sweeps one parameter (the axis) for a few values of a
second one (the series) and returns a numeric table. Column names follow
``<quantity>@<series>=<value>``; the first column is the axis. Monte Carlo
columns use the same seed at every sweep point (common random numbers), so
simulated curves are as smooth as their analytic counterparts.

Exit codes: 0 success, 1 ``validate`` found a deviation above 3 standard
errors, 2 invalid spec or CSV, 3 numeric failure at a sweep point.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .authn import (DEFAULT_REALIZATION_SEED, EveEnsemble, monte_carlo_auth, pfa_closed_form,
                    pinned_realization, pmc_closed_form, pmd_closed_form, pmd_expected,
                    registry_from_field, roc_curve, sigma_from_lq, threshold_for_pfa)
from .coverage import (CoverageQuery, Link, coverage, coverage_dl_receiver, coverage_joint_receiver,
                       coverage_ul, coverage_ul_receiver)
from .errors import DegenerateGeometryError, DomainError, QuadratureError
from .expconfig import KIND_ALIASES, ExperimentSpec, SpecError, default_spec, load_spec
from .mc_engine import GeometryMode, McConfig, estimate_coverage
from .netmodel import ChannelParams, DeploymentConfig, JammerAnnulus, sample_field
from .raftsim import RoundConfig, consensus_probability, link_success_probabilities, majority_probability

__all__ = [
    "ResultTable",
    "PlotData",
    "NumericFailure",
    "PlotDataError",
    "VALIDATE_LIMIT",
    "run_experiment",
    "emit_plotdata",
    "main",
]

log = logging.getLogger(__name__)

# largest |MC - analytic| allowed by `validate`, in standard errors
VALIDATE_LIMIT = 3.0


class NumericFailure(ArithmeticError):
    def __init__(self, point: dict, cause: Exception):
        self.point = point
        self.cause = cause
        where = ", ".join(f"{k}={v:g}" for k, v in point.items())
        super().__init__(f"numeric failure at {where}: {cause}")


class PlotDataError(DomainError):
    pass


@dataclass
class ResultTable:
    columns: list
    rows: list = field(default_factory=list)
    summary: str | None = None
    passed: bool | None = None

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(format(float(v) + 0.0, ".12g") for v in row))
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# parameter resolution


@dataclass(frozen=True)
class Scenario:
    ch: ChannelParams
    dep: DeploymentConfig
    jam: JammerAnnulus
    rho_fr: float | None

    def query(self, link=Link.JOINT) -> CoverageQuery:
        return CoverageQuery(self.ch, self.dep, self.jam, Link(link), self.rho_fr)


def resolve(p: dict) -> Scenario:
    """Build model objects from a flat parameter dict."""
    beta_dl = p["beta_dl"] if p["beta"] is None else p["beta"]
    beta_ul = p["beta_ul"] if p["beta"] is None else p["beta"]
    ch = ChannelParams(p["alpha"], p["p_leader"], p["p_follower"], p["p_jammer"], beta_dl, beta_ul)
    dep = DeploymentConfig(p["rho_follower"], p["radius"], p["field_seed"])
    rho_j = p["rho_jammer"] if p["rho_jammer"] is not None else p["rho_jammer_factor"] * p["rho_follower"]
    z2 = p["z2"] if p["z2_offset"] is None else p["z1"] + p["z2_offset"]
    jam = JammerAnnulus(p["z1"], z2, rho_j)
    rho_fr = rho_j if p["rho_fr_from_jammer"] else p["rho_fr"]
    return Scenario(ch, dep, jam, rho_fr)


def _label(name, value):
    return f"{name}={value:g}" if name else ""


def _col(quantity, label):
    return f"{quantity}@{label}" if label else quantity


def _points(spec: ExperimentSpec):
    """Yield (axis value, [(series label, params)]) for every sweep point."""
    sw = spec.sweep
    for x in sw.points():
        per_series = []
        for s in sw.series_values():
            p = dict(spec.params)
            p[sw.axis] = _cast(sw.axis, x)
            if sw.series:
                p[sw.series] = _cast(sw.series, s)
            per_series.append((_label(sw.series, s), p))
        yield float(x), per_series


def _cast(name, value):
    return int(round(value)) if name in ("n_eves",) else float(value)


def _mc(spec):
    return McConfig(trials=spec.trials, seed=spec.seed) if spec.trials > 0 else None


# ---------------------------------------------------------------------------
# experiments

_RECEIVER_ANALYTIC = {Link.DL: coverage_dl_receiver, Link.UL: coverage_ul_receiver,
                      Link.JOINT: coverage_joint_receiver}


def _coverage_table(spec: ExperimentSpec) -> ResultTable:
    """Coverage of one link against the axis, for every series value."""
    link = Link(spec.params["link"].upper())
    mode = GeometryMode.ORIGIN if spec.params["geometry"] == "origin" else GeometryMode.RECEIVER
    mc = _mc(spec)
    name = link.value.lower()
    labels = [_label(spec.sweep.series, s) for s in spec.sweep.series_values()]
    cols = [spec.sweep.axis] + [_col(f"cf_{name}", lb) for lb in labels]
    if mc:
        cols += [_col(f"mc_{name}", lb) for lb in labels] + [_col(f"se_{name}", lb) for lb in labels]
    table = ResultTable(cols)
    for x, series in _points(spec):
        cf, est, se = [], [], []
        for _, p in series:
            with _at(spec, x, p):
                q = resolve(p).query(link)
                cf.append(coverage(q).probability if mode is GeometryMode.ORIGIN
                          else _RECEIVER_ANALYTIC[link](q).probability)
                if mc:
                    e = estimate_coverage(q, mc, mode)
                    est.append(e.mean)
                    se.append(e.std_error)
        table.rows.append([x, *cf, *est, *se])
    return table


def _product(a, b):
    """Product of two independent estimates with a delta-method std error."""
    return a.mean * b.mean, math.hypot(a.mean * b.std_error, b.mean * a.std_error)


def _jamming_distance_table(spec: ExperimentSpec) -> ResultTable:
    """DL, UL and joint coverage against the jammer ring position.

    The downlink uses receiver-referenced geometry (followers uniform on the
    deployment disk, interference measured at the follower), since moving
    the ring outwards brings jammers closer to the followers. The uplink
    receiver is the leader, so its interference is origin-referenced. The
    joint value is the product of the two links.
    """
    mc = _mc(spec)
    quantities = ["cf_dl", "cf_ul", "cf_joint"]
    if mc:
        quantities += ["mc_dl", "mc_ul", "mc_joint", "se_dl", "se_ul", "se_joint"]
    labels = [_label(spec.sweep.series, s) for s in spec.sweep.series_values()]
    table = ResultTable([spec.sweep.axis] + [_col(qn, lb) for lb in labels for qn in quantities])
    for x, series in _points(spec):
        row = [x]
        for _, p in series:
            with _at(spec, x, p):
                q = resolve(p).query()
                dl = coverage_dl_receiver(q.with_link(Link.DL)).probability
                ul = coverage_ul(q.with_link(Link.UL)).probability
                row += [dl, ul, dl * ul]
                if mc:
                    e_dl = estimate_coverage(q.with_link(Link.DL), mc, GeometryMode.RECEIVER)
                    e_ul = estimate_coverage(q.with_link(Link.UL), mc, GeometryMode.ORIGIN)
                    joint, joint_se = _product(e_dl, e_ul)
                    row += [e_dl.mean, e_ul.mean, joint, e_dl.std_error, e_ul.std_error, joint_se]
        table.rows.append(row)
    return table


def _auth_setup(p):
    seed = DEFAULT_REALIZATION_SEED if p["realization_seed"] is None else p["realization_seed"]
    real = pinned_realization(p["m"], p["n"], p["alpha"], p["radius"], seed)
    eves = real.eve_ensemble() if p["eve_model"] == "realization" else EveEnsemble(n=p["n"])
    return real, eves


def _pmd(reg, eves, normalization):
    return pmd_expected(reg, eves, normalization) if eves.uniform else pmd_closed_form(reg, eves, normalization)


def _auth_error_table(spec: ExperimentSpec) -> ResultTable:
    """False alarm, missed detection and misclassification against the axis."""
    draws = spec.trials
    quantities = ["pfa", "pmd", "pmc"]
    if draws:
        quantities += ["pfa_mc", "pmd_mc", "pmc_mc", "pfa_se", "pmd_se", "pmc_se"]
    labels = [_label(spec.sweep.series, s) for s in spec.sweep.series_values()]
    table = ResultTable([spec.sweep.axis] + [_col(qn, lb) for lb in labels for qn in quantities])
    for x, series in _points(spec):
        row = [x]
        for _, p in series:
            with _at(spec, x, p):
                real, eves = _auth_setup(p)
                sigma = sigma_from_lq(p["lq_db"])
                eps = threshold_for_pfa(p["target_pfa"], sigma) if p["epsilon"] is None else p["epsilon"]
                reg = real.registry(sigma, eps)
                row += [pfa_closed_form(reg), _pmd(reg, eves, p["pmd_normalization"]),
                        pmc_closed_form(reg, p["pmc_boundaries"])]
                if draws:
                    r = monte_carlo_auth(reg, eves, draws, spec.seed)
                    row += [r.pfa.mean, r.pmd.mean, r.pmc.mean, r.pfa.std_error, r.pmd.std_error, r.pmc.std_error]
        table.rows.append(row)
    return table


def _roc_table(spec: ExperimentSpec) -> ResultTable:
    """Detection probability with the threshold set from the target false-alarm rate."""
    draws = spec.trials
    quantities = ["pd", "pd_mc", "pd_se"] if draws else ["pd"]
    labels = [_label(spec.sweep.series, s) for s in spec.sweep.series_values()]
    table = ResultTable([spec.sweep.axis] + [_col(qn, lb) for lb in labels for qn in quantities])
    for x, series in _points(spec):
        row = [x]
        for _, p in series:
            with _at(spec, x, p):
                real, eves = _auth_setup(p)
                reg = real.registry(sigma_from_lq(p["lq_db"]))
                pt = roc_curve(reg, eves, [p["target_pfa"]], draws, spec.seed, p["pmd_normalization"])[0]
                row += [pt.pd, pt.pd_mc, pt.pd_mc_std_error] if draws else [pt.pd]
        table.rows.append(row)
    return table


def _consensus_table(spec: ExperimentSpec) -> ResultTable:
    """Simulated consensus rate on a fixed follower layout.

    ``majority`` is the exact strict-majority probability for independent
    followers with the layout's per-follower link success probabilities. It
    is only emitted when it describes the simulation: fixed jammers, no Eves
    and authentication off.
    """
    if spec.trials < 1:
        raise SpecError("consensus needs trials >= 1", spec.source)
    resample = spec.params["resample_jammers"]
    sw = spec.sweep
    exact = (not resample and not spec.params["auth_enabled"] and spec.params["n_eves"] == 0
             and "n_eves" not in (sw.axis, sw.series))
    quantities = ["consensus", "se"] + (["majority"] if exact else [])
    labels = [_label(spec.sweep.series, s) for s in spec.sweep.series_values()]
    table = ResultTable([spec.sweep.axis] + [_col(qn, lb) for lb in labels for qn in quantities])
    for x, series in _points(spec):
        row = [x]
        for _, p in series:
            with _at(spec, x, p):
                sc = resolve(p)
                fld = sample_field(sc.dep, sc.jam)
                if fld.n_followers == 0:
                    raise DegenerateGeometryError("the sampled layout has no followers")
                sigma = sigma_from_lq(p["lq_db"])
                eps = threshold_for_pfa(p["target_pfa"], sigma) if p["epsilon"] is None else p["epsilon"]
                reg = registry_from_field(fld, sc.ch.alpha, sigma, eps, sc.dep.radius)
                cfg = RoundConfig(fld, sc.ch, reg, n_eves=p["n_eves"], auth_enabled=p["auth_enabled"],
                                  seed=spec.seed, radius=sc.dep.radius)
                est = consensus_probability(cfg, spec.trials, sc.jam if resample else None)
                row += [est.mean, est.std_error]
                if exact:
                    row.append(majority_probability(link_success_probabilities(fld, sc.ch)))
        table.rows.append(row)
    return table


def _validate_table(spec: ExperimentSpec) -> ResultTable:
    """Analytic against simulated coverage (origin-referenced model) for DL, UL
    and joint at every grid point.

    ``dev`` is ``(mc - cf) / sqrt(cf (1 - cf) / n)``: the binomial standard
    error is taken at the analytic value, which stays meaningful when the
    estimate sits at 0 or 1. The denominator is floored at ``1/n``.
    """
    if spec.trials < 1:
        raise SpecError("validate needs trials >= 1", spec.source)
    mc = _mc(spec)
    n = spec.trials
    links = (Link.DL, Link.UL, Link.JOINT)
    labels = [_label(spec.sweep.series, s) for s in spec.sweep.series_values()]
    cols = [spec.sweep.axis]
    for lb in labels:
        for link in links:
            name = link.value.lower()
            cols += [_col(f"{qn}_{name}", lb) for qn in ("cf", "mc", "se", "dev")]
    table = ResultTable(cols)
    worst = 0.0
    for x, series in _points(spec):
        row = [x]
        for _, p in series:
            with _at(spec, x, p):
                base = resolve(p).query()
                for link in links:
                    q = base.with_link(link)
                    cf = coverage(q).probability
                    e = estimate_coverage(q, mc, GeometryMode.ORIGIN)
                    dev = (e.mean - cf) / max(math.sqrt(cf * (1.0 - cf) / n), 1.0 / n)
                    worst = max(worst, abs(dev))
                    row += [cf, e.mean, e.std_error, dev]
        table.rows.append(row)
    table.passed = worst <= VALIDATE_LIMIT
    verdict = "pass" if table.passed else "FAIL"
    points = len(table.rows) * len(labels) * len(links)
    table.summary = (f"validate: max deviation {worst:.3f} std errors over {points} points "
                     f"(limit {VALIDATE_LIMIT:g}): {verdict}")
    return table


_RUNNERS = {
    "coverage_sweep": _coverage_table,
    "jamming_area_sweep": _coverage_table,
    "jamming_distance_sweep": _jamming_distance_table,
    "auth_error_sweep": _auth_error_table,
    "roc": _roc_table,
    "consensus": _consensus_table,
    "validate": _validate_table,
}


class _at:
    """Context manager that tags failures with the sweep point."""

    def __init__(self, spec, x, p):
        self.source = spec.source
        self.point = {spec.sweep.axis: x}
        if spec.sweep.series:
            self.point[spec.sweep.series] = p[spec.sweep.series]

    def __enter__(self):
        log.info("point %s", self.point)
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            return False
        if issubclass(exc_type, (QuadratureError, DegenerateGeometryError, FloatingPointError, OverflowError)):
            raise NumericFailure(self.point, exc) from exc
        if issubclass(exc_type, DomainError) and not issubclass(exc_type, SpecError):
            where = ", ".join(f"{k}={v:g}" for k, v in self.point.items())
            raise SpecError(f"invalid parameters at {where}: {exc}", self.source) from exc
        return False


_PROBABILITY_PREFIXES = ("cf", "mc", "pd", "pfa", "pmd", "pmc", "consensus", "majority")


def _is_probability(column: str) -> bool:
    quantity = column.partition("@")[0]
    return quantity.split("_")[0] in _PROBABILITY_PREFIXES and not quantity.endswith("_se")


def run_experiment(spec: ExperimentSpec) -> ResultTable:
    """Run one experiment and return its table.

    Raises :class:`SpecError` for parameter values the model rejects and
    :class:`NumericFailure` when a computation fails or yields a non-finite
    or out-of-range value.
    """
    table = _RUNNERS[spec.kind](spec)
    for row in table.rows:
        for name, v in zip(table.columns, row):
            if not math.isfinite(v):
                raise NumericFailure({table.columns[0]: row[0]}, ValueError(f"{name} is not finite"))
            if _is_probability(name) and not 0.0 <= v <= 1.0:
                raise NumericFailure({table.columns[0]: row[0]}, ValueError(f"{name} = {v!r} outside [0, 1]"))
    return table


# ---------------------------------------------------------------------------
# plot data


@dataclass(frozen=True)
class PlotData:
    data: str
    script: str
    blocks: int


def _parse_csv(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise PlotDataError("CSV is empty")
    header = lines[0].split(",")
    if len(header) < 2 or any(not h.strip() for h in header):
        raise PlotDataError("CSV header needs an axis column and at least one series column")
    rows = []
    for k, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(header):
            raise PlotDataError(f"line {k}: expected {len(header)} cells, got {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise PlotDataError(f"line {k}: non-numeric cell") from None
    if not rows:
        raise PlotDataError("CSV has no data rows")
    return header, np.array(rows)


def emit_plotdata(csv_text: str, data_name: str = "data.dat") -> PlotData:
    """Whitespace-separated gnuplot blocks, one per series, plus a script stub.

    Columns sharing the ``@<series>`` suffix form one block; blocks are
    separated by two blank lines so gnuplot can address them with
    ``index``. False-alarm axes are sorted ascending.
    """
    header, data = _parse_csv(csv_text)
    axis = header[0]
    if axis in ("target_pfa", "pfa"):
        data = data[np.argsort(data[:, 0], kind="stable")]
    groups = {}
    for j, name in enumerate(header[1:], start=1):
        quantity, _, label = name.partition("@")
        groups.setdefault(label, []).append((quantity, j))

    blocks, plots = [], []
    for b, (label, cols) in enumerate(groups.items()):
        out = [f"# series {label or 'all'}", "# " + " ".join([axis] + [qn for qn, _ in cols])]
        for row in data:
            out.append(" ".join(format(v + 0.0, ".12g") for v in [row[0]] + [row[j] for _, j in cols]))
        blocks.append("\n".join(out))
        for k, (qn, _) in enumerate(cols, start=2):
            if qn.startswith(("se", "dev")) or qn.endswith("_se"):
                continue
            style = "points" if "mc" in qn else "lines"
            title = f"{qn} {label}".strip()
            plots.append(f"'{data_name}' index {b} using 1:{k} with {style} title \"{title}\"")
    script = "\n".join([
        "# gnuplot script",
        "set datafile separator whitespace",
        "set key outside right",
        f'set xlabel "{axis}"',
        'set ylabel "probability"',
        "plot " + ", \\\n     ".join(plots),
        "",
    ])
    return PlotData("\n\n\n".join(blocks) + "\n", script, len(blocks))


# ---------------------------------------------------------------------------
# command line


def _build_parser():
    parser = argparse.ArgumentParser(prog="raftjamsec", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log every sweep point")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, kind in KIND_ALIASES.items():
        p = sub.add_parser(name, help=f"run the {kind} experiment")
        p.add_argument("--spec", help="experiment spec file (defaults apply when omitted)")
        p.add_argument("--seed", type=int, help="override the seed from the spec file")
        p.add_argument("--trials", type=int, help="override the Monte Carlo trial count (0 = analytic only)")
        p.add_argument("--out", help="CSV output path (default: stdout)")
    p = sub.add_parser("plotdata", help="convert a result CSV into gnuplot data and a script")
    p.add_argument("csv", help="CSV produced by one of the experiment subcommands")
    p.add_argument("--out", help="output prefix; writes PREFIX.dat and PREFIX.gp")
    return parser


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _plotdata(args) -> int:
    try:
        with open(args.csv, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: {args.csv}: {exc.strerror}", file=sys.stderr)
        return 2
    prefix = args.out or os.path.splitext(args.csv)[0]
    try:
        pd = emit_plotdata(text, os.path.basename(prefix) + ".dat")
    except PlotDataError as exc:
        print(f"error: {args.csv}: {exc}", file=sys.stderr)
        return 2
    _write(prefix + ".dat", pd.data)
    _write(prefix + ".gp", pd.script)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "plotdata":
        return _plotdata(args)
    kind = KIND_ALIASES[args.command]
    try:
        spec = load_spec(args.spec, kind) if args.spec else default_spec(kind)
        if args.trials is not None and args.trials < 0:
            raise SpecError("--trials must be >= 0", "<command line>")
        spec = spec.with_overrides(seed=args.seed, trials=args.trials)
        table = run_experiment(spec)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    _write(args.out, table.to_csv())
    if table.summary:
        print(table.summary, file=sys.stderr)
    return 0 if table.passed in (None, True) else 1


def cli():  # console-script entry point
    sys.exit(main())


if __name__ == "__main__":
    cli()
