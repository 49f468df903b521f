"""Experiment orchestration: sweep specs, seeded estimation, comparison, output.

A spec names one mode/scheme and explicit axis lists; the sweep is their
cartesian product in a fixed order, and trial t of point p draws from the
substream keyed (seed, p, t).  Results are therefore byte-identical across
runs and worker counts; ``--threads`` only changes the wall time.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analytic import AnalyticValidityError, avg_training_length, outage_it_su
from .channel import FixedPaths, ScaledPaths
from .mu import MU_SCHEMES, MuSystemConfig, run_mu_batch
from .su import SU_SCHEMES, SuSystemConfig, run_su_batch

__all__ = [
    "SpecError",
    "ExperimentSpec",
    "PointSummary",
    "ExperimentSummary",
    "CompareRow",
    "run_experiment",
    "compare_report",
    "compare_rows",
    "analytic_report",
    "emit",
    "emit_compare",
    "load_summary",
    "CSV_HEADER",
]

CSV_HEADER = (
    "mode,scheme,method,N_t,L,N_RF,U,alpha,trials,mean_len,se_len,outage,"
    "se_outage,mean_rate,se_rate,analytic_len,analytic_outage,flags"
)

COMPARE_HEADER = (
    "N_t,L,N_RF,U,alpha,trials,sim_len,analytic_len,z_len,sim_outage,"
    "analytic_outage,z_outage,flags"
)

_SU_CHUNK = 1 << 16
_MU_CHUNK = 2048
_MIN_OUTAGE_EVENTS = 100


class SpecError(ValueError):
    """Invalid experiment specification (caught before any trial runs)."""


@dataclass(frozen=True)
class SweepPoint:
    n_t: int
    paths: FixedPaths | ScaledPaths
    n_rf: int
    n_users: int
    alpha: float
    power: float
    l_trained: int | None

    @property
    def n_paths(self) -> int:
        return self.paths.resolve(self.n_t)


@dataclass(frozen=True)
class ExperimentSpec:
    mode: str
    scheme: str
    trials: int
    seed: int
    n_t: tuple
    paths: tuple
    n_rf: tuple
    n_users: tuple = (1,)
    alpha: tuple | None = None
    power_db: tuple | None = None
    rate: tuple | None = None
    l_trained: tuple | None = None
    method: str | None = None

    def __post_init__(self):
        if self.mode not in ("su", "mu"):
            raise SpecError(f"mode must be 'su' or 'mu', got {self.mode!r}")
        schemes = SU_SCHEMES if self.mode == "su" else MU_SCHEMES
        if self.scheme not in schemes:
            raise SpecError(f"scheme {self.scheme!r} not in {schemes} for mode {self.mode}")
        if self.trials < 1:
            raise SpecError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.seed < 2 ** 64:
            raise SpecError(f"seed must be a 64-bit unsigned value, got {self.seed}")
        has_alpha = self.alpha is not None
        has_pr = self.power_db is not None or self.rate is not None
        if has_alpha == has_pr or (has_pr and (self.power_db is None or self.rate is None)):
            raise SpecError("give exactly one of 'alpha' or both 'power_db' and 'rate'")
        if self.mode == "mu" and self.method not in ("exhaustive", "maxmin"):
            raise SpecError("mu mode needs method 'exhaustive' or 'maxmin'")
        if self.mode == "su" and self.method is not None:
            raise SpecError("method applies to mu mode only")
        if self.scheme == "nit_partial" and not self.l_trained:
            raise SpecError("nit_partial needs an l_trained axis")
        if self.scheme != "nit_partial" and self.l_trained:
            raise SpecError("l_trained only applies to nit_partial")

    def points(self) -> list[SweepPoint]:
        """Cartesian product of the axes, in fixed enumeration order."""
        thresholds = (
            [(a, 1.0) for a in self.alpha]
            if self.alpha is not None
            else [
                ((2.0 ** r - 1.0) / 10 ** (db / 10), 10 ** (db / 10))
                for db in self.power_db
                for r in self.rate
            ]
        )
        pts = []
        for n_t in self.n_t:
            for paths in self.paths:
                for n_rf in self.n_rf:
                    for n_users in self.n_users:
                        for alpha, power in thresholds:
                            # threshold from (P, R_th): su uses (2^R-1)/P, mu scales by U
                            a = alpha * (n_users if self.mode == "mu" and self.alpha is None else 1)
                            for lt in self.l_trained or (None,):
                                pts.append(SweepPoint(n_t, paths, n_rf, n_users, a, power, lt))
        for p in pts:
            _point_config(self, p)  # fail fast on invalid combinations
        return pts

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        axes = d.pop("axes", {})
        known = {"mode", "scheme", "method", "trials", "seed"}
        bad = set(d) - known
        if bad:
            raise SpecError(f"unknown spec fields: {sorted(bad)}")
        if "mode" not in d or "scheme" not in d:
            raise SpecError("spec needs 'mode' and 'scheme'")

        def axis(name, conv):
            v = axes.get(name)
            if v is None:
                return None
            if not isinstance(v, list) or not v:
                raise SpecError(f"axis {name!r} must be a non-empty list")
            return tuple(conv(x) for x in v)

        paths = axis("l", _parse_path_spec)
        spec = cls(
            mode=d["mode"],
            scheme=d["scheme"],
            method=d.get("method"),
            trials=int(d.get("trials", 100_000)),
            seed=int(d.get("seed", 0)),
            n_t=axis("n_t", int) or _missing("n_t"),
            paths=paths or _missing("l"),
            n_rf=axis("n_rf", int) or _missing("n_rf"),
            n_users=axis("u", int) or (1,),
            alpha=axis("alpha", float),
            power_db=axis("power_db", float),
            rate=axis("rate", float),
            l_trained=axis("l_trained", int),
        )
        unknown_axes = set(axes) - {"n_t", "l", "n_rf", "u", "alpha", "power_db", "rate", "l_trained"}
        if unknown_axes:
            raise SpecError(f"unknown axes: {sorted(unknown_axes)}")
        return spec

    @classmethod
    def from_file(cls, path) -> "ExperimentSpec":
        with open(path) as f:
            return cls.from_dict(json.load(f))


def _missing(name):
    raise SpecError(f"axis {name!r} is required")


def _parse_path_spec(v):
    if isinstance(v, dict):
        if set(v) != {"c"}:
            raise SpecError(f"path spec object must be {{'c': fraction}}, got {v}")
        return ScaledPaths(float(v["c"]))
    if isinstance(v, str) and v.startswith("c"):
        return ScaledPaths(float(v[1:]))
    if isinstance(v, (int, float)) and float(v) == int(v):
        return FixedPaths(int(v))
    raise SpecError(f"bad path-count entry {v!r}")


def _point_config(spec: ExperimentSpec, point: SweepPoint):
    """System config for a point; raises SpecError on invalid combinations."""
    try:
        n_paths = point.n_paths
        if spec.mode == "su":
            cfg = SuSystemConfig.from_alpha(point.n_t, point.n_rf, point.alpha, point.power)
        else:
            cfg = MuSystemConfig.from_alpha_bar(
                point.n_t, point.n_rf, point.n_users, point.alpha, point.power
            )
        if spec.scheme == "nit_partial":
            low = 1 if spec.mode == "su" else point.n_users
            if not low <= point.l_trained <= point.n_t:
                raise ValueError(f"l_trained={point.l_trained} outside [{low}, {point.n_t}]")
    except ValueError as e:
        raise SpecError(f"invalid sweep point {point}: {e}") from None
    return cfg, n_paths


@dataclass(frozen=True)
class PointSummary:
    mode: str
    scheme: str
    method: str
    n_t: int
    n_paths: int
    n_rf: int
    n_users: int
    alpha: float
    trials: int
    mean_len: float
    se_len: float
    outage: float
    se_outage: float
    mean_rate: float
    se_rate: float
    analytic_len: float | None
    analytic_outage: float | None
    flags: str
    wall_time: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class ExperimentSummary:
    points: tuple[PointSummary, ...]


def _su_task(args):
    cfg, n_paths, scheme, seed, point, t0, n, lt = args
    return run_su_batch(cfg, n_paths, [scheme], seed, n, point=point, trial0=t0,
                        l_trained=lt)[scheme]


def _mu_task(args):
    cfg, n_paths, scheme, method, seed, point, t0, n, lt = args
    return run_mu_batch(cfg, n_paths, scheme, method, seed, n, point=point,
                        trial0=t0, l_trained=lt)


def _run_point_arrays(spec, point, point_index, threads):
    cfg, n_paths = _point_config(spec, point)
    chunk = _SU_CHUNK if spec.mode == "su" else _MU_CHUNK
    task = _su_task if spec.mode == "su" else _mu_task
    ranges = [(t0, min(chunk, spec.trials - t0)) for t0 in range(0, spec.trials, chunk)]
    if spec.mode == "su":
        argses = [(cfg, n_paths, spec.scheme, spec.seed, point_index, t0, n, point.l_trained)
                  for t0, n in ranges]
    else:
        argses = [(cfg, n_paths, spec.scheme, spec.method, spec.seed, point_index, t0, n,
                   point.l_trained) for t0, n in ranges]
    if threads > 1 and len(argses) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(task, argses))
    else:
        parts = [task(a) for a in argses]
    # reduce in fixed trial order regardless of worker count
    lengths = np.concatenate([p.lengths for p in parts])
    outage = np.concatenate([p.outage for p in parts])
    rate = np.concatenate([p.rate for p in parts])
    return lengths, outage, rate


def _mean_se(x, trials):
    m = float(np.mean(x))
    se = float(np.std(x, ddof=0) / math.sqrt(trials))
    return m, se


def _analytic_fields(spec, point, n_paths):
    """Reference values where the closed forms apply (SU only)."""
    if spec.mode != "su":
        return None, None, []
    flags = []
    a_len = a_out = None
    try:
        a_out = outage_it_su(point.n_t, n_paths, point.n_rf, point.alpha)
        if spec.scheme in ("it", "rate_variant"):
            a_len = avg_training_length(point.n_t, n_paths, point.n_rf, point.alpha)
        elif spec.scheme == "nit_full":
            a_len = float(point.n_t)
        else:
            a_len = float(point.l_trained)
            a_out = None  # no closed form for the partial window
    except AnalyticValidityError as e:
        a_len = a_out = None
        flags.append(f"analytic-invalid({e})")
    return a_len, a_out, flags


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> ExperimentSummary:
    """Run every sweep point at the spec's trial count; deterministic per spec."""
    out = []
    for idx, point in enumerate(spec.points()):
        t_start = time.perf_counter()
        lengths, outage, rate = _run_point_arrays(spec, point, idx, threads)
        n = spec.trials
        mean_len, se_len = _mean_se(lengths, n)
        p_out = float(np.mean(outage))
        se_out = math.sqrt(p_out * (1.0 - p_out) / n)
        mean_rate, se_rate = _mean_se(rate, n)
        n_paths = point.n_paths
        a_len, a_out, flags = _analytic_fields(spec, point, n_paths)
        if n == 1:
            flags.append("se-undefined")
        if outage.sum() < _MIN_OUTAGE_EVENTS:
            flags.append("low-outage-count")
        out.append(
            PointSummary(
                mode=spec.mode,
                scheme=spec.scheme,
                method=spec.method or "",
                n_t=point.n_t,
                n_paths=n_paths,
                n_rf=point.n_rf,
                n_users=point.n_users,
                alpha=point.alpha,
                trials=n,
                mean_len=mean_len,
                se_len=se_len,
                outage=p_out,
                se_outage=se_out,
                mean_rate=mean_rate,
                se_rate=se_rate,
                analytic_len=a_len,
                analytic_outage=a_out,
                flags=";".join(flags),
                wall_time=time.perf_counter() - t_start,
            )
        )
    return ExperimentSummary(tuple(out))


def analytic_report(spec: ExperimentSpec) -> ExperimentSummary:
    """Closed-form values only (no simulation); sim columns are NaN."""
    if spec.mode != "su":
        raise SpecError("analytic evaluation exists for su mode only")
    out = []
    for point in spec.points():
        n_paths = point.n_paths
        a_len, a_out, flags = _analytic_fields(spec, point, n_paths)
        out.append(
            PointSummary(
                spec.mode, spec.scheme, spec.method or "", point.n_t, n_paths,
                point.n_rf, point.n_users, point.alpha, 0,
                math.nan, math.nan, math.nan, math.nan, math.nan, math.nan,
                a_len, a_out, ";".join(flags or ["analytic-only"]),
            )
        )
    return ExperimentSummary(tuple(out))


@dataclass(frozen=True)
class CompareRow:
    n_t: int
    n_paths: int
    n_rf: int
    n_users: int
    alpha: float
    trials: int
    sim_len: float
    analytic_len: float | None
    z_len: float | None
    sim_outage: float
    analytic_outage: float | None
    z_outage: float | None
    flags: str


def _zscore(sim, ref, se):
    if ref is None:
        return None
    if se == 0.0:
        return 0.0 if sim == ref else math.inf
    return (sim - ref) / se


def compare_report(spec: ExperimentSpec, threads: int = 1) -> list[CompareRow]:
    """Simulation vs closed forms per point, with |z| > 3 flagged."""
    if spec.mode != "su":
        raise SpecError("compare applies to su mode only")
    return compare_rows(run_experiment(spec, threads=threads))


def compare_rows(summary: ExperimentSummary) -> list[CompareRow]:
    rows = []
    for ps in summary.points:
        z_len = _zscore(ps.mean_len, ps.analytic_len, ps.se_len)
        z_out = _zscore(ps.outage, ps.analytic_outage, ps.se_outage)
        flags = [f for f in ps.flags.split(";") if f]
        if z_len is not None and abs(z_len) > 3:
            flags.append("z-len>3")
        if z_out is not None and abs(z_out) > 3:
            flags.append("z-outage>3")
        rows.append(
            CompareRow(
                ps.n_t, ps.n_paths, ps.n_rf, ps.n_users, ps.alpha, ps.trials,
                ps.mean_len, ps.analytic_len, z_len, ps.outage,
                ps.analytic_outage, z_out, ";".join(flags),
            )
        )
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


_COLUMNS = CSV_HEADER.split(",")
_FIELD_BY_COLUMN = {
    "N_t": "n_t", "L": "n_paths", "N_RF": "n_rf", "U": "n_users",
}


def _point_record(ps: PointSummary) -> dict:
    rec = {}
    for col in _COLUMNS:
        rec[col] = getattr(ps, _FIELD_BY_COLUMN.get(col, col))
    return rec


def emit(summary: ExperimentSummary, fmt: str, path) -> None:
    """Write the summary as CSV (fixed header) or a JSON record array."""
    records = [_point_record(ps) for ps in summary.points]
    if fmt == "csv":
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(_COLUMNS)
            for rec in records:
                w.writerow([_fmt(rec[c]) for c in _COLUMNS])
    elif fmt == "json":
        with open(path, "w") as f:
            json.dump({"points": records}, f, indent=1)
            f.write("\n")
    else:
        raise ValueError(f"unknown format {fmt!r} (want 'csv' or 'json')")


def emit_compare(rows: list[CompareRow], fmt: str, path) -> None:
    cols = COMPARE_HEADER.split(",")
    names = ["n_t", "n_paths", "n_rf", "n_users", "alpha", "trials", "sim_len",
             "analytic_len", "z_len", "sim_outage", "analytic_outage", "z_outage", "flags"]
    if fmt == "csv":
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(cols)
            for r in rows:
                w.writerow([_fmt(getattr(r, n)) for n in names])
    elif fmt == "json":
        with open(path, "w") as f:
            json.dump({"points": [{c: getattr(r, n) for c, n in zip(cols, names)} for r in rows]}, f, indent=1)
            f.write("\n")
    else:
        raise ValueError(f"unknown format {fmt!r} (want 'csv' or 'json')")


def load_summary(path) -> ExperimentSummary:
    """Read back a JSON summary emitted by ``emit`` (inverse up to wall time)."""
    with open(path) as f:
        data = json.load(f)
    pts = []
    for rec in data["points"]:
        kw = {_FIELD_BY_COLUMN.get(c, c): rec[c] for c in _COLUMNS}
        pts.append(PointSummary(**kw))
    return ExperimentSummary(tuple(pts))
