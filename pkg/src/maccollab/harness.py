"""Experiment orchestration: fit every method on identical splits, score the
untouched test part, aggregate and compare against MaC."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import dgp, pmlb
from .data import Dataset, split, standardize
from .errors import DegenerateStatistic, InvalidConfig, MacError
from .mac import MacConfig, fit_mac_ordered
from .machines import DEFAULT_GRIDS, MachineSpec, fit_machine, tune
from .rivals import fit_ls_boost, fit_super_learner
from .stats import cohens_d, mspe, paired_t, win_counts

log = logging.getLogger(__name__)

METHODS = ("mac", "sl", "lsboost", "mlp", "tree", "ridge")
BASE_MACHINES = ("ridge", "tree", "mlp")
REPORT_VERSION = 1

# Small grids used by the desk-scale benchmarks. The tree penalties sit on the
# scale of unit-variance targets; the default grid barely prunes there.
DESK_GRIDS = {
    "ridge": DEFAULT_GRIDS["ridge"],
    "tree": [{"max_depth": 10, "cc_alpha": a, "min_leaf": 5} for a in (1e-3, 1e-2, 3e-2, 0.1, 0.3)],
    "mlp": [
        {"width": 32, "activation": "relu", "dropout": 0.2, "learning_rate": 1e-2,
         "batch_size": 32, "epochs": 60, "seed": 0},
    ],
}


@dataclass(frozen=True)
class HarnessConfig:
    """Grids and ensemble settings shared by every method in a run."""

    grids: dict = field(default_factory=lambda: {k: list(v) for k, v in DEFAULT_GRIDS.items()})
    machines: tuple[str, ...] = BASE_MACHINES
    tau: int = 2
    max_iter: int = 20
    refit_on_full_data: bool = True
    orders: str | tuple = "all"
    boost_rounds: int = 5
    boost_shrinkage: float = 1.0
    boost_tolerance: int = 2
    boost_select_best: bool = False

    def __post_init__(self):
        object.__setattr__(self, "machines", tuple(self.machines))
        for kind in self.machines:
            if kind not in self.grids:
                raise InvalidConfig(f"no grid configured for machine {kind!r}")
        if self.orders != "all":
            object.__setattr__(self, "orders", tuple(tuple(o) for o in self.orders))

    def specs(self, seed: int | None = None) -> list[MachineSpec]:
        out = [MachineSpec(kind, tuple(self.grids[kind])) for kind in self.machines]
        return out if seed is None else [s.with_seed(seed) for s in out]

    def mac_config(self, seed: int | None = None) -> MacConfig:
        cfg = MacConfig(tuple(self.specs(seed)), self.tau, self.max_iter, self.refit_on_full_data)
        if self.orders == "all":
            return cfg.all_orders()
        return MacConfig(cfg.machines, cfg.tau, cfg.max_iter, cfg.refit_on_full_data, self.orders)

    def to_dict(self) -> dict:
        return {
            "grids": {k: [dict(g) for g in v] for k, v in self.grids.items()},
            "machines": list(self.machines),
            "tau": self.tau,
            "max_iter": self.max_iter,
            "refit_on_full_data": self.refit_on_full_data,
            "orders": self.orders if self.orders == "all" else [list(o) for o in self.orders],
            "boost_rounds": self.boost_rounds,
            "boost_shrinkage": self.boost_shrinkage,
            "boost_tolerance": self.boost_tolerance,
            "boost_select_best": self.boost_select_best,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HarnessConfig":
        d = dict(d)
        grids = {k: list(v) for k, v in DEFAULT_GRIDS.items()}
        grids.update(d.pop("grids", {}))
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidConfig(f"unknown config keys {sorted(unknown)}")
        return cls(grids=grids, **d)

    @classmethod
    def load(cls, path) -> "HarnessConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def desk_config(**overrides) -> HarnessConfig:
    """Reduced grids for laptop-scale runs.

    Machines are fitted on the training part only, so the validation risk that
    drives the stopping rules stays out-of-sample; pass
    ``refit_on_full_data=True`` to refit on train+val instead.
    """
    overrides.setdefault("refit_on_full_data", False)
    return HarnessConfig(grids={k: list(v) for k, v in DESK_GRIDS.items()}, **overrides)


class _TunedCache:
    """Single-machine tuning results on one split, shared by the singles and SL."""

    def __init__(self, specs, train, val):
        self.specs = {s.kind: s for s in specs}
        self.train, self.val = train, val
        self._done = {}

    def get(self, kind):
        if kind not in self._done:
            t, v = self.train, self.val
            self._done[kind] = tune(self.specs[kind], t.features, t.target, v.features, v.target)
        return self._done[kind]


def fit_method(method: str, train: Dataset, val: Dataset, config: HarnessConfig, seed: int | None = None, _cache=None):
    """Fit one named method and return an object with ``predict``."""
    specs = config.specs(seed)
    cache = _cache or _TunedCache(specs, train, val)
    full = config.refit_on_full_data
    if method in BASE_MACHINES:
        tuned = cache.get(method)
        if not full:
            return tuned.machine
        X = np.vstack([train.features, val.features])
        y = np.concatenate([train.target, val.target])
        return fit_machine(method, tuned.hyperparams, X, y)
    if method == "sl":
        return fit_super_learner(specs, train, val, full, [cache.get(s.kind) for s in specs])
    if method == "lsboost":
        return fit_ls_boost(
            specs, train, val, config.boost_rounds, config.boost_shrinkage,
            config.boost_tolerance, full, config.boost_select_best,
        )
    if method == "mac":
        return fit_mac_ordered(config.mac_config(seed), train, val)
    raise InvalidConfig(f"unknown method {method!r}; expected one of {METHODS}")


# ---------------------------------------------------------------- data sources


@dataclass(frozen=True)
class DgpSource:
    which: int
    n: int = 1000
    mc_size: int = dgp.DEFAULT_MC_SIZE
    calibration_seed: int = 0
    rho: float = dgp.DEFAULT_RHO
    cache_dir: str | None = None

    def describe(self) -> dict:
        return {"kind": "dgp", "which": self.which, "n": self.n, "mc_size": self.mc_size,
                "calibration_seed": self.calibration_seed, "rho": self.rho}

    def datasets(self):
        cal = dgp.calibrate_constants(self.which, self.mc_size, self.calibration_seed, self.rho, self.cache_dir)
        name = f"dgp{self.which}"

        def draw(seed):
            return dgp.generate(dgp.DgpConfig(self.which, self.n, seed, cal.constants, self.rho))

        yield name, draw


@dataclass(frozen=True)
class PmlbSource:
    entries: tuple[pmlb.DatasetManifest, ...]

    def describe(self) -> dict:
        return {"kind": "pmlb", "datasets": [{"name": e.name, "sha256": e.checksum} for e in self.entries]}

    def datasets(self):
        for entry in self.entries:
            try:
                data, _ = standardize(pmlb.parse(pmlb.verify(entry)))
            except MacError as err:
                yield entry.name, err
                continue
            yield entry.name, (lambda seed, data=data: data)


@dataclass(frozen=True)
class ExperimentPlan:
    source: DgpSource | PmlbSource
    methods: tuple[str, ...] = METHODS
    replications: int = 50
    fractions: tuple[float, ...] = (0.6, 0.2, 0.2)
    base_seed: int = 1
    config: HarnessConfig = field(default_factory=HarnessConfig)

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.replications < 1:
            raise InvalidConfig("replications must be >= 1")
        if not self.methods:
            raise InvalidConfig("methods must be non-empty")
        for m in self.methods:
            if m not in METHODS:
                raise InvalidConfig(f"unknown method {m!r}; expected one of {METHODS}")
        if len(self.fractions) != 3:
            raise InvalidConfig("experiments need (train, val, test) fractions")

    def describe(self) -> dict:
        return {
            "source": self.source.describe(),
            "methods": list(self.methods),
            "replications": self.replications,
            "fractions": list(self.fractions),
            "base_seed": self.base_seed,
            "config": self.config.to_dict(),
        }


# --------------------------------------------------------------------- reports


@dataclass(frozen=True)
class MspeRecord:
    dataset: str
    replication: int
    method: str
    mspe: float


@dataclass(frozen=True)
class SkipRecord:
    dataset: str
    replication: int | None
    method: str
    error: str


@dataclass(eq=False)
class RunReport:
    records: list[MspeRecord]
    skips: list[SkipRecord] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def methods(self) -> list[str]:
        seen = {r.method for r in self.records}
        return [m for m in METHODS if m in seen] + sorted(seen - set(METHODS))

    @property
    def datasets(self) -> list[str]:
        return sorted({r.dataset for r in self.records})

    def table(self) -> dict[tuple[str, int], dict[str, float]]:
        out: dict = {}
        for r in self.records:
            out.setdefault((r.dataset, r.replication), {})[r.method] = r.mspe
        return dict(sorted(out.items()))

    def _units(self, level: str) -> dict:
        """``{unit: {method: mspe}}`` per replication (pooled) or per-dataset means."""
        if level == "pooled":
            return self.table()
        if level != "per_dataset":
            raise InvalidConfig(f"unknown aggregation level {level!r}")
        sums: dict = {}
        for r in self.records:
            sums.setdefault(r.dataset, {}).setdefault(r.method, []).append(r.mspe)
        return {d: {m: float(np.mean(v)) for m, v in ms.items()} for d, ms in sorted(sums.items())}

    def aggregates(self, level: str = "pooled") -> dict[str, dict]:
        units = self._units(level)
        out = {}
        for m in self.methods:
            vals = np.array([u[m] for u in units.values() if m in u])
            out[m] = {"n": int(vals.size), "mean": float(vals.mean()), "median": float(np.median(vals))}
        return out

    def pairwise(self, level: str = "pooled", reference: str = "mac") -> dict[str, dict]:
        """Alternative - reference statistics on units where both were scored."""
        units = self._units(level)
        out = {}
        for m in self.methods:
            if m == reference:
                continue
            pairs = [(u[m], u[reference]) for u in units.values() if m in u and reference in u]
            if not pairs:
                continue
            alt, ref = (np.array(x) for x in zip(*pairs))
            wins_ref, wins_alt, ties = win_counts(ref, alt)
            row = {"n": len(pairs), "mean_diff": float(np.mean(alt - ref)),
                   "wins_mac": wins_ref, "wins_alt": wins_alt, "ties": ties}
            for key, fn in (("paired_t", paired_t), ("cohens_d", cohens_d)):
                try:
                    row[key] = fn(alt, ref)
                except (DegenerateStatistic, ValueError):
                    row[key] = None
            out[m] = row
        return out

    def to_dict(self) -> dict:
        return {
            "format": "maccollab.report",
            "version": REPORT_VERSION,
            "meta": self.meta,
            "records": [[r.dataset, r.replication, r.method, r.mspe] for r in self.records],
            "skips": [[s.dataset, s.replication, s.method, s.error] for s in self.skips],
            "aggregates": {lvl: {"methods": self.aggregates(lvl), "vs_mac": self.pairwise(lvl)}
                           for lvl in ("pooled", "per_dataset")} if self.records else {},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        if d.get("version") != REPORT_VERSION:
            raise InvalidConfig(f"unsupported report version {d.get('version')!r}")
        return cls(
            [MspeRecord(a, int(b), c, float(e)) for a, b, c, e in d["records"]],
            [SkipRecord(a, b, c, e) for a, b, c, e in d["skips"]],
            d.get("meta", {}),
        )

    def __eq__(self, other):
        if not isinstance(other, RunReport):
            return NotImplemented
        return self.records == other.records and self.skips == other.skips and self.meta == other.meta


def run_experiment(plan: ExperimentPlan) -> RunReport:
    """Replication ``r`` draws/splits with seed ``base_seed + r``."""
    records, skips = [], []
    for name, draw in plan.source.datasets():
        if isinstance(draw, Exception):
            skips.append(SkipRecord(name, None, "*", f"{type(draw).__name__}: {draw}"))
            log.warning("skipping dataset %s: %s", name, draw)
            continue
        for r in range(plan.replications):
            seed = plan.base_seed + r
            try:
                data = draw(seed)
                train, val, test = split(data, plan.fractions, seed).parts(data)
            except MacError as err:
                skips.append(SkipRecord(name, r, "*", f"{type(err).__name__}: {err}"))
                continue
            specs = plan.config.specs(seed)
            cache = _TunedCache(specs, train, val)
            for method in plan.methods:
                t0 = time.perf_counter()
                try:
                    model = fit_method(method, train, val, plan.config, seed, cache)
                    score = mspe(test.target, model.predict(test.features))
                except (MacError, ArithmeticError, np.linalg.LinAlgError) as err:
                    skips.append(SkipRecord(name, r, method, f"{type(err).__name__}: {err}"))
                    log.warning("%s rep %d %s failed: %s", name, r, method, err)
                    continue
                if not math.isfinite(score):
                    skips.append(SkipRecord(name, r, method, f"non-finite test MSPE {score}"))
                    continue
                records.append(MspeRecord(name, r, method, score))
                log.info("%s rep %d %-8s mspe=%.4f (%.1fs)", name, r, method, score, time.perf_counter() - t0)
    return RunReport(records, skips, plan.describe())


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v)) if isinstance(v, float) else str(v)


def long_table(report: RunReport) -> list[list[str]]:
    header = ["dataset", "replication", "method", "mspe", "mspe_minus_mac"]
    rows = [header]
    table = report.table()
    for r in report.records:
        mac = table[(r.dataset, r.replication)].get("mac")
        diff = None if (mac is None or r.method == "mac") else r.mspe - mac
        rows.append([r.dataset, str(r.replication), r.method, _fmt(r.mspe), _fmt(diff)])
    return rows


def aggregate_table(report: RunReport) -> list[list[str]]:
    header = ["level", "method", "n", "mean", "median", "mean_diff_vs_mac",
              "paired_t", "cohens_d", "wins_mac", "wins_alt", "ties"]
    rows = [header]
    for level in ("pooled", "per_dataset"):
        agg = report.aggregates(level)
        pw = report.pairwise(level)
        for m in report.methods:
            p = pw.get(m, {})
            rows.append([level, m, str(agg[m]["n"]), _fmt(agg[m]["mean"]), _fmt(agg[m]["median"]),
                         _fmt(p.get("mean_diff")), _fmt(p.get("paired_t")), _fmt(p.get("cohens_d")),
                         _fmt(p.get("wins_mac")), _fmt(p.get("wins_alt")), _fmt(p.get("ties"))])
    return rows


def csv_text(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def aggregates_path(path) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}_aggregates{path.suffix}")


def emit_report(report: RunReport, fmt: str, path) -> list[Path]:
    """Write the report; csv produces ``path`` plus ``<stem>_aggregates.csv``."""
    path = Path(path)
    if fmt == "json":
        text = json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n"
        path.write_text(text)
        return [path]
    if fmt == "csv":
        path.write_text(csv_text(long_table(report)))
        agg = aggregates_path(path)
        agg.write_text(csv_text(aggregate_table(report)) if report.records else "")
        return [path, agg]
    raise InvalidConfig(f"unknown report format {fmt!r}")


def load_report(path) -> RunReport:
    return RunReport.from_dict(json.loads(Path(path).read_text()))


def summary_lines(report: RunReport, level: str = "pooled") -> list[str]:
    agg = report.aggregates(level)
    pw = report.pairwise(level)
    lines = [f"{'method':<8} {'n':>4} {'mean':>8} {'median':>8} {'t':>8} {'d':>7} {'wins':>9}"]
    for m in report.methods:
        a = agg[m]
        p = pw.get(m)
        extra = ""
        if p:
            t = "nan" if p["paired_t"] is None else f"{p['paired_t']:.2f}"
            d = "nan" if p["cohens_d"] is None else f"{p['cohens_d']:.2f}"
            extra = f" {t:>8} {d:>7} {p['wins_mac']:>4}/{p['n']:<4}"
        lines.append(f"{m:<8} {a['n']:>4} {a['mean']:>8.4f} {a['median']:>8.4f}{extra}")
    return lines


def mspe_vectors(report: RunReport, methods: Sequence[str]) -> dict[str, np.ndarray]:
    """Aligned per-unit MSPE vectors for the units where every method scored."""
    units = [u for u in report.table().values() if all(m in u for m in methods)]
    return {m: np.array([u[m] for u in units]) for m in methods}
