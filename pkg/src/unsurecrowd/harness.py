"""Experiment sweeps: seeded simulation grid, CSV persistence, and SVG plots.

A sweep is a grid over (crowd, mechanism, labels-per-task). Each grid cell is
seeded independently from the master seed, so results are identical no matter
how cells are scheduled.
"""
from __future__ import annotations

import concurrent.futures
import csv
import os
from dataclasses import dataclass

import numpy as np

from . import bounds, crowd, mechanisms, olu
from .aggregation import wilson_interval
from .errors import ConfigError

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

SEED_ENV_VAR = "UNSURECROWD_SEED"
DEFAULT_SEED = 20240817
DEFAULT_CANDIDATES = tuple(round(0.55 + 0.05 * i, 2) for i in range(10))  # 0.55 .. 1.0
DEFAULT_LABELS_PER_TASK = (3, 5, 9, 15, 25)

CSV_HEADER = ["crowd", "mechanism", "labels_per_task", "accuracy", "ci_low", "ci_high",
              "mean_cost", "mean_unsure_rate", "seed"]


@dataclass(frozen=True)
class UnsureTheory:
    """Placeholder mechanism: threshold resolved per crowd from its variance-optimal plan."""


@dataclass(frozen=True)
class CrowdEntry:
    name: str
    spec: crowd.AbilitySpec
    link: crowd.ConfidenceLink


@dataclass(frozen=True)
class MechanismEntry:
    name: str
    mech: object  # MechanismConfig or UnsureTheory
    pay: mechanisms.PaymentScheme


@dataclass(frozen=True)
class ExperimentConfig:
    crowds: tuple
    mechanisms: tuple
    test: crowd.GoldenTestConfig
    tasks: int
    labels_per_task: tuple
    replications: int
    seed: int

    def __post_init__(self):
        if self.tasks <= 0 or self.replications <= 0:
            raise ConfigError("tasks and replications must be positive")
        if len(self.labels_per_task) == 0 or any(n <= 0 for n in self.labels_per_task):
            raise ConfigError("labels_per_task must be positive counts")
        for entries, what in ((self.crowds, "crowd"), (self.mechanisms, "mechanism")):
            names = [e.name for e in entries]
            if len(names) != len(set(names)):
                raise ConfigError(f"duplicate {what} names in config")
        if len(self.crowds) == 0 or len(self.mechanisms) == 0:
            raise ConfigError("need at least one crowd and one mechanism")


@dataclass(frozen=True)
class ResultRow:
    crowd: str
    mechanism: str
    labels_per_task: int
    accuracy: float
    ci_low: float
    ci_high: float
    mean_cost: float
    mean_unsure_rate: float
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ConfigError(f"accuracy {self.accuracy} outside [0,1]")
        if not self.ci_low <= self.accuracy <= self.ci_high:
            raise ConfigError("confidence interval does not bracket the accuracy")


def default_seed() -> int:
    env = os.environ.get(SEED_ENV_VAR)
    return int(env) if env else DEFAULT_SEED


def resolve_mechanism(entry: MechanismEntry, spec: crowd.AbilitySpec):
    """Replace the Theory placeholder with a fixed-threshold unsure mechanism for this crowd."""
    if isinstance(entry.mech, UnsureTheory):
        t = crowd.dist_mean(spec) + bounds.threshold_shift(crowd.dist_variance(spec))
        return mechanisms.UnsureFixed(T=min(t, 1.0))
    return entry.mech


def _run_online_cell(ce: CrowdEntry, me: MechanismEntry, test: crowd.GoldenTestConfig,
                     tasks: int, n_labels: int, rng: np.random.Generator):
    """One continuous bandit stream; task label quotas filled from returns in arrival order."""
    state = olu.BanditState(candidates=tuple(me.mech.candidates))
    outcomes = []
    for _ in range(tasks):
        truth = 1 if rng.random() < 0.5 else -1
        labels = []
        unsure_offered = []  # threshold offered on each unsure round
        while len(labels) < n_labels:
            arm = state.select_arm()
            t = state.candidates[arm]
            draw = crowd.post_test_sampler(ce.spec, ce.link, test, rng)
            returned = draw.confidence >= t
            state.update(arm, olu.reward(t, returned))
            if returned:
                labels.append(crowd.generate_label(draw, truth, rng))
            else:
                unsure_offered.append(t)
        estimate = 1 if sum(labels) >= 0 else -1
        if isinstance(me.pay, mechanisms.Flat):
            cost = me.pay.unit * (len(labels) + len(unsure_offered))
        else:
            # incentive-compatible: agreement pays 1, unsure pays the offered threshold
            cost = sum(1.0 for v in labels if v == estimate) + sum(unsure_offered)
        outcomes.append((truth, estimate, cost, len(unsure_offered),
                         len(labels) + len(unsure_offered)))
    return outcomes


def _run_cell(cfg: ExperimentConfig, ci: int, mi: int, n_labels: int) -> ResultRow:
    ce = cfg.crowds[ci]
    me = cfg.mechanisms[mi]
    try:
        mech = resolve_mechanism(me, ce.spec)
        outcomes = []
        for rep in range(cfg.replications):
            ss = np.random.SeedSequence(cfg.seed, spawn_key=(ci, mi, n_labels, rep))
            rng = np.random.default_rng(ss)
            if isinstance(mech, mechanisms.UnsureOnline):
                outcomes.extend(_run_online_cell(ce, me, cfg.test, cfg.tasks, n_labels, rng))
            else:
                stop = mechanisms.FixedReturnedLabels(n_labels)
                for _ in range(cfg.tasks):
                    truth = 1 if rng.random() < 0.5 else -1
                    res = mechanisms.run_task(mech, me.pay, ce.spec, ce.link, cfg.test,
                                              stop, truth, rng)
                    outcomes.append((res.truth, res.estimate, res.total_payment,
                                     res.unsure_count, res.workers_consumed))
    except Exception as exc:
        raise type(exc)(f"[crowd={ce.name}, mechanism={me.name}] {exc}") from exc

    hits = sum(1 for truth, est, *_ in outcomes if truth == est)
    lo, hi = wilson_interval(hits, len(outcomes))
    total_consumed = sum(o[4] for o in outcomes)
    return ResultRow(
        crowd=ce.name,
        mechanism=me.name,
        labels_per_task=n_labels,
        accuracy=hits / len(outcomes),
        ci_low=lo,
        ci_high=hi,
        mean_cost=sum(o[2] for o in outcomes) / len(outcomes),
        mean_unsure_rate=sum(o[3] for o in outcomes) / total_consumed if total_consumed else 0.0,
        seed=cfg.seed,
    )


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> list[ResultRow]:
    cells = [(ci, mi, n)
             for ci in range(len(cfg.crowds))
             for mi in range(len(cfg.mechanisms))
             for n in cfg.labels_per_task]
    if threads > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_cell_worker, [(cfg, *cell) for cell in cells]))
    else:
        rows = [_run_cell(cfg, *cell) for cell in cells]
    return rows


def _cell_worker(args):
    return _run_cell(*args)


def _fmt(v) -> str:
    return format(v, ".9g") if isinstance(v, float) else str(v)


def write_results(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([
                row.crowd, row.mechanism, row.labels_per_task,
                _fmt(row.accuracy), _fmt(row.ci_low), _fmt(row.ci_high),
                _fmt(row.mean_cost), _fmt(row.mean_unsure_rate), row.seed,
            ])


def read_results(path) -> list[ResultRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty results file") from None
        for col in header:
            if col not in CSV_HEADER:
                raise ConfigError(f"{path}:1: unknown column '{col}'")
        if header != CSV_HEADER:
            raise ConfigError(f"{path}:1: header must be exactly {','.join(CSV_HEADER)}")
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(CSV_HEADER):
                raise ConfigError(f"{path}:{lineno}: expected {len(CSV_HEADER)} fields, got {len(rec)}")
            try:
                rows.append(ResultRow(
                    crowd=rec[0], mechanism=rec[1], labels_per_task=int(rec[2]),
                    accuracy=float(rec[3]), ci_low=float(rec[4]), ci_high=float(rec[5]),
                    mean_cost=float(rec[6]), mean_unsure_rate=float(rec[7]), seed=int(rec[8]),
                ))
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return rows


# fixed palette so plot bytes depend only on the input rows
_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]

_PANEL_W, _PANEL_H = 320, 300
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 52, 16, 34, 42


def _ordered_unique(values):
    seen = []
    for v in values:
        if v not in seen:
            seen.append(v)
    return seen


def emit_plot(rows, path) -> None:
    """One panel per crowd: accuracy vs labels-per-task, CI whiskers, one polyline per mechanism."""
    rows = list(rows)
    if not rows:
        raise ConfigError("emit_plot needs at least one result row")
    crowds = _ordered_unique(r.crowd for r in rows)
    mechs = _ordered_unique(r.mechanism for r in rows)
    xs = sorted(set(r.labels_per_task for r in rows))
    y_min = min(0.5, min(r.ci_low for r in rows))
    y_min = np.floor(y_min * 10.0) / 10.0
    y_max = 1.0

    def sx(panel, x):
        x0 = panel * _PANEL_W + _MARGIN_L
        span = _PANEL_W - _MARGIN_L - _MARGIN_R
        if len(xs) == 1 or xs[-1] == xs[0]:
            return x0 + span / 2.0
        return x0 + span * (x - xs[0]) / (xs[-1] - xs[0])

    def sy(y):
        span = _PANEL_H - _MARGIN_T - _MARGIN_B
        return _MARGIN_T + span * (y_max - y) / (y_max - y_min)

    def f(v):
        return format(v, ".2f")

    width = _PANEL_W * len(crowds)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{_PANEL_H}" '
        f'viewBox="0 0 {width} {_PANEL_H}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{_PANEL_H}" fill="white"/>',
    ]
    for p, cname in enumerate(crowds):
        x0, x1 = p * _PANEL_W + _MARGIN_L, (p + 1) * _PANEL_W - _MARGIN_R
        y0, y1 = sy(y_max), sy(y_min)
        parts.append(f'<text x="{f((x0 + x1) / 2)}" y="18" text-anchor="middle" '
                     f'font-size="13">{cname}</text>')
        parts.append(f'<line x1="{f(x0)}" y1="{f(y1)}" x2="{f(x1)}" y2="{f(y1)}" stroke="black"/>')
        parts.append(f'<line x1="{f(x0)}" y1="{f(y0)}" x2="{f(x0)}" y2="{f(y1)}" stroke="black"/>')
        for x in xs:
            parts.append(f'<text x="{f(sx(p, x))}" y="{f(y1 + 16)}" text-anchor="middle">{x}</text>')
        ticks = np.arange(y_min, y_max + 1e-9, (y_max - y_min) / 5.0)
        for ty in ticks:
            parts.append(f'<text x="{f(x0 - 6)}" y="{f(sy(ty) + 4)}" '
                         f'text-anchor="end">{format(ty, ".2f")}</text>')
        parts.append(f'<text x="{f((x0 + x1) / 2)}" y="{f(_PANEL_H - 6)}" '
                     f'text-anchor="middle">labels per task</text>')
        for mi, mname in enumerate(mechs):
            color = _PALETTE[mi % len(_PALETTE)]
            series = sorted((r.labels_per_task, r) for r in rows
                            if r.crowd == cname and r.mechanism == mname)
            if not series:
                continue
            pts = " ".join(f"{f(sx(p, x))},{f(sy(r.accuracy))}" for x, r in series)
            parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
            for x, r in series:
                cx = sx(p, x)
                parts.append(f'<line x1="{f(cx)}" y1="{f(sy(r.ci_low))}" x2="{f(cx)}" '
                             f'y2="{f(sy(r.ci_high))}" stroke="{color}"/>')
                parts.append(f'<circle cx="{f(cx)}" cy="{f(sy(r.accuracy))}" r="2.5" fill="{color}"/>')
    for mi, mname in enumerate(mechs):
        color = _PALETTE[mi % len(_PALETTE)]
        lx = _MARGIN_L + 80 * mi
        parts.append(f'<line x1="{f(lx)}" y1="28" x2="{f(lx + 16)}" y2="28" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{f(lx + 20)}" y="32">{mname}</text>')
    parts.append("</svg>")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")


def default_sweep_config(seed: int | None = None, tasks: int = 2000,
                labels_per_task=DEFAULT_LABELS_PER_TASK, replications: int = 1,
                include_online: bool = True) -> ExperimentConfig:
    """Default sweep: three Beta crowds, folded confidence, k=1, SA vs Theory (vs OLU)."""
    mech_entries = [
        MechanismEntry("SA", mechanisms.Simple(), mechanisms.Flat()),
        MechanismEntry("Theory", UnsureTheory(), mechanisms.Flat()),
    ]
    if include_online:
        mech_entries.append(MechanismEntry(
            "OLU", mechanisms.UnsureOnline(DEFAULT_CANDIDATES), mechanisms.Flat()))
    return ExperimentConfig(
        crowds=(
            CrowdEntry("beta-0.55-0.5", crowd.Beta(0.55, 0.5), crowd.Folded()),
            CrowdEntry("beta-1.1-1", crowd.Beta(1.1, 1.0), crowd.Folded()),
            CrowdEntry("beta-2.2-2", crowd.Beta(2.2, 2.0), crowd.Folded()),
        ),
        mechanisms=tuple(mech_entries),
        test=crowd.GoldenTestConfig(k=1),
        tasks=tasks,
        labels_per_task=tuple(labels_per_task),
        replications=replications,
        seed=default_seed() if seed is None else seed,
    )


def _parse_spec(table: dict, where: str) -> crowd.AbilitySpec:
    dist = table.get("dist", "beta")
    try:
        if dist == "beta":
            return crowd.Beta(table["alpha"], table["beta"])
        if dist == "truncated_beta":
            return crowd.TruncatedBeta(table["alpha"], table["beta"], table["floor"])
        if dist == "point_mass":
            return crowd.PointMass(table["theta"])
        if dist == "empirical":
            return crowd.Empirical(tuple(table["samples"]))
    except KeyError as exc:
        raise ConfigError(f"{where}: missing field {exc} for dist '{dist}'") from None
    raise ConfigError(f"{where}: unknown dist '{dist}'")


def _parse_link(table: dict, where: str) -> crowd.ConfidenceLink:
    link = table.get("link", "folded")
    if link == "folded":
        return crowd.Folded()
    if link == "identity":
        return crowd.IdentityClamped()
    if link == "noisy_folded":
        if "kappa" not in table:
            raise ConfigError(f"{where}: noisy_folded link needs 'kappa'")
        return crowd.NoisyFolded(table["kappa"])
    raise ConfigError(f"{where}: unknown link '{link}'")


def _parse_mechanism(table: dict, where: str):
    kind = table.get("kind")
    try:
        if kind == "simple":
            return mechanisms.Simple()
        if kind == "quality":
            return mechanisms.QualityEnsured(table["threshold"])
        if kind == "unsure_fixed":
            return mechanisms.UnsureFixed(table["threshold"])
        if kind == "unsure_theory":
            return UnsureTheory()
        if kind == "unsure_online":
            return mechanisms.UnsureOnline(tuple(table.get("candidates", DEFAULT_CANDIDATES)))
    except KeyError as exc:
        raise ConfigError(f"{where}: missing field {exc} for kind '{kind}'") from None
    raise ConfigError(f"{where}: unknown mechanism kind '{kind}'")


def _parse_payment(table: dict, where: str) -> mechanisms.PaymentScheme:
    pay = table.get("payment", "flat")
    if pay == "flat":
        return mechanisms.Flat(table.get("unit", 1.0))
    if pay == "incentive":
        if "threshold" not in table:
            raise ConfigError(f"{where}: incentive payment needs the mechanism 'threshold'")
        return mechanisms.IncentiveCompatible(table["threshold"])
    raise ConfigError(f"{where}: unknown payment '{pay}'")


def load_config(path, seed_override: int | None = None) -> ExperimentConfig:
    """Parse a TOML sweep config (schema in the README)."""
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    exp = data.get("experiment", {})
    crowds = []
    for i, table in enumerate(data.get("crowds", [])):
        where = f"{path}: crowds[{i}]"
        if "name" not in table:
            raise ConfigError(f"{where}: missing 'name'")
        crowds.append(CrowdEntry(table["name"], _parse_spec(table, where),
                                 _parse_link(table, where)))
    mechs = []
    for i, table in enumerate(data.get("mechanisms", [])):
        where = f"{path}: mechanisms[{i}]"
        if "name" not in table:
            raise ConfigError(f"{where}: missing 'name'")
        mechs.append(MechanismEntry(table["name"], _parse_mechanism(table, where),
                                    _parse_payment(table, where)))
    seed = seed_override if seed_override is not None else exp.get("seed", default_seed())
    return ExperimentConfig(
        crowds=tuple(crowds),
        mechanisms=tuple(mechs),
        test=crowd.GoldenTestConfig(k=exp.get("golden_tasks", 0)),
        tasks=exp.get("tasks", 2000),
        labels_per_task=tuple(exp.get("labels_per_task", DEFAULT_LABELS_PER_TASK)),
        replications=exp.get("replications", 1),
        seed=seed,
    )
