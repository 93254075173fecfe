"""Experiment harness: per-instance ratio records, aggregation, bound checks.

One :class:`RatioRecord` row captures a single (instance, fleet, speed,
policy) run together with the two denominators every analysis needs: the
full-information optimum and the truck-only optimum.  Aggregation follows
the box-plot conventions used throughout the result figures: quartiles by
the exclusive median-of-halves rule, whiskers at the most extreme value
strictly inside 1.5 interquartile ranges beyond the box.

CSV files are loss-free: floats are written with shortest round-trip
precision, comma separated, UTF-8, newline-terminated.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, fields

from .graphs import RdpInstance
from .policies import simulate
from .solver import SolverCapError, rdp_star_opt, solver_context

log = logging.getLogger("relief_routing")

RATIO_TOL = 1e-9


@dataclass
class RatioRecord:
    instance_id: str
    graph_class: str
    n: int
    delta: float
    alpha: float
    trucks: int
    drones: int
    policy: str
    makespan: float
    opt_star: float
    truck_only_opt: float
    competitive_ratio: float
    drone_impact_ratio: float


RECORD_COLUMNS = tuple(f.name for f in fields(RatioRecord))

_INT_COLUMNS = {"n", "trucks", "drones"}
_STR_COLUMNS = {"instance_id", "graph_class", "policy"}


def evaluate(instance: RdpInstance, policies) -> list[RatioRecord]:
    """Simulate each policy on the instance and attach both ratios.

    The two denominators are computed once per instance.  Instances beyond
    the exact solver's subset cap are skipped with a logged reason.
    """
    meta = instance.meta
    try:
        opt = rdp_star_opt(instance).makespan
        truck_only = solver_context(instance.closure).multi_tsp(
            instance.targets, instance.trucks, 0).makespan
    except SolverCapError as exc:
        log.warning("skipping %s: %s", meta.get("id", "<instance>"), exc)
        return []
    records = []
    for policy in policies:
        outcome = simulate(instance, policy)
        records.append(RatioRecord(
            instance_id=str(meta.get("id", "instance")),
            graph_class=str(meta.get("class", "unknown")),
            n=int(meta.get("n", instance.graph.node_count)),
            delta=float(meta.get("delta") or 0.0),
            alpha=instance.alpha,
            trucks=instance.trucks,
            drones=instance.drones,
            policy=policy,
            makespan=outcome.makespan,
            opt_star=opt,
            truck_only_opt=truck_only,
            competitive_ratio=outcome.makespan / opt,
            drone_impact_ratio=outcome.makespan / truck_only,
        ))
    return records


# ---------------------------------------------------------------------------
# aggregation


@dataclass
class SummaryRow:
    group: tuple
    count: int
    min: float
    q25: float
    median: float
    q75: float
    max: float
    lo_whisker: float
    hi_whisker: float
    outliers: tuple[float, ...]


def _median(sorted_values) -> float:
    k = len(sorted_values)
    mid = k // 2
    if k % 2:
        return float(sorted_values[mid])
    return (sorted_values[mid - 1] + sorted_values[mid]) / 2.0


def quartiles(values) -> tuple[float, float, float]:
    """(q25, median, q75) by the exclusive median-of-halves convention: the
    overall median is dropped from both halves when the count is odd."""
    xs = sorted(values)
    if not xs:
        raise ValueError("empty group")
    med = _median(xs)
    half = len(xs) // 2
    lower = xs[:half]
    upper = xs[len(xs) - half:]
    q25 = _median(lower) if lower else med
    q75 = _median(upper) if upper else med
    return q25, med, q75


def summarize(values, group=()) -> SummaryRow:
    xs = sorted(values)
    q25, med, q75 = quartiles(xs)
    iqr = q75 - q25
    hi_bound = q75 + 1.5 * iqr
    lo_bound = q25 - 1.5 * iqr
    # whiskers stop at the most extreme value strictly inside the bounds,
    # clamped to the box edges so degenerate groups stay well-formed
    hi = max([x for x in xs if x < hi_bound] + [q75])
    lo = min([x for x in xs if x > lo_bound] + [q25])
    outliers = tuple(x for x in xs if x < lo or x > hi)
    return SummaryRow(group=tuple(group), count=len(xs), min=xs[0], q25=q25,
                      median=med, q75=q75, max=xs[-1], lo_whisker=lo,
                      hi_whisker=hi, outliers=outliers)


def aggregate(records, group_by, metric: str = "competitive_ratio") -> list[SummaryRow]:
    """Group records by the named columns and summarise one metric.

    Empty groups never appear (grouping is over observed key tuples); rows
    come back sorted by group key.
    """
    groups: dict[tuple, list[float]] = {}
    for record in records:
        key = tuple(getattr(record, col) for col in group_by)
        groups.setdefault(key, []).append(getattr(record, metric))
    return [summarize(groups[key], key) for key in sorted(groups)]


# ---------------------------------------------------------------------------
# theoretical-bound verification


@dataclass
class BoundViolation:
    record: RatioRecord
    rule: str
    bound: float
    value: float

    def describe(self) -> str:
        r = self.record
        return (f"{r.instance_id} alpha={r.alpha:g} fleet=({r.trucks},{r.drones}) "
                f"{r.policy}: {self.rule}: value {self.value!r} vs bound {self.bound!r}")


@dataclass
class BoundReport:
    violations: list[BoundViolation]
    tight: list[tuple[RatioRecord, str]]
    checked: int

    @property
    def ok(self) -> bool:
        return not self.violations


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def verify_bounds(records) -> BoundReport:
    """Check every record against the applicable analytic inequalities.

    Violations are returned as data, never raised; records whose ratio sits
    exactly on a bound (within tolerance) are flagged as tight.
    """
    violations = []
    tight = []
    checked = 0
    for r in records:
        checked += 1

        def against(rule, value, bound, side):
            off = value - bound if side == "upper" else bound - value
            if off > RATIO_TOL:
                violations.append(BoundViolation(record=r, rule=rule,
                                                 bound=bound, value=value))
            elif abs(value - bound) <= RATIO_TOL:
                tight.append((r, rule))

        against("competitive ratio >= 1", r.competitive_ratio, 1.0, "lower")
        if r.drone_impact_ratio <= 0:
            violations.append(BoundViolation(record=r, rule="drone impact > 0",
                                             bound=0.0, value=r.drone_impact_ratio))
        share = _ceil_div(r.drones, r.trucks) if r.drones else 0
        if r.policy == "optimistic":
            against("optimistic ratio cap", r.competitive_ratio,
                    min(2.0, 1.0 + r.alpha * share), "upper")
            against("optimistic impact floor", r.drone_impact_ratio,
                    1.0 / (1.0 + r.alpha * share), "lower")
        elif r.policy == "regretless":
            against("regretless ratio cap", r.competitive_ratio,
                    1.0 + r.alpha * share, "upper")
            against("regretless impact cap", r.drone_impact_ratio, 1.0, "upper")
            against("regretless impact floor", r.drone_impact_ratio,
                    1.0 / (1.0 + r.alpha * share), "lower")
    return BoundReport(violations=violations, tight=tight, checked=checked)


# ---------------------------------------------------------------------------
# loss-free CSV


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def records_to_csv(records) -> str:
    lines = [",".join(RECORD_COLUMNS)]
    for r in records:
        lines.append(",".join(_format_value(getattr(r, col)) for col in RECORD_COLUMNS))
    return "\n".join(lines) + "\n"


def records_from_csv(text: str) -> list[RatioRecord]:
    lines = [line for line in text.split("\n") if line]
    header = lines[0].split(",")
    if tuple(header) != RECORD_COLUMNS:
        raise ValueError(f"unexpected record CSV header: {header}")
    out = []
    for line in lines[1:]:
        parts = line.split(",")
        kwargs = {}
        for col, raw in zip(RECORD_COLUMNS, parts):
            if col in _STR_COLUMNS:
                kwargs[col] = raw
            elif col in _INT_COLUMNS:
                kwargs[col] = int(raw)
            else:
                kwargs[col] = float(raw)
        out.append(RatioRecord(**kwargs))
    return out


def summaries_to_csv(rows, group_names) -> str:
    header = list(group_names) + ["count", "min", "q25", "median", "q75", "max",
                                  "lo_whisker", "hi_whisker", "outliers"]
    lines = [",".join(header)]
    for row in rows:
        cells = [_format_value(v) for v in row.group]
        cells += [str(row.count)]
        cells += [repr(v) for v in (row.min, row.q25, row.median, row.q75,
                                    row.max, row.lo_whisker, row.hi_whisker)]
        cells.append(";".join(repr(v) for v in row.outliers))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
