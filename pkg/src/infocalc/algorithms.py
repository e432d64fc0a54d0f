"""Achievable-rate search and transmission scheduling.

``ratecal`` enumerates path subsets, applies interference impairment inside
each subset, concatenates nodes per path and combines the paths in parallel,
yielding the list of stochastically achievable service models (optionally
pruned by the dominance relation).  ``bflr`` (best-fit, largest redundancy)
greedily packs sources onto the paths of each candidate subset, fusing
same-group sources to exploit their redundancy and verifying each path with
the stochastic delay bound.  ``delivery_ratio`` is the relaxation used when
no schedule meets the delay bound: it lower-bounds the fraction of source
information delivered within the bound at a given violation probability.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

from .bounding import ExpBound, ZeroBound, bf_convolve, bf_invert, grid_step, shift_bound
from .calculus import (
    GuaranteeReport,
    IssSpec,
    delay_bound,
    parallel,
    redundancy_preserved,
    service_deficit,
)
from .curves import INF, Curve
from .errors import InfiniteDeviation, SubsetLimitExceeded
from .scenario import Scenario, effective_path_service
from .sources import (
    SourceModel,
    aggregate_information,
    gaussian_arrival_curve,
    marginal_redundancy_rate,
)

SUBSET_LIMIT = 24


@dataclass(frozen=True)
class AchievableRate:
    """One subset of paths and the service it can jointly provide."""

    subset: tuple[str, ...]
    service: IssSpec


@dataclass(frozen=True)
class Schedule:
    """Feasible assignment of sources to the paths of one subset, with the
    per-path delay-bound certificates that proved it."""

    assignment: Mapping[str, str]  # source id -> path id
    subset: tuple[str, ...]
    certificates: Mapping[str, GuaranteeReport]  # path id -> delay report

    def sources_on(self, path_id: str) -> list[str]:
        return sorted(sid for sid, pid in self.assignment.items() if pid == path_id)


@dataclass(frozen=True)
class Infeasible:
    """Negative scheduling answer (a value, not a fault)."""

    reason: str = "no feasible transmission schedule"


@dataclass(frozen=True)
class RatioResult:
    """Lower bound on the information delivery ratio within a delay bound."""

    subset: tuple[str, ...]
    ratio_lower_bound: float
    violation_probability: float
    horizon: float
    undelivered_quantile: float
    clamped: bool = False
    fully_delivered_paths: tuple[str, ...] = ()
    unassigned_sources: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# RateCal
# ---------------------------------------------------------------------------


def subset_service(s: Scenario, subset: Sequence[str],
                   bounding_overrides: Mapping[str, tuple[float, float]] | None = None,
                   ) -> IssSpec:
    """Parallel composition of the subset's impaired end-to-end paths."""
    active = set(subset)
    return parallel([effective_path_service(s, active, pid, bounding_overrides)
                     for pid in subset])


def ratecal(s: Scenario, prune: bool = False,
            bounding_overrides: Mapping[str, tuple[float, float]] | None = None,
            ) -> list[AchievableRate]:
    """Stochastically achievable information delivery rates: one per non-empty
    path subset; with ``prune``, dominated subsets are dropped."""
    ids = s.path_ids()
    if len(ids) > SUBSET_LIMIT:
        raise SubsetLimitExceeded(f"{len(ids)} paths exceed the 2^{SUBSET_LIMIT} guard")
    rates = []
    for k in range(1, len(ids) + 1):
        for combo in itertools.combinations(ids, k):
            rates.append(AchievableRate(combo, subset_service(s, combo, bounding_overrides)))
    if prune:
        rates = [r for r in rates
                 if not any(o is not r and dominates(o.service, r.service) for o in rates)]
    return rates


def dominates(a: IssSpec, b: IssSpec) -> bool:
    """True iff ``a`` is strictly better: curve above for all t > 0 and
    bounding below for all x.  Exponential/affine forms are compared by
    parameters; anything else falls back to a sampled comparison."""
    return _curve_strictly_above(a.curve, b.curve) and _bounding_le(a.bounding, b.bounding)


def _curve_strictly_above(a: Curve, b: Curve) -> bool:
    points = sorted(set(a.breakpoints()) | set(b.breakpoints()))
    if a.value(0) < b.value(0):
        return False
    for t in points[1:]:
        if not a.value(t) > b.value(t):
            return False
    probe = points[-1] + 1
    if not a.value(probe) > b.value(probe):
        return False
    return a.final_slope >= b.final_slope


def _bounding_le(f, g) -> bool:
    if f.is_zero:
        return True
    if g.is_zero:
        return False
    if isinstance(f, ExpBound) and isinstance(g, ExpBound):
        return f.a <= g.a and f.b <= g.b and f.x0 <= g.x0
    # sampled fallback over the configured grid
    step = grid_step()
    x_max = max(f.reach(), g.reach(), 1.0)
    n = min(int(x_max / step) + 2, 2001)
    for k in range(n):
        x = x_max * k / (n - 1)
        if f.value(x) > g.value(x) + 1e-12:
            return False
    return True


# ---------------------------------------------------------------------------
# BFLR
# ---------------------------------------------------------------------------


def gaussian_rate(src: SourceModel) -> float:
    return gaussian_arrival_curve(src).curve.final_slope


def _sorted_sources(s: Scenario) -> list[SourceModel]:
    return sorted(s.sources, key=lambda src: (-gaussian_rate(src), src.id))


def _next_by_redundancy(remaining: list[SourceModel], chosen: list[SourceModel],
                        spatial) -> SourceModel:
    return min(remaining,
               key=lambda src: (-marginal_redundancy_rate(src, chosen, spatial),
                                -gaussian_rate(src), src.id))


def _path_order(s: Scenario, subset: Sequence[str]) -> list[str]:
    # ordered by standalone service rate; in-subset impaired rates would
    # reorder tied paths and break the published assignment pattern
    return sorted(subset, key=lambda pid: (-s.path(pid).standalone_rate, pid))


def _path_check(arrival, service, p: float, delay: float) -> GuaranteeReport | None:
    """Stochastic delay-bound feasibility of one path for one fused arrival set."""
    if arrival.asymptotic_rate >= service.asymptotic_rate:
        return None
    try:
        report = delay_bound(arrival, service, p)
    except InfiniteDeviation:
        return None
    return report if report.derived_quantile <= delay else None


def schedule_subset(s: Scenario, subset: Sequence[str], delay: float, p: float,
                    bounding_overrides: Mapping[str, tuple[float, float]] | None = None,
                    ) -> Schedule | Infeasible:
    """Best-fit/largest-redundancy packing of all sources onto one subset."""
    services = {pid: effective_path_service(s, set(subset), pid, bounding_overrides)
                for pid in subset}
    remaining = _sorted_sources(s)
    assignment: dict[str, str] = {}
    certificates: dict[str, GuaranteeReport] = {}
    if not remaining:
        return Schedule(assignment, tuple(subset), certificates)
    for pid in _path_order(s, subset):
        service = services[pid]
        best = next((src for src in remaining
                     if gaussian_rate(src) < service.asymptotic_rate), None)
        if best is None:
            continue
        report = _path_check(aggregate_information([best], s.spatial), service, p, delay)
        if report is None:
            continue
        chosen = [best]
        remaining.remove(best)
        # grow the fused set by largest marginal redundancy until the path check fails
        while remaining:
            cand = _next_by_redundancy(remaining, chosen, s.spatial)
            trial = _path_check(aggregate_information(chosen + [cand], s.spatial),
                                service, p, delay)
            if trial is None:
                break
            chosen.append(cand)
            remaining.remove(cand)
            report = trial
        for src in chosen:
            assignment[src.id] = pid
        certificates[pid] = report
        if not remaining:
            return Schedule(assignment, tuple(subset), certificates)
    return Infeasible(f"sources left unassigned on subset {tuple(subset)}: "
                      f"{sorted(src.id for src in remaining)}")


def feasible_rates(s: Scenario, prune: bool = False,
                   bounding_overrides: Mapping[str, tuple[float, float]] | None = None,
                   ) -> list[AchievableRate]:
    """RateCal output filtered to rates at or above the total arrival rate of
    the source set, sorted by decreasing rate (ties by subset id)."""
    total = aggregate_information(list(s.sources), s.spatial).asymptotic_rate
    rates = [r for r in ratecal(s, prune, bounding_overrides)
             if r.service.asymptotic_rate >= total]
    rates.sort(key=lambda r: (-float(r.service.asymptotic_rate), r.subset))
    return rates


def bflr(s: Scenario, delay: float, p: float, prune: bool = False,
         bounding_overrides: Mapping[str, tuple[float, float]] | None = None,
         ) -> Schedule | Infeasible:
    """Search for a feasible transmission schedule.

    Tries the achievable subsets in decreasing-rate order and returns the
    first feasible best-fit/largest-redundancy packing; ``Infeasible`` after
    all subsets have been checked.
    """
    for rate in feasible_rates(s, prune, bounding_overrides):
        result = schedule_subset(s, rate.subset, delay, p, bounding_overrides)
        if isinstance(result, Schedule):
            return result
    return Infeasible()


def bflr_table(s: Scenario, delay: float, p: float, prune: bool = False,
               bounding_overrides: Mapping[str, tuple[float, float]] | None = None,
               ) -> list[tuple[tuple[str, ...], Schedule | Infeasible]]:
    """Per-subset scheduling outcomes for every above-rate subset (the
    published-results table enumerates these rather than stopping early)."""
    return [(rate.subset, schedule_subset(s, rate.subset, delay, p, bounding_overrides))
            for rate in feasible_rates(s, prune, bounding_overrides)]


# ---------------------------------------------------------------------------
# Delivery ratio
# ---------------------------------------------------------------------------


def _ratio_assignment(s: Scenario, subset: Sequence[str],
                      services: Mapping[str, IssSpec]) -> tuple[dict[str, str], list[SourceModel]]:
    """Ratio-variant packing: rate checks only, no delay gate."""
    remaining = _sorted_sources(s)
    assignment: dict[str, str] = {}
    for pid in _path_order(s, subset):
        service = services[pid]
        best = next((src for src in remaining
                     if gaussian_rate(src) < service.asymptotic_rate), None)
        if best is None:
            continue
        chosen = [best]
        remaining.remove(best)
        while remaining:
            cand = _next_by_redundancy(remaining, chosen, s.spatial)
            combined = aggregate_information(chosen + [cand], s.spatial)
            if combined.asymptotic_rate >= service.asymptotic_rate:
                break
            chosen.append(cand)
            remaining.remove(cand)
        for src in chosen:
            assignment[src.id] = pid
    return assignment, remaining


def delivery_ratio(s: Scenario, schedule_or_subset, delay: float, p: float, horizon: float,
                   bounding_overrides: Mapping[str, tuple[float, float]] | None = None,
                   ) -> RatioResult:
    """Lower bound on the fraction of source information delivered within
    ``delay`` seconds, violated with probability at most ``p``.

    Per path the backlog-within-delay bound is inverted at ``p``; paths whose
    plain delay quantile already meets ``delay`` contribute a Zero bound
    (they deliver fully).  Path bounds combine by convolution, and source-side
    cross-path redundancy carries to the sink unchanged, so the combined
    quantile subtracts directly from the aggregate source information.
    """
    if not 0 < p <= 1:
        raise ValueError("violation probability must lie in (0, 1]")
    if isinstance(schedule_or_subset, Schedule):
        subset = schedule_or_subset.subset
        services = {pid: effective_path_service(s, set(subset), pid, bounding_overrides)
                    for pid in subset}
        assignment = dict(schedule_or_subset.assignment)
        leftovers = [src for src in s.sources if src.id not in assignment]
    else:
        subset = tuple(schedule_or_subset)
        services = {pid: effective_path_service(s, set(subset), pid, bounding_overrides)
                    for pid in subset}
        assignment, leftovers = _ratio_assignment(s, subset, services)

    by_path: dict[str, list[SourceModel]] = {}
    for src in s.sources:
        pid = assignment.get(src.id)
        if pid is not None:
            by_path.setdefault(pid, []).append(src)

    combined = ZeroBound()
    full_paths = []
    for pid in sorted(by_path):
        arrival = aggregate_information(by_path[pid], s.spatial)
        service = services[pid]
        quantile = None
        if arrival.asymptotic_rate < service.asymptotic_rate:
            try:
                quantile = delay_bound(arrival, service, p).derived_quantile
            except InfiniteDeviation:
                quantile = None
        if quantile is not None and quantile <= delay:
            full_paths.append(pid)
            continue
        c = service_deficit(arrival, service, delay)
        if c == -INF:
            # the path cannot keep up at all: count its sources as undelivered
            leftovers = leftovers + by_path[pid]
            continue
        fg = bf_convolve(arrival.bounding, service.bounding)
        combined = bf_convolve(combined, shift_bound(fg, -c))

    quantile = 0.0 if combined.is_zero else bf_invert(combined, p)
    total_curve = aggregate_information(list(s.sources), s.spatial).curve
    h_total = float(total_curve.value(horizon))
    h_left = float(aggregate_information(leftovers, s.spatial).curve.value(horizon)) if leftovers else 0.0
    # source-side cross-path redundancy carries to the sink unchanged,
    # so the aggregate envelope is the right denominator
    h_left = redundancy_preserved(h_left)
    if h_total > 0:
        raw = (h_total - h_left - quantile) / h_total
    else:
        raw = 1.0 if quantile == 0 and not leftovers else 0.0
    clamped = raw < 0
    return RatioResult(subset, max(0.0, raw), p, horizon, quantile,
                       clamped=clamped,
                       fully_delivered_paths=tuple(full_paths),
                       unassigned_sources=tuple(sorted(src.id for src in leftovers)))


def calibrate_horizon(s: Scenario, subset: Sequence[str], delay: float, p: float,
                      target_ratio: float,
                      bounding_overrides: Mapping[str, tuple[float, float]] | None = None,
                      ) -> float:
    """Horizon t for which the delivery-ratio lower bound equals
    ``target_ratio`` on the given subset/delay/probability cell."""
    if not 0 < target_ratio < 1:
        raise ValueError("target ratio must lie in (0, 1)")
    probe = delivery_ratio(s, subset, delay, p, horizon=1.0,
                           bounding_overrides=bounding_overrides)
    needed = probe.undelivered_quantile / (1.0 - target_ratio)
    total_curve = aggregate_information(list(s.sources), s.spatial).curve
    t = total_curve.first_reach(needed)
    if t == INF:
        raise ValueError("target ratio unreachable: total information never reaches the required level")
    return float(t)


__all__ = [
    "AchievableRate",
    "Schedule",
    "Infeasible",
    "RatioResult",
    "subset_service",
    "ratecal",
    "dominates",
    "schedule_subset",
    "bflr",
    "bflr_table",
    "feasible_rates",
    "delivery_ratio",
    "calibrate_horizon",
    "SUBSET_LIMIT",
]
