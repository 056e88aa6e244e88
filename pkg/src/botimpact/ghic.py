"""Generalized harmonic influence centrality via removal and re-solve.

The centrality of a node set S on a network is the change it causes in the
mean equilibrium opinion of the non-stubborn nodes: solve the equilibrium
with S present and again on the network with S removed, then average
theta_i - theta'_i over the non-stubborn nodes outside S.  Positive values
mean S pulls the discussion toward opinion 1, negative toward 0.

Non-stubborn nodes that lose every rated following when S is removed revert
to their measured opinion (the removed-network preprocess reclassifies them
stubborn at that value); they stay in the average at that value, which is
what makes the centrality reflect how far S had pulled its audience.  The
count of such reverted nodes is reported on the result.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import date
from typing import Iterable, Mapping

import numpy as np

from .graph import DirectedGraph
from .opinion import (
    DEFAULT_DENSE_CUTOFF,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    SolverError,
    StubbornAssignment,
    solve_network,
)

log = logging.getLogger(__name__)


@dataclass
class GhicResult:
    target_set: frozenset[str]
    value: float
    averaged_over: int
    reverted: int  # nodes valued at their measured opinion after removal

    def __repr__(self) -> str:  # compact for logs
        return (
            f"GhicResult(|S|={len(self.target_set)}, value={self.value:.6g}, "
            f"n={self.averaged_over}, reverted={self.reverted})"
        )


@dataclass
class SolveSettings:
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    dense_cutoff: int = DEFAULT_DENSE_CUTOFF


def _network_inputs(
    graph: DirectedGraph,
    rates: Mapping[str, float],
    assignment: StubbornAssignment,
    opinions: Mapping[str, float],
) -> tuple[np.ndarray, dict[int, float], np.ndarray]:
    """Index-aligned rate vector, stubborn map, measured opinions for a graph."""
    n = graph.node_count
    lam = np.zeros(n)
    measured = np.full(n, 0.5)
    psi: dict[int, float] = {}
    for i in range(n):
        account = graph.label(i)
        lam[i] = rates.get(account, 0.0)
        if account in opinions:
            measured[i] = opinions[account]
        fixed = assignment.psi.get(account)
        if fixed is not None:
            psi[i] = fixed
    return lam, psi, measured


def ghic(
    graph: DirectedGraph,
    rates: Mapping[str, float],
    assignment: StubbornAssignment,
    opinions: Mapping[str, float],
    target_set: Iterable[str],
    settings: SolveSettings | None = None,
) -> GhicResult:
    """Influence centrality of ``target_set`` on ``graph``.

    The averaging population is the non-stubborn set of the full network
    (after preprocessing) minus the targets; it must be nonempty.  Removal
    and its preprocessing are recomputed independently on the reduced
    network.
    """
    settings = settings or SolveSettings()
    graph.freeze()
    targets = frozenset(target_set)
    unknown = [t for t in targets if t not in graph]
    if unknown:
        raise ValueError(f"target accounts not in network: {sorted(unknown)[:5]}")

    lam, psi, measured = _network_inputs(graph, rates, assignment, opinions)
    full = solve_network(
        graph, lam, psi, measured,
        tol=settings.tol, max_iter=settings.max_iter, dense_cutoff=settings.dense_cutoff,
    )
    population = [
        i for i in full.theta if graph.label(i) not in targets
    ]
    if not population:
        raise ValueError("no non-stubborn nodes outside the target set")
    if not targets:
        return GhicResult(targets, 0.0, len(population), 0)

    keep = [graph.label(i) for i in range(graph.node_count) if graph.label(i) not in targets]
    reduced = graph.induced_subgraph(keep)
    lam_r, psi_r, measured_r = _network_inputs(reduced, rates, assignment, opinions)
    removed = solve_network(
        reduced, lam_r, psi_r, measured_r,
        tol=settings.tol, max_iter=settings.max_iter, dense_cutoff=settings.dense_cutoff,
    )

    reverted = 0
    diff_sum = 0.0
    for i in population:
        j = reduced.index(graph.label(i))
        if j in removed.theta:
            after = removed.theta[j]
        else:
            # reclassified on the reduced network: reverts to measured opinion
            after = removed.psi[j]
            reverted += 1
        diff_sum += full.theta[i] - after
    return GhicResult(targets, diff_sum / len(population), len(population), reverted)


# -- daily series ---------------------------------------------------------------


@dataclass
class DailyGhicEntry:
    day: date
    active_nodes: int
    results: dict[str, GhicResult]  # group name -> result
    group_active: dict[str, int]  # group name -> |S ∩ active|


@dataclass
class DailyGhicSeries:
    entries: list[DailyGhicEntry]
    skipped_days: list[tuple[date, str]]


def daily_ghic_series(
    follower_network: DirectedGraph,
    active_by_day: Mapping[date, set[str]],
    rates: Mapping[str, float],
    assignment: StubbornAssignment,
    opinions: Mapping[str, float],
    groups: Mapping[str, set[str]],
    settings: SolveSettings | None = None,
) -> DailyGhicSeries:
    """GHIC of each group on each day's active follower subnetwork.

    A group's daily target set is its intersection with that day's active
    accounts; a group with no active member contributes an exact zero.
    Days whose active network has no non-stubborn node are skipped with a
    note.
    """
    if not groups:
        raise ValueError("at least one group is required")
    entries: list[DailyGhicEntry] = []
    skipped: list[tuple[date, str]] = []
    for day in sorted(active_by_day):
        active = {a for a in active_by_day[day] if a in follower_network}
        if not active:
            skipped.append((day, "no active accounts in the follower network"))
            continue
        subnet = follower_network.induced_subgraph(active)
        non_stubborn = active - assignment.stubborn
        if not non_stubborn:
            skipped.append((day, "no non-stubborn active accounts"))
            continue
        results: dict[str, GhicResult] = {}
        group_active: dict[str, int] = {}
        for name in sorted(groups):
            day_targets = groups[name] & active
            group_active[name] = len(day_targets)
            if not non_stubborn - day_targets:
                skipped.append((day, f"group {name!r} covers every non-stubborn account"))
                continue
            try:
                results[name] = ghic(
                    subnet, rates, assignment, opinions, day_targets, settings
                )
            except ValueError as exc:
                skipped.append((day, f"group {name!r}: {exc}"))
            except SolverError as exc:
                raise SolverError(
                    f"{day.isoformat()} group {name!r}: {exc}", exc.residual_history
                ) from exc
        entries.append(
            DailyGhicEntry(
                day=day,
                active_nodes=subnet.node_count,
                results=results,
                group_active=group_active,
            )
        )
    for day, reason in skipped:
        log.warning("skipping %s: %s", day, reason)
    return DailyGhicSeries(entries=entries, skipped_days=skipped)


@dataclass
class PerBotStats:
    values: list[float]
    mean: float
    q1: float
    median: float
    q3: float
    minimum: float
    maximum: float

    @property
    def n(self) -> int:
        return len(self.values)


def ghic_per_bot(series: DailyGhicSeries, groups: Iterable[str]) -> dict[str, PerBotStats | None]:
    """Distribution of daily GHIC per active group member, per group.

    Days where a group has no active member are excluded from its
    distribution; a group never active maps to None.
    """
    out: dict[str, PerBotStats | None] = {}
    for name in sorted(set(groups)):
        values = [
            e.results[name].value / e.group_active[name]
            for e in series.entries
            if name in e.results and e.group_active[name] >= 1
        ]
        if not values:
            log.warning("group %r was never active; empty per-bot distribution", name)
            out[name] = None
            continue
        arr = np.array(values)
        out[name] = PerBotStats(
            values=values,
            mean=float(arr.mean()),
            q1=float(np.percentile(arr, 25)),
            median=float(np.median(arr)),
            q3=float(np.percentile(arr, 75)),
            minimum=float(arr.min()),
            maximum=float(arr.max()),
        )
    return out
