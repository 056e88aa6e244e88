"""Stubborn-agent opinion-dynamics equilibria on follower networks.

Each non-stubborn account's equilibrium opinion is the posting-rate-weighted
average of the opinions of the accounts it follows; stubborn accounts hold a
fixed opinion.  Writing the balance equation per non-stubborn node i gives a
sparse linear system

    G theta = F psi

with  G_ii = -sum(rate_k for k in following of i)      (all followings),
      G_ij =  rate_j   when j is non-stubborn and i follows j,
      F_ij = -rate_j   when j is stubborn and i follows j.

The system is solved directly (dense) below a size cutoff and by a Jacobi-
preconditioned GMRES above it.  An independent fixed-point sweep over the
averaging form of the same equations acts as the oracle guarding the matrix
interpretation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graph import DirectedGraph

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 5000
DEFAULT_DENSE_CUTOFF = 500
DEFAULT_LOW_PCT = 0.10
DEFAULT_HIGH_PCT = 0.90


class SolverError(RuntimeError):
    """Solve failed to converge or violated the opinion model."""

    def __init__(self, message: str, residual_history: list[float] | None = None):
        super().__init__(message)
        self.residual_history = residual_history or []


class AssemblyError(ValueError):
    """System assembly precondition violated."""


# -- stubborn identification ---------------------------------------------------


@dataclass
class StubbornAssignment:
    """Dataset-level partition into stubborn (with fixed opinions) and not.

    ``psi`` maps stubborn account ids to their fixed opinion.  The cut
    values are kept for reporting; they come from the global opinion
    distribution, not from any single day's network.
    """

    psi: dict[str, float]
    low_cut: float
    high_cut: float
    all_stubborn: bool = False

    @property
    def stubborn(self) -> set[str]:
        return set(self.psi)


def percentile_cuts(
    opinions: Iterable[float], low_pct: float, high_pct: float
) -> tuple[float, float]:
    """Order-statistic cut values for the extreme-opinion rule.

    The low cut is the (floor(low_pct*n)+1)-th smallest value, so strictly
    smaller opinions form at most a low_pct fraction; the high cut mirrors
    it from the top.  With low_pct=0 / high_pct=1 nothing is extreme.
    """
    s = sorted(opinions)
    n = len(s)
    if n == 0:
        raise ValueError("percentile cuts need at least one opinion")
    # epsilon guards float products like (1 - 0.9) * n landing just under an integer
    k_low = min(int(math.floor(low_pct * n + 1e-9)) + 1, n)
    k_high = max(n - int(math.floor((1.0 - high_pct) * n + 1e-9)), 1)
    return s[k_low - 1], s[k_high - 1]


def identify_stubborn(
    opinions: Mapping[str, float],
    bots: set[str],
    low_pct: float = DEFAULT_LOW_PCT,
    high_pct: float = DEFAULT_HIGH_PCT,
) -> StubbornAssignment:
    """Stubborn set = all bots plus humans with opinions beyond the global cuts.

    Every stubborn account keeps its measured opinion as its fixed value.
    Cuts are computed once over all accounts in the dataset and reused for
    every daily network.
    """
    if not opinions:
        raise ValueError("cannot identify stubborn accounts without opinions")
    if not 0.0 <= low_pct < high_pct <= 1.0:
        raise ValueError(f"bad percentile thresholds ({low_pct}, {high_pct})")
    low_cut, high_cut = percentile_cuts(opinions.values(), low_pct, high_pct)
    psi: dict[str, float] = {}
    for account, opinion in opinions.items():
        if account in bots or opinion < low_cut or opinion > high_cut:
            psi[account] = opinion
    all_stubborn = len(psi) == len(opinions)
    if all_stubborn:
        log.warning("every account is stubborn; equilibrium solves would be vacuous")
    return StubbornAssignment(psi, low_cut, high_cut, all_stubborn)


# -- per-network preprocessing ---------------------------------------------------


@dataclass
class PreprocessReport:
    no_rated_following: list[int] = field(default_factory=list)  # rule (a)
    unreachable: list[int] = field(default_factory=list)  # rule (b)

    @property
    def reclassified(self) -> set[int]:
        return set(self.no_rated_following) | set(self.unreachable)


def preprocess_wellposed(
    graph: DirectedGraph,
    rates: np.ndarray,
    psi: dict[int, float],
    measured: np.ndarray,
) -> tuple[dict[int, float], PreprocessReport]:
    """Reclassify degenerate non-stubborn nodes so the system is nonsingular.

    (a) a node whose followings carry zero total rate receives no influence;
    (b) a node from which no positive-rate chain of followings reaches a
        stubborn account belongs to a closed group that can never anchor.
    Both become stubborn at their measured opinion.  Influence travels only
    through positive-rate accounts, so reachability ignores rate-zero ones.
    """
    graph.freeze()
    n = graph.node_count
    new_psi = dict(psi)
    report = PreprocessReport()

    for i in range(n):
        if i in new_psi:
            continue
        sources, _ = graph.following_of(i)
        if sources.size == 0 or float(rates[sources].sum()) == 0.0:
            new_psi[i] = float(measured[i])
            report.no_rated_following.append(i)

    # BFS outward from positive-rate stubborn nodes along information flow.
    influenced = np.zeros(n, dtype=bool)
    frontier = [i for i in new_psi if rates[i] > 0.0]
    seen_source = np.zeros(n, dtype=bool)
    for i in frontier:
        seen_source[i] = True
    while frontier:
        nxt: list[int] = []
        for u in frontier:
            targets, _ = graph.followers_of(u)
            for v in targets:
                v = int(v)
                if v in new_psi or influenced[v]:
                    continue
                influenced[v] = True
                # v can relay influence further only if it posts at all
                if rates[v] > 0.0 and not seen_source[v]:
                    seen_source[v] = True
                    nxt.append(v)
        frontier = nxt

    for i in range(n):
        if i not in new_psi and not influenced[i]:
            new_psi[i] = float(measured[i])
            report.unreachable.append(i)
    return new_psi, report


# -- system assembly ----------------------------------------------------------


@dataclass
class LinearSystem:
    G: sp.csr_matrix
    F: sp.csr_matrix
    b: np.ndarray  # F @ psi_values
    v1: np.ndarray  # non-stubborn node indices, ascending
    v0: np.ndarray  # stubborn node indices, ascending
    psi_values: np.ndarray  # fixed opinions aligned with v0


def assemble_system(
    graph: DirectedGraph, rates: np.ndarray, psi: dict[int, float]
) -> LinearSystem:
    """Build the sparse equilibrium system for the non-stubborn nodes.

    Requires preprocessed inputs: every non-stubborn node must follow
    positive total rate.  Verifies the weighted in-degree balance
    |G_ii| = sum_j(G_ij, j != i) + sum_j |F_ij| row by row.
    """
    graph.freeze()
    n = graph.node_count
    v1 = np.array(sorted(set(range(n)) - set(psi)), dtype=np.int64)
    v0 = np.array(sorted(psi), dtype=np.int64)
    if v1.size == 0:
        raise AssemblyError("no non-stubborn nodes to solve for")
    psi_values = np.array([psi[int(i)] for i in v0], dtype=np.float64)
    pos_in_v1 = {int(node): row for row, node in enumerate(v1)}
    pos_in_v0 = {int(node): col for col, node in enumerate(v0)}

    g_rows: list[int] = []
    g_cols: list[int] = []
    g_vals: list[float] = []
    f_rows: list[int] = []
    f_cols: list[int] = []
    f_vals: list[float] = []
    for row, i in enumerate(v1):
        sources, _ = graph.following_of(int(i))
        total = float(rates[sources].sum()) if sources.size else 0.0
        if total == 0.0:
            raise AssemblyError(
                f"node {graph.label(int(i))!r} follows no positive-rate account; "
                "run preprocess_wellposed first"
            )
        g_rows.append(row)
        g_cols.append(row)
        g_vals.append(-total)
        for j in sources:
            j = int(j)
            lam = float(rates[j])
            if lam == 0.0:
                continue
            if j in pos_in_v1:
                g_rows.append(row)
                g_cols.append(pos_in_v1[j])
                g_vals.append(lam)
            else:
                f_rows.append(row)
                f_cols.append(pos_in_v0[j])
                f_vals.append(-lam)

    m = v1.size
    G = sp.csr_matrix((g_vals, (g_rows, g_cols)), shape=(m, m))
    F = sp.csr_matrix((f_vals, (f_rows, f_cols)), shape=(m, max(v0.size, 1)))
    if v0.size == 0:
        F = sp.csr_matrix((m, 0))
        psi_values = np.zeros(0)
    b = F @ psi_values if v0.size else np.zeros(m)

    _check_row_balance(G, F)
    return LinearSystem(G=G, F=F, b=b, v1=v1, v0=v0, psi_values=psi_values)


def _check_row_balance(G: sp.csr_matrix, F: sp.csr_matrix) -> None:
    diag = np.abs(G.diagonal())
    off = np.asarray(np.abs(G).sum(axis=1)).ravel() - diag
    fmass = np.asarray(np.abs(F).sum(axis=1)).ravel() if F.shape[1] else np.zeros(G.shape[0])
    gap = np.abs(diag - off - fmass)
    bad = gap > 1e-9 * np.maximum(1.0, diag)
    if bad.any():
        row = int(np.argmax(gap))
        raise AssemblyError(
            f"row balance violated at row {row}: |G_ii|={diag[row]!r} "
            f"vs off-diagonal {off[row]!r} + |F| {fmass[row]!r}"
        )


# -- solving ------------------------------------------------------------------


@dataclass
class EquilibriumSolution:
    theta: dict[int, float]  # node index -> equilibrium opinion
    residual_norm: float
    iterations: int
    method: str

    def vector(self, v1: np.ndarray) -> np.ndarray:
        return np.array([self.theta[int(i)] for i in v1])


def solve_equilibrium(
    system: LinearSystem,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    dense_cutoff: int = DEFAULT_DENSE_CUTOFF,
) -> EquilibriumSolution:
    """Solve G theta = F psi and validate the result.

    Uses a dense direct solve below ``dense_cutoff`` unknowns, otherwise
    Jacobi-preconditioned GMRES started from the neutral opinion 0.5.
    The relative residual must reach ``tol`` (absolute when the right-hand
    side is zero); theta may exceed the stubborn-opinion hull only by
    numerical slack below 10*tol, and is clamped back inside it.
    """
    G, b = system.G, system.b
    m = G.shape[0]
    history: list[float] = []
    if m <= dense_cutoff:
        theta = np.linalg.solve(G.toarray(), b)
        iterations = 0
        method = "dense"
    else:
        diag = G.diagonal()
        M = sp.diags(1.0 / diag)
        x0 = np.full(m, 0.5)
        b_scale = float(np.linalg.norm(b))
        theta, info = spla.gmres(
            G,
            b,
            x0=x0,
            M=M,
            rtol=tol * 0.1,
            atol=tol * 0.1 * (b_scale if b_scale > 0 else 1.0),
            maxiter=max_iter,
            callback=history.append,
            callback_type="pr_norm",
        )
        iterations = len(history)
        method = "gmres"
        if info > 0:
            raise SolverError(
                f"gmres failed to converge in {info} iterations", residual_history=history
            )
        if info < 0:
            raise SolverError("gmres reported an illegal input", residual_history=history)

    b_norm = float(np.linalg.norm(b))
    res = float(np.linalg.norm(G @ theta - b))
    residual = res / b_norm if b_norm > 0 else res
    if residual > tol:
        raise SolverError(
            f"residual {residual:.3e} above tolerance {tol:.3e}", residual_history=history
        )

    if system.psi_values.size:
        lo, hi = float(system.psi_values.min()), float(system.psi_values.max())
    else:
        lo, hi = 0.0, 1.0
    slack = 10.0 * tol
    if theta.min() < lo - slack or theta.max() > hi + slack:
        raise SolverError(
            "equilibrium violates the stubborn-opinion hull "
            f"[{lo}, {hi}]: range [{theta.min()}, {theta.max()}]"
        )
    np.clip(theta, lo, hi, out=theta)

    return EquilibriumSolution(
        theta={int(i): float(theta[row]) for row, i in enumerate(system.v1)},
        residual_norm=residual,
        iterations=iterations,
        method=method,
    )


# -- independent fixed-point oracle ----------------------------------------------


def fixed_point_oracle(
    graph: DirectedGraph,
    rates: np.ndarray,
    psi: dict[int, float],
    sweeps: int = 200_000,
    tol: float = 1e-12,
) -> dict[int, float]:
    """Equilibrium by synchronous averaging sweeps, start value 0.5.

    theta_i <- sum(rate_j * opinion_j for j in following of i) / sum(rate_j),
    stubborn opinions held fixed.  Deliberately avoids the assembled matrices
    so it can validate them.  Raises SolverError if the sweep cap is hit
    before the max change drops below ``tol``.
    """
    graph.freeze()
    n = graph.node_count
    free = np.array(sorted(set(range(n)) - set(psi)), dtype=np.int64)
    x = np.full(n, 0.5)
    for i, value in psi.items():
        x[i] = value
    if free.size == 0:
        return {}

    src, tgt, _ = graph.edge_arrays()
    lam_src = rates[src]
    denom = np.zeros(n)
    np.add.at(denom, tgt, lam_src)
    if np.any(denom[free] == 0.0):
        bad = int(free[np.argmax(denom[free] == 0.0)])
        raise SolverError(f"node {graph.label(bad)!r} has no rated followings")

    free_mask = np.zeros(n, dtype=bool)
    free_mask[free] = True
    for sweep in range(sweeps):
        weighted = np.zeros(n)
        np.add.at(weighted, tgt, lam_src * x[src])
        new_free = weighted[free] / denom[free]
        change = float(np.max(np.abs(new_free - x[free]))) if free.size else 0.0
        x[free] = new_free
        if change < tol:
            return {int(i): float(x[i]) for i in free}
    raise SolverError(f"fixed-point oracle hit the sweep cap ({sweeps})")


# -- convenience stack ----------------------------------------------------------


@dataclass
class NetworkEquilibrium:
    """Preprocessed and solved equilibrium on one network."""

    theta: dict[int, float]  # non-stubborn node -> equilibrium opinion
    psi: dict[int, float]  # final stubborn map, including reclassified nodes
    report: PreprocessReport
    solution: EquilibriumSolution | None  # None when every node ended up stubborn


def solve_network(
    graph: DirectedGraph,
    rates: np.ndarray,
    psi: dict[int, float],
    measured: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    dense_cutoff: int = DEFAULT_DENSE_CUTOFF,
) -> NetworkEquilibrium:
    """preprocess -> assemble -> solve on one network."""
    full_psi, report = preprocess_wellposed(graph, rates, psi, measured)
    if len(full_psi) == graph.node_count:
        return NetworkEquilibrium(theta={}, psi=full_psi, report=report, solution=None)
    system = assemble_system(graph, rates, full_psi)
    solution = solve_equilibrium(system, tol=tol, max_iter=max_iter, dense_cutoff=dense_cutoff)
    return NetworkEquilibrium(
        theta=solution.theta, psi=full_psi, report=report, solution=solution
    )
