"""Linear-Gaussian Bayesian network over normal-transformed stations.

Structure search is greedy hill climbing (add / delete / reverse edge)
maximizing a Gaussian BIC, with random restarts.  Node regressions are
ordinary least squares on mean-centered columns, so they carry no
intercept; innovations are kept as empirical residual vectors for
bootstrap resampling at simulation time.

Evidence stations (externally supplied scenarios, e.g. hydro inflows) may
be parents of simulated stations but never their children, so clamped
evidence can propagate downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import StationMeta
from .errors import CollinearityError, InsufficientDataError
from .marginal import MarginalModel
from .transform import NormalPanel

# Floor on the ML residual variance so perfect fits keep a finite score.
_SIGMA2_FLOOR = 1e-300

# A move must beat the incumbent by this much to be accepted.
_IMPROVE_EPS = 1e-9


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph over station ids."""

    nodes: tuple[str, ...]
    parents: dict[str, tuple[str, ...]]
    max_parents: int

    def __post_init__(self):
        order = self.topo_order()  # raises on cycles
        assert len(order) == len(self.nodes)
        for node, pa in self.parents.items():
            if len(pa) > self.max_parents:
                raise ValueError(
                    f"node {node!r} has {len(pa)} parents > max_parents")

    def edges(self) -> list[tuple[str, str]]:
        return [(u, v) for v in self.nodes for u in self.parents[v]]

    def topo_order(self) -> list[str]:
        """Kahn's algorithm; ties broken by node declaration order."""
        pending = {v: set(self.parents[v]) for v in self.nodes}
        order: list[str] = []
        placed: set[str] = set()
        while pending:
            ready = [v for v in self.nodes
                     if v in pending and pending[v] <= placed]
            if not ready:
                raise ValueError("graph contains a cycle")
            for v in ready:
                order.append(v)
                placed.add(v)
                del pending[v]
        return order


@dataclass(frozen=True)
class NodeRegression:
    node: str
    coefficients: dict[str, float]
    residuals: np.ndarray = field(repr=False)
    residual_variance: float


@dataclass(frozen=True)
class BayesNet:
    dag: Dag
    regressions: dict[str, NodeRegression]
    marginals: dict[str, MarginalModel]
    stations: tuple[StationMeta, ...]
    score: float

    @property
    def station_ids(self) -> list[str]:
        return [s.id for s in self.stations]


def parameter_count(net: BayesNet) -> int:
    """One variance per node plus one coefficient per incoming edge."""
    return sum(len(net.dag.parents[v]) + 1 for v in net.dag.nodes)


def full_count(n: int) -> int:
    """Parameters of the saturated model: n variances + n(n-1)/2 correlations."""
    return n * (n + 1) // 2


class _Scorer:
    """Cached local Gaussian BIC terms.

    local(i, pa) = -(N/2) ln(sigma2_ml) - ((|pa|+1)/2) ln N over the
    complete-case rows of {i} union pa, columns mean-centered on those rows.
    Panels without missing data use a precomputed Gram matrix.
    """

    def __init__(self, z: np.ndarray):
        self.z = z
        self.cache: dict[tuple, float] = {}
        self.complete = not np.isnan(z).any()
        if self.complete:
            zc = z - z.mean(axis=0)
            self.gram = zc.T @ zc
            self.n_rows = len(z)

    def local(self, i: int, parents: tuple[int, ...]) -> float:
        key = (i, parents)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        score = self._compute(i, parents)
        self.cache[key] = score
        return score

    def _compute(self, i: int, parents: tuple[int, ...]) -> float:
        k = len(parents)
        if self.complete:
            n = self.n_rows
            if k == 0:
                rss = self.gram[i, i]
            else:
                sub = self.gram[np.ix_(parents, parents)]
                cross = self.gram[list(parents), i]
                try:
                    c = np.linalg.cholesky(sub)
                except np.linalg.LinAlgError:
                    return -np.inf
                a = np.linalg.solve(c.T, np.linalg.solve(c, cross))
                rss = self.gram[i, i] - cross @ a
        else:
            cols = (i,) + parents
            mask = ~np.isnan(self.z[:, cols]).any(axis=1)
            n = int(mask.sum())
            if n <= k + 1:
                return -np.inf
            block = self.z[np.ix_(np.flatnonzero(mask), cols)]
            block = block - block.mean(axis=0)
            y, x = block[:, 0], block[:, 1:]
            if k == 0:
                rss = float(y @ y)
            else:
                a, _, rank, _ = np.linalg.lstsq(x, y, rcond=None)
                if rank < k:
                    return -np.inf
                r = y - x @ a
                rss = float(r @ r)
        sigma2 = max(rss / n, _SIGMA2_FLOOR)
        return -0.5 * n * np.log(sigma2) - 0.5 * (k + 1) * np.log(n)

    def total(self, parents_by_idx: list[tuple[int, ...]]) -> float:
        return sum(self.local(i, pa) for i, pa in enumerate(parents_by_idx))


def _descendant_matrix(children: list[set[int]], n: int) -> np.ndarray:
    """reach[u, v] True when a directed path u -> ... -> v exists."""
    reach = np.zeros((n, n), dtype=bool)
    for u in range(n):
        stack = list(children[u])
        while stack:
            w = stack.pop()
            if not reach[u, w]:
                reach[u, w] = True
                stack.extend(children[w])
    return reach


def _path_avoiding_edge(children: list[set[int]], u: int, v: int) -> bool:
    """Directed path u -> v that does not use the direct edge (u, v)."""
    stack = [w for w in children[u] if w != v]
    seen: set[int] = set()
    while stack:
        w = stack.pop()
        if w == v:
            return True
        if w not in seen:
            seen.add(w)
            stack.extend(children[w])
    return False


class _Search:
    """One hill-climbing state over integer node indices."""

    def __init__(self, scorer: _Scorer, n: int, max_parents: int,
                 evidence: np.ndarray, pair_order: list[tuple[int, int]]):
        self.scorer = scorer
        self.n = n
        self.max_parents = max_parents
        self.evidence = evidence
        self.pair_order = pair_order

    def edge_allowed(self, u: int, v: int) -> bool:
        return (not self.evidence[v]) or bool(self.evidence[u])

    def climb(self, parents: list[tuple[int, ...]]) -> tuple[list[tuple[int, ...]], float]:
        local = self.scorer.local
        children: list[set[int]] = [set() for _ in range(self.n)]
        for v in range(self.n):
            for u in parents[v]:
                children[u].add(v)
        total = self.scorer.total(parents)

        while True:
            reach = _descendant_matrix(children, self.n)
            best_delta = _IMPROVE_EPS
            best_move = None
            for u, v in self.pair_order:
                has_edge = u in parents[v]
                if not has_edge:
                    if (len(parents[v]) < self.max_parents
                            and self.edge_allowed(u, v)
                            and not reach[v, u]):
                        new_pa = tuple(sorted(parents[v] + (u,)))
                        delta = local(v, new_pa) - local(v, parents[v])
                        if delta > best_delta:
                            best_delta, best_move = delta, ("add", u, v)
                else:
                    removed = tuple(w for w in parents[v] if w != u)
                    base = local(v, removed) - local(v, parents[v])
                    if base > best_delta:
                        best_delta, best_move = base, ("delete", u, v)
                    if (len(parents[u]) < self.max_parents
                            and self.edge_allowed(v, u)
                            and not _path_avoiding_edge(children, u, v)):
                        gained = tuple(sorted(parents[u] + (v,)))
                        delta = base + local(u, gained) - local(u, parents[u])
                        if delta > best_delta:
                            best_delta, best_move = delta, ("reverse", u, v)
            if best_move is None:
                return parents, total
            kind, u, v = best_move
            if kind == "add":
                parents[v] = tuple(sorted(parents[v] + (u,)))
                children[u].add(v)
            elif kind == "delete":
                parents[v] = tuple(w for w in parents[v] if w != u)
                children[u].discard(v)
            else:
                parents[v] = tuple(w for w in parents[v] if w != u)
                parents[u] = tuple(sorted(parents[u] + (v,)))
                children[u].discard(v)
                children[v].add(u)
            total += best_delta

    def perturb(self, parents: list[tuple[int, ...]], rng: np.random.Generator,
                n_moves: int) -> list[tuple[int, ...]]:
        """Apply random legal moves to a structure, to restart the climb
        from a nearby point in the search space."""
        parents = list(parents)
        children: list[set[int]] = [set() for _ in range(self.n)]
        for v in range(self.n):
            for u in parents[v]:
                children[u].add(v)
        for _ in range(n_moves):
            reach = _descendant_matrix(children, self.n)
            moves = []
            for u, v in self.pair_order:
                if u in parents[v]:
                    moves.append(("delete", u, v))
                    if (len(parents[u]) < self.max_parents
                            and self.edge_allowed(v, u)
                            and not _path_avoiding_edge(children, u, v)):
                        moves.append(("reverse", u, v))
                elif (len(parents[v]) < self.max_parents
                        and self.edge_allowed(u, v)
                        and not reach[v, u]):
                    moves.append(("add", u, v))
            if not moves:
                break
            kind, u, v = moves[int(rng.integers(0, len(moves)))]
            if kind == "add":
                parents[v] = tuple(sorted(parents[v] + (u,)))
                children[u].add(v)
            elif kind == "delete":
                parents[v] = tuple(w for w in parents[v] if w != u)
                children[u].discard(v)
            else:
                parents[v] = tuple(w for w in parents[v] if w != u)
                parents[u] = tuple(sorted(parents[u] + (v,)))
                children[u].discard(v)
                children[v].add(u)
        return parents


def learn_structure(z_panel: NormalPanel, max_parents: int,
                    restarts: int = 5, seed: int = 0) -> Dag:
    """Greedy BIC hill climbing with random restarts.

    The first climb starts from the empty graph; each later restart
    perturbs the best structure found so far with a few random legal moves
    (more as restarts go on) and climbs again, keeping the best final
    score.  Deterministic given `seed`.  Ties between equal-score moves go
    to the lowest (source, target) id pair, adds before deletes before
    reversals.
    """
    z = z_panel.z_values
    ids = z_panel.station_ids
    n = len(ids)
    if max_parents < 0:
        raise ValueError("max_parents must be >= 0")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    complete_rows = int((~np.isnan(z)).all(axis=1).sum())
    if complete_rows < 50:
        raise InsufficientDataError(
            f"structure learning needs >= 50 complete rows, got {complete_rows}")

    evidence = np.array([s.is_evidence for s in z_panel.stations])
    pair_order = sorted(
        ((u, v) for u in range(n) for v in range(n) if u != v),
        key=lambda p: (ids[p[0]], ids[p[1]]))
    search = _Search(_Scorer(z), n, max_parents, evidence, pair_order)

    rng = np.random.default_rng(seed)
    best_parents, best_score = search.climb([() for _ in range(n)])
    for r in range(1, restarts):
        start = search.perturb(best_parents, rng, n_moves=3 + r)
        parents, score = search.climb(start)
        if score > best_score:
            best_parents, best_score = parents, score
    return Dag(
        nodes=tuple(ids),
        parents={ids[v]: tuple(ids[u] for u in best_parents[v])
                 for v in range(n)},
        max_parents=max_parents,
    )


def score_dag(z_panel: NormalPanel, dag: Dag) -> float:
    """Total Gaussian BIC of a given structure on a panel."""
    ids = z_panel.station_ids
    scorer = _Scorer(z_panel.z_values)
    return scorer.total(
        [tuple(sorted(ids.index(p) for p in dag.parents[v])) for v in ids])


def fit_regression(dag: Dag, z_panel: NormalPanel,
                   marginals: dict[str, MarginalModel] | None = None) -> BayesNet:
    """Ordinary least squares of each node on its parents.

    Columns are mean-centered on each node's complete-case rows before
    fitting, so the regressions carry no intercept; root nodes keep their
    centered column as the residual vector.
    """
    ids = z_panel.station_ids
    missing = [v for v in dag.nodes if v not in ids]
    if missing:
        raise ValueError(f"dag nodes not in panel: {missing}")
    z = z_panel.z_values
    col = {sid: j for j, sid in enumerate(ids)}

    regressions: dict[str, NodeRegression] = {}
    for node in dag.nodes:
        pa = dag.parents[node]
        cols = [col[node]] + [col[p] for p in pa]
        mask = ~np.isnan(z[:, cols]).any(axis=1)
        block = z[np.ix_(np.flatnonzero(mask), cols)]
        block = block - block.mean(axis=0)
        y, x = block[:, 0], block[:, 1:]
        if pa:
            a, _, rank, _ = np.linalg.lstsq(x, y, rcond=None)
            if rank < len(pa):
                raise CollinearityError(
                    f"rank-deficient parent matrix for node {node!r}")
            residuals = y - x @ a
            coefficients = {p: float(a[k]) for k, p in enumerate(pa)}
        else:
            residuals = y
            coefficients = {}
        regressions[node] = NodeRegression(
            node=node,
            coefficients=coefficients,
            residuals=residuals,
            residual_variance=float(np.mean(residuals ** 2)),
        )

    return BayesNet(
        dag=dag,
        regressions=regressions,
        marginals=dict(marginals or {}),
        stations=z_panel.stations,
        score=score_dag(z_panel, dag),
    )
