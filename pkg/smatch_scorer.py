"""
SMATCH alignment and scoring.

Graphs are compared as triple sets; the score is the largest number of triples of
graph a that land in graph b under an injective variable mapping. `score` finds it
by hill climbing from a concept-matched start plus random restarts, `score_exact`
by branch and bound and is limited to small graphs.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

import numpy as np

from amr_graph import AmrGraph
from graph_editor import Subgraph

logger = logging.getLogger(__name__)

Triple = Tuple[str, str, str]
Pair = Tuple[int, int]

DEFAULT_EXACT_BOUND = 8


class GraphTooLarge(ValueError):
    """Exhaustive scoring asked for a graph above the variable bound"""


@dataclass(frozen=True)
class TripleSet:
    variables: Tuple[str, ...]
    instances: FrozenSet[Triple]
    relations: FrozenSet[Triple]
    attributes: FrozenSet[Triple]

    def __len__(self) -> int:
        return len(self.instances) + len(self.relations) + len(self.attributes)


@dataclass
class SmatchScore:
    matched: int
    test_total: int
    gold_total: int
    witness: Dict[str, Optional[str]] = field(default_factory=dict)

    @property
    def precision(self) -> float:
        return self.matched / self.test_total if self.test_total else 0.0

    @property
    def recall(self) -> float:
        return self.matched / self.gold_total if self.gold_total else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def line(self, id_a: str, id_b: str) -> str:
        return f"{id_a} {id_b} {self.matched} {self.precision:.4f} {self.recall:.4f} {self.f1:.4f}"


def to_triples(graph: AmrGraph) -> TripleSet:
    return TripleSet(
        variables=tuple(graph.variables),
        instances=frozenset((var, "instance", concept) for var, concept in graph.instances),
        relations=frozenset(graph.relations),
        attributes=frozenset(graph.attributes),
    )


def subgraph_triples(graph: AmrGraph, subgraph: Subgraph) -> TripleSet:
    """Triples induced by the subgraph's members; relations leaving the member set are dropped"""
    members = set(subgraph.members)
    return TripleSet(
        variables=subgraph.members,
        instances=frozenset((v, "instance", graph.concept_of(v)) for v in subgraph.members),
        relations=frozenset(r for r in graph.relations if r[0] in members and r[2] in members),
        attributes=frozenset(a for a in graph.attributes if a[0] in members),
    )


class _Alignment:
    """Candidate pool and triple-match weights for one (a, b) pair, indexed by position"""

    def __init__(self, a: TripleSet, b: TripleSet):
        self.a_vars = list(a.variables)
        self.b_vars = list(b.variables)
        a_index = {v: i for i, v in enumerate(self.a_vars)}
        b_index = {v: j for j, v in enumerate(self.b_vars)}

        self.candidates: List[Set[int]] = [set() for _ in self.a_vars]
        self.unary: Dict[Pair, int] = {}
        self.binary: Dict[Pair, Dict[Pair, int]] = {}

        def add_unary(i: int, j: int):
            self.candidates[i].add(j)
            self.unary[(i, j)] = self.unary.get((i, j), 0) + 1

        for v1, _, c1 in a.instances:
            for v2, _, c2 in b.instances:
                if c1 == c2:
                    add_unary(a_index[v1], b_index[v2])
        for v1, r1, c1 in a.attributes:
            for v2, r2, c2 in b.attributes:
                if r1 == r2 and c1 == c2:
                    add_unary(a_index[v1], b_index[v2])
        for s1, r1, t1 in a.relations:
            for s2, r2, t2 in b.relations:
                if r1 != r2:
                    continue
                i, k = a_index[s1], a_index[t1]
                j, l = b_index[s2], b_index[t2]
                if (i == k) != (j == l):
                    continue
                if i == k:
                    add_unary(i, j)
                    continue
                self.candidates[i].add(j)
                self.candidates[k].add(l)
                self.binary.setdefault((i, j), {})
                self.binary.setdefault((k, l), {})
                self.binary[(i, j)][(k, l)] = self.binary[(i, j)].get((k, l), 0) + 1
                self.binary[(k, l)][(i, j)] = self.binary[(k, l)].get((i, j), 0) + 1

        self.ordered_candidates = [sorted(c) for c in self.candidates]

    def match(self, mapping: List[Optional[int]]) -> int:
        total = 0
        pair_total = 0
        for i, j in enumerate(mapping):
            if j is None:
                continue
            total += self.unary.get((i, j), 0)
            links = self.binary.get((i, j))
            if links:
                for k, l in enumerate(mapping):
                    if l is not None and k != i:
                        pair_total += links.get((k, l), 0)
        return total + pair_total // 2

    def move_gain(self, mapping: List[Optional[int]], i: int, new: Optional[int]) -> int:
        old = mapping[i]
        gain = self.unary.get((i, new), 0) - self.unary.get((i, old), 0)
        new_links = self.binary.get((i, new), {}) if new is not None else {}
        old_links = self.binary.get((i, old), {}) if old is not None else {}
        for k, l in enumerate(mapping):
            if k == i or l is None:
                continue
            gain += new_links.get((k, l), 0) - old_links.get((k, l), 0)
        return gain

    def swap_gain(self, mapping: List[Optional[int]], i: int, k: int) -> int:
        trial = list(mapping)
        trial[i], trial[k] = trial[k], trial[i]
        return self.match(trial) - self.match(mapping)

    def witness(self, mapping: List[Optional[int]]) -> Dict[str, Optional[str]]:
        return {
            self.a_vars[i]: (self.b_vars[j] if j is not None else None)
            for i, j in enumerate(mapping)
        }


def _score(alignment: _Alignment, mapping: List[Optional[int]], a: TripleSet, b: TripleSet) -> SmatchScore:
    return SmatchScore(alignment.match(mapping), len(a), len(b), alignment.witness(mapping))


def score_exact(a: TripleSet, b: TripleSet, bound: int = DEFAULT_EXACT_BOUND) -> SmatchScore:
    """Maximum triple overlap over all injective partial mappings, by branch and bound"""
    if len(a.variables) > bound or len(b.variables) > bound:
        raise GraphTooLarge(
            f"exhaustive scoring is limited to {bound} variables, got {len(a.variables)} and {len(b.variables)}"
        )
    alignment = _Alignment(a, b)
    n = len(alignment.a_vars)
    best_unary = [max((alignment.unary.get((i, j), 0) for j in alignment.candidates[i]), default=0) for i in range(n)]
    # relation triples of a that some b triple could match, keyed by their endpoints
    b_roles = {r for _, r, _ in b.relations}
    a_index = {v: i for i, v in enumerate(alignment.a_vars)}
    open_relations = [
        (a_index[s], a_index[t]) for s, r, t in a.relations if s != t and r in b_roles
    ]

    mapping: List[Optional[int]] = [None] * n
    used: Set[int] = set()
    best = {"value": -1, "mapping": list(mapping)}

    def optimistic(depth: int, current: int) -> int:
        remaining = sum(best_unary[depth:])
        pending = sum(1 for s, t in open_relations if s >= depth or t >= depth)
        return current + remaining + pending

    def search(depth: int, current: int):
        if current > best["value"]:
            best["value"] = current
            best["mapping"] = list(mapping)
        if depth == n or optimistic(depth, current) <= best["value"]:
            return
        for j in alignment.ordered_candidates[depth]:
            if j in used:
                continue
            gain = alignment.move_gain(mapping, depth, j)
            mapping[depth] = j
            used.add(j)
            search(depth + 1, current + gain)
            used.discard(j)
            mapping[depth] = None
        search(depth + 1, current)

    search(0, 0)
    return _score(alignment, best["mapping"], a, b)


def _fill(mapping: List[Optional[int]], order: Sequence[int]) -> List[Optional[int]]:
    """Give every unmapped variable an unused b variable, taken in `order`, while any remain"""
    taken = set(mapping)
    free = [j for j in order if j not in taken]
    for i in range(len(mapping)):
        if mapping[i] is None and free:
            mapping[i] = free.pop(0)
    return mapping


def _smart_init(alignment: _Alignment, a: TripleSet, b: TripleSet) -> List[Optional[int]]:
    """Concept-matched start; leftovers take an unused candidate, then any free b variable"""
    a_concepts = {v: c for v, _, c in a.instances}
    b_concepts = {v: c for v, _, c in b.instances}
    mapping: List[Optional[int]] = [None] * len(alignment.a_vars)
    used: Set[int] = set()
    for i, var in enumerate(alignment.a_vars):
        for j in alignment.ordered_candidates[i]:
            if j not in used and b_concepts.get(alignment.b_vars[j]) == a_concepts.get(var):
                mapping[i] = j
                used.add(j)
                break
    for i in range(len(mapping)):
        if mapping[i] is None:
            for j in alignment.ordered_candidates[i]:
                if j not in used:
                    mapping[i] = j
                    used.add(j)
                    break
    return _fill(mapping, range(len(alignment.b_vars)))


def _random_init(alignment: _Alignment, rng: np.random.Generator) -> List[Optional[int]]:
    """A random injective mapping over all of b, not only candidates"""
    mapping: List[Optional[int]] = [None] * len(alignment.a_vars)
    order = [int(j) for j in rng.permutation(len(alignment.b_vars))]
    for i in rng.permutation(len(mapping)):
        if order:
            mapping[int(i)] = order.pop()
    return mapping


def _assign(mapping: List[Optional[int]], i: int, j: int):
    """Point i at j; whoever held j takes i's old target"""
    if j in mapping:
        holder = mapping.index(j)
        if holder != i:
            mapping[holder] = mapping[i]
    mapping[i] = j


def _climb(alignment: _Alignment, mapping: List[Optional[int]]) -> Tuple[int, List[Optional[int]]]:
    """
    Apply the best improving move until none improves the match count.

    Moves: point a variable at an unused b variable, swap two targets, or set both
    ends of a matching relation at once, displacing the previous holders.
    """
    current = alignment.match(mapping)
    while True:
        used = {j for j in mapping if j is not None}
        best_gain, best_trial = 0, None
        for i in range(len(mapping)):
            for j in range(len(alignment.b_vars)):
                if j in used:
                    continue
                gain = alignment.move_gain(mapping, i, j)
                if gain > best_gain:
                    best_gain, best_trial = gain, mapping[:i] + [j] + mapping[i + 1:]
        for i in range(len(mapping)):
            for k in range(i + 1, len(mapping)):
                if mapping[i] == mapping[k]:
                    continue
                gain = alignment.swap_gain(mapping, i, k)
                if gain > best_gain:
                    trial = list(mapping)
                    trial[i], trial[k] = trial[k], trial[i]
                    best_gain, best_trial = gain, trial
        for (i, j), links in alignment.binary.items():
            for k, l in links:
                if mapping[i] == j and mapping[k] == l:
                    continue
                trial = list(mapping)
                _assign(trial, i, j)
                _assign(trial, k, l)
                gain = alignment.match(trial) - current
                if gain > best_gain:
                    best_gain, best_trial = gain, trial
        if best_trial is None:
            return current, mapping
        mapping = best_trial
        current += best_gain


def score(a: TripleSet, b: TripleSet, restarts: int = 4, rng: Optional[np.random.Generator] = None) -> SmatchScore:
    """Best hill-climbing result over `restarts` starts: one concept-matched, the rest random"""
    if restarts < 1:
        raise ValueError(f"restarts must be at least 1, got {restarts}")
    rng = rng if rng is not None else np.random.default_rng(0)
    alignment = _Alignment(a, b)
    best_value, best_mapping = -1, []
    for attempt in range(restarts):
        start = _smart_init(alignment, a, b) if attempt == 0 else _random_init(alignment, rng)
        value, mapping = _climb(alignment, start)
        if value > best_value:
            best_value, best_mapping = value, mapping
        if best_value == min(len(a), len(b)):
            break
    return _score(alignment, best_mapping, a, b)


def subgraph_similarity(
    g1: AmrGraph,
    s1: Subgraph,
    g2: AmrGraph,
    s2: Subgraph,
    mode: str = "f1",
    exact_bound: int = DEFAULT_EXACT_BOUND,
    restarts: int = 4,
    seed: int = 0,
) -> float:
    """SMATCH F1 between the triple sets induced by two subgraphs (raw matched count in `raw` mode)"""
    a, b = subgraph_triples(g1, s1), subgraph_triples(g2, s2)
    if len(a.variables) <= exact_bound and len(b.variables) <= exact_bound:
        result = score_exact(a, b, exact_bound)
    else:
        result = score(a, b, restarts, np.random.default_rng(seed))
    return float(result.matched) if mode == "raw" else result.f1


class SmatchScorer:
    """Scores many graph pairs, each with its own generator seeded from (seed, pair index)"""

    def __init__(self, restarts: int = 4, seed: int = 42, exact: bool = False,
                 exact_bound: int = DEFAULT_EXACT_BOUND, workers: int = 1):
        self.restarts = restarts
        self.seed = seed
        self.exact = exact
        self.exact_bound = exact_bound
        self.workers = workers

    def score_pair(self, index: int, a: AmrGraph, b: AmrGraph) -> SmatchScore:
        ta, tb = to_triples(a), to_triples(b)
        if self.exact:
            return score_exact(ta, tb, self.exact_bound)
        return score(ta, tb, self.restarts, np.random.default_rng([self.seed, index]))

    def score_pairs(self, pairs: Sequence[Tuple[AmrGraph, AmrGraph]]) -> List[SmatchScore]:
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            results = list(pool.map(lambda item: self.score_pair(item[0], *item[1]), enumerate(pairs)))
        logger.info(f"Scored {len(results)} graph pairs")
        return results

    @staticmethod
    def corpus_score(scores: Sequence[SmatchScore]) -> SmatchScore:
        """Micro-averaged score from summed match and triple counts"""
        return SmatchScore(
            sum(s.matched for s in scores),
            sum(s.test_total for s in scores),
            sum(s.gold_total for s in scores),
        )
