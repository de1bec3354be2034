"""
AMR graph mixing.

A document borrows content from its most similar neighbour in the corpus: the
partner's subgraphs are scored against the document's own subgraphs and the top-k
are grafted next to (or in place of) their best matching anchors.
"""
import logging
from dataclasses import dataclass, asdict
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from amr_graph import AmrGraph, Edge, InvariantViolation
from graph_editor import Subgraph, TriProtection, enumerate_subgraphs
from similarity import SimilarityProvider
from smatch_scorer import DEFAULT_EXACT_BOUND, subgraph_similarity

logger = logging.getLogger(__name__)

FALLBACK_ROLE = ":mod"


class CorpusTooSmall(ValueError):
    """Partner retrieval needs at least two documents"""


@dataclass(frozen=True)
class Graft:
    source_root: str
    anchor_root: str
    score: float
    role: str


@dataclass(frozen=True)
class MixPlan:
    grafts: Tuple[Graft, ...]
    k: int

    def __len__(self) -> int:
        return len(self.grafts)

    def to_dict(self) -> Dict[str, Any]:
        return {"k": self.k, "grafts": [asdict(g) for g in self.grafts]}


def _check_size(corpus: Sequence[Any]):
    if len(corpus) < 2:
        raise CorpusTooSmall(f"partner retrieval needs at least 2 documents, got {len(corpus)}")


def _partner_rows(matrix: np.ndarray) -> List[int]:
    masked = matrix.copy()
    np.fill_diagonal(masked, -np.inf)
    # argmax keeps the lowest position among ties
    return [int(i) for i in np.argmax(masked, axis=1)]


def retrieve_partner(corpus: Sequence[Any], index: int, provider: SimilarityProvider) -> int:
    """Position of the most similar other document; records need `id` and `text`"""
    _check_size(corpus)
    texts = [record.text for record in corpus]
    ids = [record.id for record in corpus]
    vectors = provider.embed(texts, ids)
    norms = np.linalg.norm(vectors, axis=1)
    scores = []
    for j in range(len(corpus)):
        denominator = norms[index] * norms[j]
        scores.append(float(vectors[index] @ vectors[j] / denominator) if denominator else 0.0)
    scores[index] = -np.inf
    return int(np.argmax(scores))


def retrieve_partners(corpus: Sequence[Any], provider: SimilarityProvider) -> List[int]:
    """Partner of every document from a single cosine matrix"""
    _check_size(corpus)
    matrix = provider.similarity_matrix([r.text for r in corpus], [r.id for r in corpus])
    return _partner_rows(matrix)


def score_table(
    gi: AmrGraph,
    gk: AmrGraph,
    mode: str = "f1",
    exact_bound: int = DEFAULT_EXACT_BOUND,
    restarts: int = 4,
    seed: int = 0,
) -> Tuple[List[Subgraph], List[Subgraph], np.ndarray]:
    """Similarity of every (partner subgraph, own subgraph) pair; rows follow gk, columns gi"""
    partner_subs = enumerate_subgraphs(gk)
    own_subs = enumerate_subgraphs(gi)
    table = np.zeros((len(partner_subs), len(own_subs)))
    for row, s in enumerate(partner_subs):
        for col, t in enumerate(own_subs):
            table[row, col] = subgraph_similarity(gk, s, gi, t, mode, exact_bound, restarts, seed)
    return partner_subs, own_subs, table


def build_mix_plan(
    gi: AmrGraph,
    gk: AmrGraph,
    k: int,
    mode: str = "f1",
    exact_bound: int = DEFAULT_EXACT_BOUND,
    restarts: int = 4,
    seed: int = 0,
) -> MixPlan:
    """
    Pick the k partner subgraphs with the best anchor scores.

    Each partner subgraph pairs with its most similar own subgraph (earliest on
    ties). A subgraph nested in another selected one is dropped in favour of the
    larger one.
    """
    if k <= 0:
        return MixPlan((), k)
    partner_subs, own_subs, table = score_table(gi, gk, mode, exact_bound, restarts, seed)
    if not partner_subs or not own_subs:
        return MixPlan((), k)

    anchors = np.argmax(table, axis=1)
    best = table[np.arange(len(partner_subs)), anchors]
    ranked = sorted(range(len(partner_subs)), key=lambda row: (-best[row], row))

    chosen: List[int] = []
    for row in ranked:
        sub = partner_subs[row]
        if any(sub.root in partner_subs[c].members for c in chosen):
            continue
        contained = [c for c in chosen if partner_subs[c].root in sub.members]
        if contained:
            chosen = [c for c in chosen if c not in contained] + [row]
        elif len(chosen) < k:
            chosen.append(row)

    chosen.sort(key=lambda row: (-best[row], row))
    tree = gk.tree_view
    grafts = tuple(
        Graft(
            source_root=partner_subs[row].root,
            anchor_root=own_subs[int(anchors[row])].root,
            score=float(best[row]),
            role=tree.incoming_role(partner_subs[row].root) or FALLBACK_ROLE,
        )
        for row in chosen
    )
    return MixPlan(grafts, k)


def _fresh_name(var: str, taken: Set[str]) -> str:
    if var not in taken:
        return var
    prefix = var[0] if var[:1].isalpha() else "x"
    counter = 1
    while f"{prefix}{counter}" in taken:
        counter += 1
    return f"{prefix}{counter}"


def _copy_subtree(gk: AmrGraph, root: str, taken: Set[str]) -> Tuple[Dict[str, str], List[Tuple[str, str]], List[Edge]]:
    """Renamed instances and internal edges of gk's subtree at root"""
    members = gk.tree_view.descendants(root)
    member_set = set(members)
    renames: Dict[str, str] = {}
    for var in members:
        renames[var] = _fresh_name(var, taken)
        taken.add(renames[var])
    instances = [(renames[v], gk.concept_of(v)) for v in members]
    edges = [
        Edge(renames[e.source], e.role, e.target if e.is_attribute else renames[e.target], e.is_attribute)
        for e in gk.edges
        if e.source in member_set and (e.is_attribute or e.target in member_set)
    ]
    return renames, instances, edges


def apply_mix(
    gi: AmrGraph,
    gk: AmrGraph,
    plan: MixPlan,
    mode: str = "append",
    protection: Optional[TriProtection] = None,
) -> AmrGraph:
    """
    Graft the planned partner subtrees into gi with fresh variable names.

    In append mode each copy becomes a new last child of its anchor. In replace
    mode the copy takes the anchor's place under the anchor's parent; protected
    anchors fall back to append and anchors already replaced are skipped.
    """
    if mode not in ("append", "replace"):
        raise ValueError(f"unknown mix mode '{mode}'")
    protection = protection or TriProtection.empty()
    graph = gi

    for graft in plan.grafts:
        if graft.anchor_root not in graph.concepts:
            logger.debug(f"anchor '{graft.anchor_root}' no longer present, graft of '{graft.source_root}' skipped")
            continue
        taken = set(graph.variables) | graph.constant_symbols()
        renames, instances, inner_edges = _copy_subtree(gk, graft.source_root, taken)
        new_root = renames[graft.source_root]

        replace = mode == "replace" and graft.anchor_root not in protection.non_deletable
        if not replace:
            attach = Edge(graft.anchor_root, graft.role, new_root)
            graph = AmrGraph(
                graph.root,
                graph.instances + tuple(instances),
                graph.edges + (attach,) + tuple(inner_edges),
            )
            continue

        tree = graph.tree_view
        parent_edge = tree.parent[graft.anchor_root]
        doomed = set(tree.descendants(graft.anchor_root))
        attach = Edge(parent_edge.source, parent_edge.role, new_root)
        edges = []
        for edge in graph.edges:
            if edge == parent_edge:
                edges.append(attach)
            elif edge.source not in doomed and (edge.is_attribute or edge.target not in doomed):
                edges.append(edge)
        survivors = tuple((v, c) for v, c in graph.instances if v not in doomed)
        graph = AmrGraph(graph.root, survivors + tuple(instances), tuple(edges) + tuple(inner_edges))

    try:
        graph.validate()
    except InvariantViolation as e:
        raise InvariantViolation(f"mixing produced a malformed graph: {e}") from e
    return graph
