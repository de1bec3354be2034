"""
Structural editing of AMR graphs.

Depth ratios, subgraph enumeration, target-related keyword protection, attribute
filtering and the Gaussian-rate subgraph deletion used by each abstraction round.
"""
import logging
import re
from dataclasses import dataclass, field
from fnmatch import fnmatchcase
from typing import FrozenSet, Iterable, List, Optional, Tuple

import numpy as np

from amr_graph import AmrGraph
from similarity import tokenize

logger = logging.getLogger(__name__)

SENSE_SUFFIX = re.compile(r"-\d+$")

DEFAULT_ATTRIBUTE_ROLES = (":mod", ":wiki", ":quant", ":value", ":op*")


class UnknownVariable(KeyError):
    """A variable that is not part of the graph's tree view"""


@dataclass(frozen=True)
class Subgraph:
    root: str
    members: Tuple[str, ...]
    depth: int

    def __contains__(self, var: str) -> bool:
        return var in self.members

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class TriProtection:
    keywords: Tuple[str, ...] = ()
    protected: FrozenSet[str] = frozenset()
    # protected variables plus every tree ancestor of one
    non_deletable: FrozenSet[str] = frozenset()

    @classmethod
    def empty(cls) -> "TriProtection":
        return cls()


@dataclass(frozen=True)
class DeletionPolicy:
    alpha: float = 0.35
    mu: float = 0.5
    sigma2: float = 0.1
    attribute_roles: Tuple[str, ...] = field(default=DEFAULT_ATTRIBUTE_ROLES)

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.sigma2 < 0:
            raise ValueError(f"sigma2 must be non-negative, got {self.sigma2}")

    def deletes_role(self, role: str) -> bool:
        return any(fnmatchcase(role, pattern) for pattern in self.attribute_roles)


def sample_rate(rng: np.random.Generator, mu: float, sigma2: float) -> float:
    """One draw from Normal(mu, sigma2) clamped to [0, 1]"""
    return float(np.clip(rng.normal(mu, np.sqrt(sigma2)), 0.0, 1.0))


def depth_ratio(graph: AmrGraph, subgraph_root: str) -> float:
    tree = graph.tree_view
    if subgraph_root not in tree.parent:
        raise UnknownVariable(subgraph_root)
    total = tree.height()
    if total == 0:
        logger.debug(f"single-node graph rooted at '{graph.root}', depth ratio taken as 1.0")
        return 1.0
    return tree.height(subgraph_root) / total


def enumerate_subgraphs(graph: AmrGraph) -> List[Subgraph]:
    """One subtree per non-root variable, in surface (preorder) order"""
    tree = graph.tree_view
    return [
        Subgraph(var, tuple(tree.descendants(var)), tree.height(var))
        for var in tree.order
        if var != tree.root
    ]


def _normalize_concept(concept: str) -> str:
    return SENSE_SUFFIX.sub("", concept.strip('"')).casefold()


def _keyword_hit(value: str, keywords: List[Tuple[str, set]]) -> bool:
    return any(value == phrase or value in tokens for phrase, tokens in keywords)


def match_tri(graph: AmrGraph, keywords: Iterable[str]) -> TriProtection:
    """
    Protect variables whose concept or attribute constant names a keyword.

    Concepts lose their sense suffix, constants lose their quotes, and both are
    compared case-folded against each keyword phrase and its individual tokens.
    """
    keywords = tuple(k for k in keywords if k and k.strip())
    if not keywords:
        return TriProtection.empty()
    normalized = [(k.casefold().strip(), set(tokenize(k))) for k in keywords]

    protected = set()
    for var, concept in graph.instances:
        if _keyword_hit(_normalize_concept(concept), normalized):
            protected.add(var)
    for source, _, constant in graph.attributes:
        if _keyword_hit(constant.strip('"').casefold(), normalized):
            protected.add(source)

    tree = graph.tree_view
    non_deletable = set(protected)
    for var in protected:
        non_deletable.update(tree.ancestors(var))

    if protected:
        logger.debug(f"keywords {list(keywords)} protect {sorted(protected)}")
    return TriProtection(keywords, frozenset(protected), frozenset(non_deletable))


def filter_attributes(graph: AmrGraph, policy: DeletionPolicy, protection: TriProtection) -> AmrGraph:
    """Drop attributes with a listed role unless they hang off a protected variable"""
    kept = [
        edge for edge in graph.edges
        if not edge.is_attribute
        or edge.source in protection.protected
        or not policy.deletes_role(edge.role)
    ]
    if len(kept) == len(graph.edges):
        return graph
    return graph.with_edges(kept)


def deletion_candidates(graph: AmrGraph, policy: DeletionPolicy, protection: TriProtection) -> List[Subgraph]:
    return [
        sub for sub in enumerate_subgraphs(graph)
        if sub.root not in protection.non_deletable and depth_ratio(graph, sub.root) < policy.alpha
    ]


def delete_subgraphs(
    graph: AmrGraph,
    policy: DeletionPolicy,
    protection: TriProtection,
    rng: np.random.Generator,
    rate: Optional[float] = None,
) -> AmrGraph:
    """
    Remove floor(rate * |candidates|) eligible subtrees picked uniformly at random.

    The rate is drawn from the policy's clamped Gaussian unless given. Candidates
    nested in an already removed subtree are skipped and do not count.
    """
    epsilon = sample_rate(rng, policy.mu, policy.sigma2) if rate is None else float(np.clip(rate, 0.0, 1.0))
    candidates = deletion_candidates(graph, policy, protection)
    target = int(np.floor(epsilon * len(candidates)))
    if target == 0:
        return graph

    removed = set()
    deleted = 0
    for index in rng.permutation(len(candidates)):
        if deleted == target:
            break
        candidate = candidates[index]
        if candidate.root in removed:
            continue
        removed.update(candidate.members)
        deleted += 1

    logger.debug(
        f"deleted {deleted} of {len(candidates)} candidate subgraphs (rate {epsilon:.3f}), "
        f"{len(removed)} variables removed"
    )
    return graph.remove_variables(removed)
