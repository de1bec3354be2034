import re
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Set, Tuple

ROLE_PATTERN = re.compile(r"^:[^\s()]+$")


class InvariantViolation(ValueError):
    """Raised when an AmrGraph breaks one of its structural invariants"""


@dataclass(frozen=True)
class Edge:
    """One outgoing role of a variable: a relation (target is a variable) or an attribute (target is a constant)"""
    source: str
    role: str
    target: str
    is_attribute: bool = False


@dataclass
class TreeView:
    """
    Spanning-tree reading of a graph.

    The tree parent of each variable is the first relation reaching it in depth-first
    surface order; every later relation into an already placed variable is reentrant.
    """
    root: str
    parent: Dict[str, Optional[Edge]]
    children: Dict[str, List[str]]
    depth: Dict[str, int]
    order: List[str]
    tree_edges: List[Edge]
    reentrant_edges: List[Edge]
    heights: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        # heights bottom-up over reversed preorder
        for var in reversed(self.order):
            kids = self.children.get(var, [])
            self.heights[var] = 1 + max(self.heights[k] for k in kids) if kids else 0

    def height(self, var: Optional[str] = None) -> int:
        """Longest downward edge count from var (the whole tree when var is None)"""
        return self.heights[self.root if var is None else var]

    def descendants(self, var: str) -> List[str]:
        """var plus all tree descendants, in preorder"""
        members = []
        stack = [var]
        while stack:
            current = stack.pop()
            members.append(current)
            stack.extend(reversed(self.children.get(current, [])))
        return members

    def ancestors(self, var: str) -> List[str]:
        """Tree ancestors of var from its parent up to the root"""
        chain = []
        edge = self.parent.get(var)
        while edge is not None:
            chain.append(edge.source)
            edge = self.parent.get(edge.source)
        return chain

    def incoming_role(self, var: str) -> Optional[str]:
        edge = self.parent.get(var)
        return edge.role if edge is not None else None


@dataclass(frozen=True)
class AmrGraph:
    """
    Rooted, labeled semantic graph.

    Edges keep their PENMAN surface order; relations and attributes are views over them
    so serialization can reproduce the original interleaving of roles.
    """
    root: str
    instances: Tuple[Tuple[str, str], ...]
    edges: Tuple[Edge, ...] = ()

    @property
    def variables(self) -> List[str]:
        return [var for var, _ in self.instances]

    @property
    def relations(self) -> List[Tuple[str, str, str]]:
        return [(e.source, e.role, e.target) for e in self.edges if not e.is_attribute]

    @property
    def attributes(self) -> List[Tuple[str, str, str]]:
        return [(e.source, e.role, e.target) for e in self.edges if e.is_attribute]

    @cached_property
    def concepts(self) -> Dict[str, str]:
        return dict(self.instances)

    def concept_of(self, var: str) -> str:
        return self.concepts[var]

    def outgoing(self, var: str) -> List[Edge]:
        return self._adjacency.get(var, [])

    @cached_property
    def _adjacency(self) -> Dict[str, List[Edge]]:
        adjacency: Dict[str, List[Edge]] = {}
        for edge in self.edges:
            adjacency.setdefault(edge.source, []).append(edge)
        return adjacency

    @cached_property
    def tree_view(self) -> TreeView:
        return build_tree_view(self)

    def constant_symbols(self) -> Set[str]:
        """Attribute constants as written, used to keep fresh variable names unambiguous"""
        return {e.target for e in self.edges if e.is_attribute}

    def validate(self) -> None:
        """Check every AmrGraph invariant, raising InvariantViolation on the first failure"""
        seen: Set[str] = set()
        for var, concept in self.instances:
            if var in seen:
                raise InvariantViolation(f"variable '{var}' has more than one instance")
            if not concept:
                raise InvariantViolation(f"variable '{var}' has an empty concept")
            seen.add(var)

        if self.root not in seen:
            raise InvariantViolation(f"root '{self.root}' is not a variable of the graph")

        for edge in self.edges:
            if edge.source not in seen:
                raise InvariantViolation(f"edge {edge.role} starts at unknown variable '{edge.source}'")
            if not edge.is_attribute and edge.target not in seen:
                raise InvariantViolation(f"relation {edge.role} points to unknown variable '{edge.target}'")
            if not ROLE_PATTERN.match(edge.role):
                raise InvariantViolation(f"malformed role '{edge.role}'")

        reached = set(self.tree_view.order)
        orphans = [var for var in self.variables if var not in reached]
        if orphans:
            raise InvariantViolation(f"variables not reachable from root '{self.root}': {', '.join(orphans)}")

    def remove_variables(self, doomed: Iterable[str]) -> "AmrGraph":
        """Drop variables with their instances, every edge they start, and every relation into them"""
        doomed = set(doomed)
        if self.root in doomed:
            raise InvariantViolation("the root variable cannot be removed")
        instances = tuple((v, c) for v, c in self.instances if v not in doomed)
        edges = tuple(
            e for e in self.edges
            if e.source not in doomed and (e.is_attribute or e.target not in doomed)
        )
        return AmrGraph(self.root, instances, edges)

    def with_edges(self, edges: Iterable[Edge]) -> "AmrGraph":
        return AmrGraph(self.root, self.instances, tuple(edges))


def build_tree_view(graph: AmrGraph) -> TreeView:
    """Depth-first walk over relations in stored order, mirroring the serializer's emission order"""
    root = graph.root
    parent: Dict[str, Optional[Edge]] = {root: None}
    children: Dict[str, List[str]] = {root: []}
    depth = {root: 0}
    order = [root]
    tree_edges: List[Edge] = []
    reentrant: List[Edge] = []

    stack = [iter(graph.outgoing(root))]
    while stack:
        edge = next(stack[-1], None)
        if edge is None:
            stack.pop()
            continue
        if edge.is_attribute:
            continue
        if edge.target in parent:
            reentrant.append(edge)
            continue
        target = edge.target
        parent[target] = edge
        children[target] = []
        children[edge.source].append(target)
        depth[target] = depth[edge.source] + 1
        order.append(target)
        tree_edges.append(edge)
        stack.append(iter(graph.outgoing(target)))

    # relations hanging off unreachable variables are neither tree nor reentrant edges
    return TreeView(root, parent, children, depth, order, tree_edges, reentrant)


def _signature(graph: AmrGraph) -> Dict[str, Tuple]:
    out_roles: Dict[str, Counter] = {v: Counter() for v in graph.variables}
    in_roles: Dict[str, Counter] = {v: Counter() for v in graph.variables}
    for edge in graph.edges:
        if edge.is_attribute:
            out_roles[edge.source][(edge.role, "=", edge.target)] += 1
        else:
            out_roles[edge.source][(edge.role, ">")] += 1
            in_roles[edge.target][edge.role] += 1
    return {
        v: (graph.concept_of(v), frozenset(out_roles[v].items()), frozenset(in_roles[v].items()))
        for v in graph.variables
    }


def graphs_isomorphic(a: AmrGraph, b: AmrGraph) -> bool:
    """True when a and b are equal up to a bijective renaming of variables that maps root to root"""
    if len(a.instances) != len(b.instances) or len(a.edges) != len(b.edges):
        return False
    if Counter(c for _, c in a.instances) != Counter(c for _, c in b.instances):
        return False
    if Counter((r, t) for _, r, t in a.attributes) != Counter((r, t) for _, r, t in b.attributes):
        return False

    sig_a, sig_b = _signature(a), _signature(b)
    if Counter(sig_a.values()) != Counter(sig_b.values()):
        return False

    relations_b = Counter(b.relations)
    attributes_b = Counter(b.attributes)
    order = a.tree_view.order + [v for v in a.variables if v not in a.tree_view.parent]
    candidates = {v: [w for w in b.variables if sig_b[w] == sig_a[v]] for v in order}
    by_var: Dict[str, List[Tuple[str, str, str]]] = {v: [] for v in a.variables}
    for rel in a.relations:
        by_var[rel[0]].append(rel)
        if rel[2] != rel[0]:
            by_var[rel[2]].append(rel)

    mapping: Dict[str, str] = {}
    used: Set[str] = set()

    def consistent(var: str) -> bool:
        # relations between var and already mapped variables must exist in b as often as in a
        local = Counter()
        for src, role, tgt in by_var[var]:
            if src in mapping and tgt in mapping:
                local[(mapping[src], role, mapping[tgt])] += 1
        return all(relations_b[key] >= count for key, count in local.items())

    def extend(index: int) -> bool:
        if index == len(order):
            mapped_rel = Counter((mapping[s], r, mapping[t]) for s, r, t in a.relations)
            mapped_attr = Counter((mapping[s], r, t) for s, r, t in a.attributes)
            return mapped_rel == relations_b and mapped_attr == attributes_b
        var = order[index]
        options = [b.root] if var == a.root else candidates[var]
        for option in options:
            if option in used or (var != a.root and option == b.root):
                continue
            if sig_b[option] != sig_a[var]:
                continue
            mapping[var] = option
            used.add(option)
            if consistent(var) and extend(index + 1):
                return True
            del mapping[var]
            used.discard(option)
        return False

    return extend(0)
