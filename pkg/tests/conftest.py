import itertools
import os
import sys
from collections import Counter
from pathlib import Path
from typing import List, Optional

import numpy as np
import pytest
from hypothesis import strategies as st

from amr_graph import AmrGraph, Edge
from penman_codec import parse_penman

FIXTURES = Path(__file__).parent / "fixtures"

SAY_GRAPH = "(s / say-01 :ARG0 (p / person :mod (f / famous)) :ARG1 (v / victory))"
REENTRANT_GRAPH = "(s / say-01 :ARG0 (p / person) :ARG1 (v / victory :poss p))"

CONCEPTS = ["person", "say-01", "victory", "city", "want-01", "go-02"]
ROLES = [":ARG0", ":ARG1", ":mod", ":poss", ":location"]
CONSTANTS = ['"Roem"', "2", "-", "imperative"]


def random_graph(rng: np.random.Generator, n_vars: int, concepts: Optional[List[str]] = None,
                 reentrancy: float = 0.2, attributes: float = 0.3) -> AmrGraph:
    """Random rooted graph over variables x0..x{n-1}; every variable hangs off an earlier one"""
    concepts = concepts or CONCEPTS
    names = [f"x{i}" for i in range(n_vars)]
    instances = tuple((name, concepts[int(rng.integers(len(concepts)))]) for name in names)
    edges = []
    for i in range(1, n_vars):
        parent = names[int(rng.integers(i))]
        edges.append(Edge(parent, ROLES[int(rng.integers(len(ROLES)))], names[i]))
    for i in range(n_vars):
        if n_vars > 1 and rng.random() < reentrancy:
            target = names[int(rng.integers(n_vars))]
            edges.append(Edge(names[i], ROLES[int(rng.integers(len(ROLES)))], target))
        if rng.random() < attributes:
            edges.append(Edge(names[i], ":quant", CONSTANTS[int(rng.integers(len(CONSTANTS)))], is_attribute=True))
    order = rng.permutation(len(edges))
    return AmrGraph(names[0], instances, tuple(edges[i] for i in order))


@st.composite
def amr_graphs(draw, max_vars: int = 8) -> AmrGraph:
    seed = draw(st.integers(min_value=0, max_value=2**32 - 1))
    n_vars = draw(st.integers(min_value=1, max_value=max_vars))
    return random_graph(np.random.default_rng(seed), n_vars)


def brute_force_isomorphic(a: AmrGraph, b: AmrGraph) -> bool:
    """Try every bijection; only for small graphs"""
    if len(a.variables) != len(b.variables):
        return False
    target = (Counter(b.instances), Counter(b.relations), Counter(b.attributes))
    for perm in itertools.permutations(b.variables):
        mapping = dict(zip(a.variables, perm))
        if mapping[a.root] != b.root:
            continue
        mapped = (
            Counter((mapping[v], c) for v, c in a.instances),
            Counter((mapping[s], r, mapping[t]) for s, r, t in a.relations),
            Counter((mapping[s], r, t) for s, r, t in a.attributes),
        )
        if mapped == target:
            return True
    return False


def adapter_command(script: str) -> str:
    return f'"{sys.executable}" "{FIXTURES / script}"'


@pytest.fixture
def say_graph() -> AmrGraph:
    return parse_penman(SAY_GRAPH)


@pytest.fixture
def reentrant_graph() -> AmrGraph:
    return parse_penman(REENTRANT_GRAPH)


@pytest.fixture
def fixture_graphs() -> List[AmrGraph]:
    blocks = (FIXTURES / "graphs.amr").read_text(encoding="utf-8").split("\n\n")
    graphs = []
    for block in blocks:
        lines = [line for line in block.splitlines() if not line.startswith("#")]
        if any(line.strip() for line in lines):
            graphs.append(parse_penman("\n".join(lines)))
    return graphs


@pytest.fixture
def corpus_path() -> Path:
    return FIXTURES / "corpus.jsonl"


GOLDEN = FIXTURES / "golden"
REGEN_GOLDEN_ENV_VAR = "AMRAUG_REGEN_GOLDEN"


@pytest.fixture
def golden():
    """
    Byte comparison against a committed file under fixtures/golden.

    A missing file is written from the current output and the test skips; set
    AMRAUG_REGEN_GOLDEN=1 to rewrite every file after an intended output change.
    """
    def check(name: str, data: bytes):
        path = GOLDEN / name
        if os.environ.get(REGEN_GOLDEN_ENV_VAR) or not path.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(data)
            pytest.skip(f"wrote golden file {name}; commit it")
        assert data == path.read_bytes()

    return check
