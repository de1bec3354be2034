"""
PENMAN notation codec.

Parses `(var / concept :role child ...)` expressions into AmrGraph objects and
writes them back out. The parser is iterative so arbitrarily deep input cannot
exhaust the interpreter stack, and every rejection is one of four error classes
carrying the UTF-8 byte offset of the offending token.
"""
import logging
import re
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

from amr_graph import AmrGraph, Edge

logger = logging.getLogger(__name__)

# One lowercase letter followed by digits: the shape AMR annotators give variables.
VARIABLE_SHAPE = re.compile(r"^[a-z]\d*$")

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
    | (?P<lparen>\()
    | (?P<rparen>\))
    | (?P<slash>/)
    | (?P<string>"(?:[^"\\]|\\.)*")
    | (?P<role>:[^\s()"/:]+)
    | (?P<symbol>[^\s()"/:]+)
    | (?P<junk>.)
    """,
    re.VERBOSE | re.DOTALL,
)


class PenmanSyntaxError(ValueError):
    """Base class for PENMAN rejections; offset is a byte offset into the UTF-8 encoded input"""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.reason = message
        self.offset = offset


class UnbalancedParens(PenmanSyntaxError):
    """Missing or surplus parentheses, or any other malformed structure"""


class DuplicateVariableInstance(PenmanSyntaxError):
    """A variable is given a concept more than once"""


class DanglingVariableReference(PenmanSyntaxError):
    """A bare reference to a variable that is never defined"""


class EmptyConcept(PenmanSyntaxError):
    """A node without a variable, a slash or a concept"""


class _Token(NamedTuple):
    kind: str
    value: str
    offset: int


def _byte_offset(text: str, position: int) -> int:
    return len(text[:position].encode("utf-8", errors="replace"))


def _tokenize(text: str) -> List[_Token]:
    tokens = []
    for match in _TOKEN_RE.finditer(text):
        kind = match.lastgroup
        if kind == "ws":
            continue
        offset = _byte_offset(text, match.start())
        if kind == "junk":
            if match.group() == '"':
                raise UnbalancedParens("unterminated quoted constant", offset)
            raise UnbalancedParens(f"unexpected character {match.group()!r}", offset)
        tokens.append(_Token(kind, match.group(), offset))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.position = 0
        self.end_offset = _byte_offset(text, len(text))

    def peek(self) -> Optional[_Token]:
        return self.tokens[self.position] if self.position < len(self.tokens) else None

    def take(self) -> Optional[_Token]:
        token = self.peek()
        if token is not None:
            self.position += 1
        return token

    def fail_at_end(self, message: str):
        raise UnbalancedParens(message, self.end_offset)

    def node_header(self, open_token: _Token, defined: Dict[str, int]) -> Tuple[str, str]:
        """Read `var / concept` after an opening parenthesis"""
        var_token = self.take()
        if var_token is None:
            self.fail_at_end("missing ')'")
        if var_token.kind != "symbol":
            raise EmptyConcept("node has no variable", var_token.offset)

        slash = self.take()
        if slash is None:
            self.fail_at_end("missing ')'")
        if slash.kind != "slash":
            raise EmptyConcept(f"node '{var_token.value}' has no concept", slash.offset)

        concept = self.take()
        if concept is None:
            self.fail_at_end("missing ')'")
        if concept.kind not in ("symbol", "string"):
            raise EmptyConcept(f"node '{var_token.value}' has an empty concept", concept.offset)

        if var_token.value in defined:
            raise DuplicateVariableInstance(
                f"variable '{var_token.value}' already defined at byte {defined[var_token.value]}",
                var_token.offset,
            )
        defined[var_token.value] = var_token.offset
        return var_token.value, concept.value

    def parse(self) -> AmrGraph:
        first = self.take()
        if first is None:
            self.fail_at_end("empty input")
        if first.kind != "lparen":
            raise UnbalancedParens("graph must start with '('", first.offset)

        defined: Dict[str, int] = {}
        instances: List[Tuple[str, str]] = []
        # (source, role, target, offset, kind) where kind is node, string or symbol
        pending: List[Tuple[str, str, str, int, str]] = []

        root, concept = self.node_header(first, defined)
        instances.append((root, concept))
        stack = [root]

        while stack:
            token = self.take()
            if token is None:
                self.fail_at_end("missing ')'")

            if token.kind == "rparen":
                stack.pop()
                continue

            if token.kind != "role":
                raise UnbalancedParens(f"expected a role or ')', found {token.value!r}", token.offset)

            value = self.take()
            if value is None:
                self.fail_at_end(f"role {token.value} has no value")
            if value.kind == "lparen":
                var, concept = self.node_header(value, defined)
                instances.append((var, concept))
                pending.append((stack[-1], token.value, var, value.offset, "node"))
                stack.append(var)
            elif value.kind in ("symbol", "string"):
                pending.append((stack[-1], token.value, value.value, value.offset, value.kind))
            else:
                raise UnbalancedParens(f"role {token.value} has no value", value.offset)

        trailing = self.peek()
        if trailing is not None:
            raise UnbalancedParens("unexpected text after the closing ')'", trailing.offset)

        edges = []
        for source, role, target, offset, kind in pending:
            if kind == "node":
                edges.append(Edge(source, role, target))
            elif kind == "symbol" and target in defined:
                edges.append(Edge(source, role, target))
            elif kind == "symbol" and VARIABLE_SHAPE.match(target):
                raise DanglingVariableReference(f"variable '{target}' is never defined", offset)
            else:
                edges.append(Edge(source, role, target, is_attribute=True))

        return AmrGraph(root, tuple(instances), tuple(edges))


def parse_penman(text: Union[str, bytes]) -> AmrGraph:
    """
    Parse one PENMAN expression.

    Bare symbols naming a defined variable become reentrant relations; other bare
    symbols, numbers and quoted strings become attribute constants stored verbatim.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    return _Parser(text).parse()


def _emit_tokens(graph: AmrGraph) -> List[Tuple[str, int]]:
    """Depth-first token stream paired with the nesting depth each token starts at"""
    graph.validate()
    tree = graph.tree_view
    tokens: List[Tuple[str, int]] = []

    def open_node(var: str, depth: int):
        tokens.extend([("(", depth), (var, depth), ("/", depth), (graph.concept_of(var), depth)])

    open_node(graph.root, 0)
    stack = [(graph.root, iter(graph.outgoing(graph.root)))]
    while stack:
        var, edges = stack[-1]
        edge = next(edges, None)
        depth = len(stack)
        if edge is None:
            tokens.append((")", depth - 1))
            stack.pop()
            continue
        tokens.append((edge.role, depth))
        if edge.is_attribute:
            tokens.append((edge.target, depth))
        elif tree.parent.get(edge.target) is edge:
            open_node(edge.target, depth)
            stack.append((edge.target, iter(graph.outgoing(edge.target))))
        else:
            tokens.append((edge.target, depth))
    return tokens


def linearize(graph: AmrGraph) -> List[str]:
    """Token sequence of the serialization: parentheses, variables, slashes, concepts, roles and constants"""
    return [token for token, _ in _emit_tokens(graph)]


def serialize_penman(graph: AmrGraph, indent: Optional[int] = None) -> str:
    """
    Write a graph in PENMAN notation.

    Children follow stored edge order; a reentrant variable is written bare after its
    first expansion. With indent set each role starts a new line nested by depth.
    """
    pieces: List[str] = []
    previous = None
    for token, depth in _emit_tokens(graph):
        if token.startswith(":") and indent is not None and previous is not None:
            pieces.append("\n" + " " * (indent * depth))
        elif previous is not None and previous != "(" and token != ")":
            pieces.append(" ")
        pieces.append(token)
        previous = token
    return "".join(pieces)


def single_line(penman_text: str) -> str:
    """Collapse whitespace outside quoted constants so a graph fits on one line"""
    parts = re.split(r'("(?:[^"\\]|\\.)*")', penman_text)
    collapsed = []
    for index, part in enumerate(parts):
        if index % 2 == 0:
            part = re.sub(r"\s+", " ", part).replace("( ", "(").replace(" )", ")")
        collapsed.append(part)
    return "".join(collapsed).strip()
