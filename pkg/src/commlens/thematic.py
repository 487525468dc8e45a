"""Thematic level: entity annotation and the concept proximity query DSL.

Queries match entity-category patterns within a single message: single
categories, ordered sequences with bounded word gaps ("PERSON ~7 GPE"),
combined with AND/OR. Grammar:

    query := or
    or    := and ("OR" and)*
    and   := seq ("AND" seq)*
    seq   := atom ( ("~" INT)? atom )*
    atom  := CATEGORY | "(" or ")"

Sequence binds tighter than AND, AND tighter than OR. Category names are
case-insensitive; tokens are whitespace-separated.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Protocol, Union

from .corpus import Corpus
from .levels import tokenize

DEFAULT_CATEGORIES = (
    "PERSON", "NORP", "FAC", "ORG", "GPE", "LOC", "PRODUCT", "EVENT",
    "WORK_OF_ART", "LAW", "LANGUAGE", "DATE", "TIME", "PERCENT", "MONEY",
    "QUANTITY", "ORDINAL", "CARDINAL",
)


@dataclass(frozen=True)
class EntityAnnotation:
    message_id: str
    start_word: int
    end_word: int  # exclusive
    category: str
    surface: str


class Tagger(Protocol):
    def tag(self, message_id: str, content: str) -> list[EntityAnnotation]: ...


# ---------------------------------------------------------------------------
# Default rule-based tagger: longest-match gazetteer + token regexes

_MONTHS = {"january", "february", "march", "april", "may", "june", "july",
           "august", "september", "october", "november", "december"}

_NUMBER_RE = re.compile(r"^\d+(\.\d+)?$")
_YEAR_RE = re.compile(r"^(1[89]|20)\d{2}$")


class GazetteerTagger:
    """Deterministic annotator: longest-match over user-supplied word lists
    per category, plus simple patterns for DATE/TIME/PERCENT/MONEY/CARDINAL.

    Gazetteer matches win over pattern matches; overlaps are resolved
    left-to-right, longest first, so spans never overlap.
    """

    def __init__(self, gazetteer: dict[str, Iterable[str]],
                 categories: tuple[str, ...] = DEFAULT_CATEGORIES):
        self.categories = categories
        self.entries: dict[tuple[str, ...], str] = {}
        self.max_len = 1
        for category, terms in gazetteer.items():
            cat = category.upper()
            if cat not in categories:
                raise ValueError(f"unknown gazetteer category: {category!r}")
            for term in terms:
                words = tuple(w.casefold() for w in tokenize(term))
                if not words:
                    continue
                self.entries[words] = cat
                self.max_len = max(self.max_len, len(words))

    def _pattern_category(self, token: str, next_token: Optional[str]) -> Optional[str]:
        low = token.casefold()
        if low in _MONTHS or _YEAR_RE.match(token):
            return "DATE"
        if _NUMBER_RE.match(token):
            if next_token is not None:
                nxt = next_token.casefold()
                if nxt in ("percent", "pct"):
                    return None  # handled as two-token PERCENT below
                if nxt in ("dollars", "usd", "euros"):
                    return None
            return "CARDINAL"
        return None

    def tag(self, message_id: str, content: str) -> list[EntityAnnotation]:
        spans = list(re.finditer(r"\w+", content, re.UNICODE))
        tokens = [m.group(0) for m in spans]
        folded = [t.casefold() for t in tokens]
        out: list[EntityAnnotation] = []
        n = len(tokens)
        consumed = [False] * n

        # gazetteer pass: longest match wins, left to right
        i = 0
        while i < n:
            matched = False
            for length in range(min(self.max_len, n - i), 0, -1):
                cat = self.entries.get(tuple(folded[i:i + length]))
                if cat is not None:
                    out.append(EntityAnnotation(message_id, i, i + length, cat,
                                                " ".join(tokens[i:i + length])))
                    for k in range(i, i + length):
                        consumed[k] = True
                    i += length
                    matched = True
                    break
            if not matched:
                i += 1

        # clock times span tokens ("14:30" tokenizes as two words), so they
        # are matched on the raw text and mapped back to token indices
        for m in re.finditer(r"\b\d{1,2}:\d{2}(:\d{2})?\b", content):
            covered = [k for k, s in enumerate(spans)
                       if s.start() >= m.start() and s.end() <= m.end()]
            if covered and not any(consumed[k] for k in covered):
                out.append(EntityAnnotation(message_id, covered[0], covered[-1] + 1,
                                            "TIME", m.group(0)))
                for k in covered:
                    consumed[k] = True

        i = 0
        while i < n:
            if consumed[i]:
                i += 1
                continue
            # two-token amounts: "30 percent", "500 dollars"
            if _NUMBER_RE.match(tokens[i]) and i + 1 < n and not consumed[i + 1]:
                nxt = folded[i + 1]
                if nxt in ("percent", "pct"):
                    out.append(EntityAnnotation(message_id, i, i + 2, "PERCENT",
                                                " ".join(tokens[i:i + 2])))
                    i += 2
                    continue
                if nxt in ("dollars", "usd", "euros"):
                    out.append(EntityAnnotation(message_id, i, i + 2, "MONEY",
                                                " ".join(tokens[i:i + 2])))
                    i += 2
                    continue
            cat = self._pattern_category(tokens[i], folded[i + 1] if i + 1 < n else None)
            if cat is not None:
                out.append(EntityAnnotation(message_id, i, i + 1, cat, tokens[i]))
            i += 1
        out.sort(key=lambda a: (a.start_word, a.end_word))
        return out


def annotate(corpus: Corpus, tagger: Tagger) -> dict[str, list[EntityAnnotation]]:
    """Annotation index: message id -> annotations sorted by start word."""
    index: dict[str, list[EntityAnnotation]] = {}
    for m in corpus.messages:
        anns = sorted(tagger.tag(m.id, m.content), key=lambda a: (a.start_word, a.end_word))
        index[m.id] = anns
    return index


def load_gazetteer(path: str) -> dict[str, list[str]]:
    """File format: one "CATEGORY:term" per line; '#' starts a comment."""
    gaz: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cat, _, term = line.partition(":")
            if not term:
                raise ValueError(f"bad gazetteer line: {line!r}")
            gaz.setdefault(cat.strip().upper(), []).append(term.strip())
    return gaz


# ---------------------------------------------------------------------------
# Query AST

@dataclass(frozen=True)
class Atom:
    category: str


@dataclass(frozen=True)
class Seq:
    atoms: tuple[Atom, ...]
    gaps: tuple[Optional[int], ...]  # len == len(atoms) - 1; None = unbounded

    def __post_init__(self):
        if len(self.atoms) < 1:
            raise ValueError("Seq needs at least one atom")
        if len(self.gaps) != len(self.atoms) - 1:
            raise ValueError("gaps length must be atoms - 1")


@dataclass(frozen=True)
class And:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Or:
    left: "Node"
    right: "Node"


Node = Union[Atom, Seq, And, Or]


class QueryParseError(Exception):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at token {position})")
        self.position = position


_TOKEN_RE = re.compile(r"\(|\)|~\d+|~|\d+|[A-Za-z_][A-Za-z_0-9]*")


def _lex(text: str) -> list[str]:
    tokens = []
    pos = 0
    for match in _TOKEN_RE.finditer(text):
        between = text[pos:match.start()]
        if between.strip():
            raise QueryParseError(f"unexpected input {between.strip()!r}", len(tokens))
        tokens.append(match.group(0))
        pos = match.end()
    if text[pos:].strip():
        raise QueryParseError(f"unexpected input {text[pos:].strip()!r}", len(tokens))
    return tokens


class _Parser:
    def __init__(self, tokens: list[str], categories: tuple[str, ...]):
        self.tokens = tokens
        self.pos = 0
        self.categories = {c.upper() for c in categories}

    def peek(self) -> Optional[str]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise QueryParseError("unexpected end of query", self.pos)
        self.pos += 1
        return tok

    def parse(self) -> Node:
        node = self.or_expr()
        if self.peek() is not None:
            raise QueryParseError(f"trailing input {self.peek()!r}", self.pos)
        return node

    def or_expr(self) -> Node:
        node = self.and_expr()
        while self.peek() is not None and self.peek().upper() == "OR":
            self.take()
            node = Or(node, self.and_expr())
        return node

    def and_expr(self) -> Node:
        node = self.seq_expr()
        while self.peek() is not None and self.peek().upper() == "AND":
            self.take()
            node = And(node, self.seq_expr())
        return node

    def seq_expr(self) -> Node:
        first = self.atom_expr()
        atoms: list[Node] = [first]
        gaps: list[Optional[int]] = []
        while True:
            tok = self.peek()
            if tok is None or tok in (")",) or tok.upper() in ("AND", "OR"):
                break
            gap: Optional[int] = None
            if tok.startswith("~"):
                self.take()
                if tok == "~":
                    nxt = self.peek()
                    if nxt is None or not nxt.isdigit():
                        raise QueryParseError("dangling '~' (expected ~<int>)", self.pos)
                    gap = int(self.take())
                else:
                    gap = int(tok[1:])
            atoms.append(self.atom_expr())
            gaps.append(gap)
        if len(atoms) == 1:
            return atoms[0]
        plain = []
        for a in atoms:
            if not isinstance(a, Atom):
                raise QueryParseError(
                    "distance sequences may contain plain categories only", self.pos)
            plain.append(a)
        return Seq(tuple(plain), tuple(gaps))

    def atom_expr(self) -> Node:
        tok = self.take()
        if tok == "(":
            node = self.or_expr()
            if self.peek() != ")":
                raise QueryParseError("unbalanced parenthesis", self.pos)
            self.take()
            return node
        if tok == ")":
            raise QueryParseError("unbalanced parenthesis", self.pos - 1)
        if tok.startswith("~"):
            raise QueryParseError("misplaced distance token", self.pos - 1)
        cat = tok.upper()
        if cat in ("AND", "OR"):
            raise QueryParseError(f"expected category, got {tok!r}", self.pos - 1)
        if cat not in self.categories:
            raise QueryParseError(f"unknown category {tok!r}", self.pos - 1)
        return Atom(cat)


def parse_query(text: str, categories: tuple[str, ...] = DEFAULT_CATEGORIES) -> Node:
    tokens = _lex(text)
    if not tokens:
        raise QueryParseError("empty query", 0)
    return _Parser(tokens, categories).parse()


def _precedence(node: Node) -> int:
    if isinstance(node, Or):
        return 0
    if isinstance(node, And):
        return 1
    return 2  # Seq and Atom


def print_query(node: Node) -> str:
    """Canonical text form; parse_query(print_query(q)) == q structurally.

    Binary operators are printed left-associatively; a right child at the
    same precedence keeps its parentheses so tree shape survives reparsing.
    """
    if isinstance(node, Atom):
        return node.category
    if isinstance(node, Seq):
        parts = [node.atoms[0].category]
        for gap, atom in zip(node.gaps, node.atoms[1:]):
            if gap is not None:
                parts.append(f"~{gap}")
            parts.append(atom.category)
        return " ".join(parts)
    op = "AND" if isinstance(node, And) else "OR"
    mine = _precedence(node)
    left = print_query(node.left)
    if _precedence(node.left) < mine:
        left = f"({left})"
    right = print_query(node.right)
    if _precedence(node.right) <= mine:
        right = f"({right})"
    return f"{left} {op} {right}"


# ---------------------------------------------------------------------------
# Matching

def matches(node: Node, annotations: list[EntityAnnotation]) -> bool:
    """Evaluate a query against one message's annotations.

    Seq matches when annotations with the required categories appear with
    strictly increasing start words and each constrained gap has at most
    maxWords words strictly between consecutive spans.
    """
    if isinstance(node, Atom):
        return any(a.category == node.category for a in annotations)
    if isinstance(node, And):
        return matches(node.left, annotations) and matches(node.right, annotations)
    if isinstance(node, Or):
        return matches(node.left, annotations) or matches(node.right, annotations)

    anns = sorted(annotations, key=lambda a: (a.start_word, a.end_word))

    def search(idx: int, prev: Optional[EntityAnnotation], from_pos: int) -> bool:
        if idx == len(node.atoms):
            return True
        want = node.atoms[idx].category
        gap = node.gaps[idx - 1] if idx > 0 else None
        for a in anns:
            if a.category != want:
                continue
            if prev is not None:
                if a.start_word <= prev.start_word:
                    continue
                if gap is not None and a.start_word - prev.end_word > gap:
                    continue
            if search(idx + 1, a, 0):
                return True
        return False

    return search(0, None, 0)


def predicate_from_params(corpus: Corpus, params: dict):
    """Bridge used by levels.apply_all: params carry the DSL query string and
    the prebuilt annotation index."""
    query = params.get("query", "")
    if not str(query).strip():
        from .levels import LevelError
        raise LevelError("thematic", "params require a nonempty 'query'")
    categories = tuple(params.get("categories", DEFAULT_CATEGORIES))
    ast = parse_query(str(query), categories)
    index: dict[str, list[EntityAnnotation]] = params.get("_annotations", {})
    return lambda m: matches(ast, index.get(m.id, []))
