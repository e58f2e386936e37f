"""Conjunctive first-order query language: grammar, normalization, factorization.

The language is a conjunction of predicate atoms:

    query := atom ("AND" atom)*
    atom  := name "(" arg ("," arg)* ")"

Arguments are variables, except that a trailing numeric literal marks a
metric predicate (physical threshold). The AND keyword is case-insensitive;
names and variables normalize to lowercase snake_case. Queries are purely
existential conjunctions: no disjunction, negation, or quantifier
alternation, the lone exception being the unary Isolated marker.
"""

from __future__ import annotations

import itertools
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Union

from .errors import (
    ArityError,
    EmptyInputError,
    InvalidQueryError,
    QuerySyntaxError,
    TooManyVariablesError,
    UnsupportedEntityError,
)
from .vocab import (
    KNOWN_ATOMIC_RELATIONS,
    KNOWN_CLASSES,
    MACRO_RELATIONS,
    METRIC_ARITY,
    SYMMETRIC_RELATIONS,
    Vocabulary,
)

# ---------------------------------------------------------------------------
# Abstract syntax
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassAtom:
    """Unary predicate asserting a variable's object class: ship(a)."""

    name: str
    var: str

    def render(self) -> str:
        return f"{self.name}({self.var})"


@dataclass(frozen=True)
class RelationAtom:
    """Named relation over variables: left_of(a, b) or, pre-normalization, aligned(a, b, c)."""

    name: str
    args: tuple[str, ...]

    def render(self) -> str:
        return f"{self.name}({', '.join(self.args)})"


@dataclass(frozen=True)
class MetricAtom:
    """Relation with a trailing physical threshold: is_close_meters(a, b, 50)."""

    name: str
    args: tuple[str, ...]
    threshold: float

    def __post_init__(self):
        if not math.isfinite(self.threshold) or self.threshold <= 0:
            raise InvalidQueryError(
                f"metric threshold for {self.name} must be finite and positive, "
                f"got {self.threshold!r}"
            )

    def render(self) -> str:
        t = self.threshold
        shown = str(int(t)) if t == int(t) else repr(t)
        return f"{self.name}({', '.join(self.args)}, {shown})"


@dataclass(frozen=True)
class IsolatedAtom:
    """Marker: the bound object sits apart from every other detection in the scene."""

    var: str

    def render(self) -> str:
        return f"isolated_from({self.var})"


Atom = Union[ClassAtom, RelationAtom, MetricAtom, IsolatedAtom]


def atom_vars(atom: Atom) -> tuple[str, ...]:
    if isinstance(atom, (ClassAtom, IsolatedAtom)):
        return (atom.var,)
    return atom.args


@dataclass(frozen=True)
class ConjunctiveQuery:
    """A validated conjunction of atoms.

    Invariants enforced at construction: the atom list is non-empty, and
    every variable is bound by exactly one class atom (relation, metric, and
    isolated atoms may only mention bound variables).
    """

    atoms: tuple[Atom, ...]
    variables: tuple[str, ...] = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        atoms = tuple(self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if not atoms:
            raise InvalidQueryError("query has no atoms")
        seen: dict[str, None] = {}
        for atom in atoms:
            for v in atom_vars(atom):
                seen.setdefault(v, None)
        object.__setattr__(self, "variables", tuple(seen))

        bound: dict[str, str] = {}
        for atom in atoms:
            if isinstance(atom, ClassAtom):
                if atom.var in bound:
                    raise InvalidQueryError(
                        f"variable {atom.var!r} is bound by more than one class atom"
                    )
                bound[atom.var] = atom.name
        for atom in atoms:
            if isinstance(atom, ClassAtom):
                continue
            for v in atom_vars(atom):
                if v not in bound:
                    raise InvalidQueryError(
                        f"variable {v!r} in {atom.render()} has no class atom"
                    )

    @property
    def class_of(self) -> dict[str, str]:
        """Map each variable to its declared object class."""
        return {a.var: a.name for a in self.atoms if isinstance(a, ClassAtom)}


# ---------------------------------------------------------------------------
# Tokenizer and parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)"
    r"|(?P<lparen>\()"
    r"|(?P<rparen>\))"
    r"|(?P<comma>,)"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # name | number | lparen | rparen | comma | and | eof
    value: str
    pos: int


def _snake(name: str) -> str:
    return re.sub(r"(?<=[a-z0-9])(?=[A-Z])", "_", name).lower()


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise QuerySyntaxError(
                f"unexpected character {text[i]!r}",
                position=i,
                expected="identifier, number, '(', ')' or ','",
            )
        kind = m.lastgroup or ""
        value = m.group()
        if kind == "name" and value.lower() == "and":
            kind = "and"
        tokens.append(_Token(kind, value, i))
        i = m.end()
    tokens.append(_Token("eof", "", n))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise QuerySyntaxError(
                f"unexpected {tok.value!r}" if tok.kind != "eof" else "unexpected end of input",
                position=tok.pos,
                expected=what,
            )
        return self.advance()

    def parse(self) -> list[Atom]:
        atoms = [self.atom()]
        while self.peek().kind == "and":
            self.advance()
            atoms.append(self.atom())
        self.expect("eof", "'AND' or end of input")
        return atoms

    def atom(self) -> Atom:
        name_tok = self.expect("name", "predicate name")
        self.expect("lparen", "'('")
        args: list[_Token] = [self.argument()]
        while self.peek().kind == "comma":
            self.advance()
            args.append(self.argument())
        self.expect("rparen", "')'")
        return _classify_atom(name_tok, args)

    def argument(self) -> _Token:
        tok = self.peek()
        if tok.kind not in ("name", "number"):
            raise QuerySyntaxError(
                f"unexpected {tok.value!r}" if tok.kind != "eof" else "unexpected end of input",
                position=tok.pos,
                expected="variable or numeric threshold",
            )
        return self.advance()


def _classify_atom(name_tok: _Token, args: list[_Token]) -> Atom:
    name = _snake(name_tok.value)
    threshold: float | None = None
    if args and args[-1].kind == "number":
        threshold = float(args[-1].value)
        args = args[:-1]
    for tok in args:
        if tok.kind == "number":
            raise QuerySyntaxError(
                f"unexpected number {tok.value!r}",
                position=tok.pos,
                expected="variable (numbers may only appear as the final argument)",
            )
    vars_ = tuple(tok.value.lower() for tok in args)

    if name in METRIC_ARITY:
        want = METRIC_ARITY[name]
        if threshold is None:
            raise ArityError(f"{name} requires a trailing numeric threshold")
        if len(vars_) != want:
            raise ArityError(f"{name} takes {want} variable(s), got {len(vars_)}")
        return MetricAtom(name, vars_, threshold)
    if threshold is not None:
        if not vars_:
            raise ArityError(f"{name} has a threshold but no variables")
        return MetricAtom(name, vars_, threshold)
    if name == "isolated_from":
        if len(vars_) != 1:
            raise ArityError(f"isolated_from takes 1 variable, got {len(vars_)}")
        return IsolatedAtom(vars_[0])
    if name in KNOWN_ATOMIC_RELATIONS:
        if len(vars_) != 2:
            raise ArityError(f"relation {name} takes 2 variables, got {len(vars_)}")
        return RelationAtom(name, vars_)
    if name in MACRO_RELATIONS:
        if len(vars_) < 2:
            raise ArityError(f"macro relation {name} takes at least 2 variables, got {len(vars_)}")
        return RelationAtom(name, vars_)
    if name in KNOWN_CLASSES:
        if len(vars_) != 1:
            raise ArityError(f"class predicate {name} takes 1 variable, got {len(vars_)}")
        return ClassAtom(name, vars_[0])
    # Unknown name: infer the kind from arity. Vocabulary gating happens in
    # normalize(), which is the user-facing rejection path.
    if len(vars_) == 1:
        return ClassAtom(name, vars_[0])
    return RelationAtom(name, vars_)


def parse_query(text: str) -> ConjunctiveQuery:
    """Parse query text into a validated AST; atoms keep their textual order."""
    if not text or not text.strip():
        raise QuerySyntaxError("empty query", position=0, expected="at least one atom")
    return ConjunctiveQuery(tuple(_Parser(_tokenize(text)).parse()))


def parse_atom(text: str) -> Atom:
    """Parse a single atom, skipping query-level binding validation."""
    parser = _Parser(_tokenize(text))
    atom = parser.atom()
    parser.expect("eof", "end of input")
    return atom


def render_query(q: ConjunctiveQuery) -> str:
    """Canonical serialization; parse(render(q)) is structurally identical to q."""
    return " AND ".join(a.render() for a in q.atoms)


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------


def _expand_macro(name: str, args: tuple[str, ...]) -> list[Atom]:
    if name == "isolated_from":
        if len(args) != 1:
            raise ArityError(f"isolated_from takes 1 variable, got {len(args)}")
        return [IsolatedAtom(args[0])]
    if len(args) < 2:
        raise ArityError(f"macro relation {name} takes at least 2 variables, got {len(args)}")
    if name == "aligned":
        return [RelationAtom("left_of", (a, b)) for a, b in itertools.pairwise(args)]
    if name == "in_column":
        return [RelationAtom("is_above", (a, b)) for a, b in itertools.pairwise(args)]
    if name == "clustered":
        return [RelationAtom("is_close", pair) for pair in itertools.combinations(args, 2)]
    raise UnsupportedEntityError(name)


def normalize(q: ConjunctiveQuery, v: Vocabulary) -> ConjunctiveQuery:
    """Validate names against the vocabulary and expand macro relations in place.

    The result contains only class atoms, atomic binary relations, metric
    atoms, and Isolated markers, with aliases canonicalized. Idempotent.
    """
    out: list[Atom] = []
    for atom in q.atoms:
        if isinstance(atom, ClassAtom):
            if atom.name not in v.object_classes:
                raise UnsupportedEntityError(atom.name)
            out.append(atom)
        elif isinstance(atom, IsolatedAtom):
            out.append(atom)
        elif isinstance(atom, MetricAtom):
            if atom.name not in v.metric_relations:
                raise UnsupportedEntityError(atom.name)
            want = METRIC_ARITY.get(atom.name, len(atom.args))
            if len(atom.args) != want:
                raise ArityError(f"{atom.name} takes {want} variable(s), got {len(atom.args)}")
            out.append(atom)
        else:
            name = v.resolve_relation(atom.name)
            if name in v.atomic_relations:
                if len(atom.args) != 2:
                    raise ArityError(f"relation {name} takes 2 variables, got {len(atom.args)}")
                out.append(RelationAtom(name, atom.args))
            elif name in v.macro_relations:
                out.extend(_expand_macro(name, atom.args))
            else:
                raise UnsupportedEntityError(atom.name)
    return ConjunctiveQuery(tuple(out))


# ---------------------------------------------------------------------------
# Clause-group factorization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClauseGroup:
    """A connected component of the variable co-occurrence graph.

    Groups partition the query's atoms; each can be scored independently and
    the group scores multiply.
    """

    group_id: int
    variables: tuple[str, ...]  # sorted
    atoms: tuple[Atom, ...]  # query order


def clause_groups(q: ConjunctiveQuery) -> list[ClauseGroup]:
    """Split a query into independently scorable groups, ordered by smallest variable."""
    parent = {v: v for v in q.variables}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for atom in q.atoms:
        vs = atom_vars(atom)
        for other in vs[1:]:
            ra, rb = find(vs[0]), find(other)
            if ra != rb:
                parent[rb] = ra

    members: dict[str, list[str]] = {}
    for v in q.variables:
        members.setdefault(find(v), []).append(v)
    roots = sorted(members, key=lambda r: min(members[r]))
    group_index = {root: i for i, root in enumerate(roots)}

    grouped_atoms: dict[str, list[Atom]] = {root: [] for root in roots}
    for atom in q.atoms:
        grouped_atoms[find(atom_vars(atom)[0])].append(atom)

    return [
        ClauseGroup(
            group_id=group_index[root],
            variables=tuple(sorted(members[root])),
            atoms=tuple(grouped_atoms[root]),
        )
        for root in roots
    ]


# ---------------------------------------------------------------------------
# Logical equivalence
# ---------------------------------------------------------------------------

MAX_VARIABLES = 12
DEFAULT_BIJECTION_CAP = 1_000_000


def _canonical_atom(atom: Atom, mapping: dict[str, str]) -> tuple:
    if isinstance(atom, ClassAtom):
        return ("class", atom.name, mapping[atom.var])
    if isinstance(atom, IsolatedAtom):
        return ("isolated", mapping[atom.var])
    args = tuple(mapping[v] for v in atom.args)
    if atom.name in SYMMETRIC_RELATIONS:
        args = tuple(sorted(args))
    if isinstance(atom, MetricAtom):
        return ("metric", atom.name, args, atom.threshold)
    return ("rel", atom.name, args)


def _canonical_multiset(atoms: tuple[Atom, ...], mapping: dict[str, str]) -> Counter:
    return Counter(_canonical_atom(a, mapping) for a in atoms)


def logically_equivalent(
    a: ConjunctiveQuery,
    b: ConjunctiveQuery,
    *,
    max_bijections: int = DEFAULT_BIJECTION_CAP,
) -> bool:
    """True iff some class-respecting variable bijection makes the atom multisets equal.

    Symmetric relations compare with sorted arguments. Expects normalized
    queries; macro atoms compare literally.
    """
    class_a, class_b = a.class_of, b.class_of
    if Counter(class_a.values()) != Counter(class_b.values()):
        return False
    if len(a.atoms) != len(b.atoms):
        return False
    if len(a.variables) > MAX_VARIABLES or len(b.variables) > MAX_VARIABLES:
        raise TooManyVariablesError(
            f"equivalence search supports at most {MAX_VARIABLES} variables"
        )

    by_class_a: dict[str, list[str]] = {}
    for v in sorted(class_a):
        by_class_a.setdefault(class_a[v], []).append(v)
    by_class_b: dict[str, list[str]] = {}
    for v in sorted(class_b):
        by_class_b.setdefault(class_b[v], []).append(v)

    total = 1
    for cls, vs in by_class_a.items():
        total *= math.factorial(len(vs))
        if total > max_bijections:
            raise TooManyVariablesError(
                f"class-respecting bijection space exceeds cap of {max_bijections}"
            )

    target = _canonical_multiset(b.atoms, {v: v for v in b.variables})
    classes = sorted(by_class_a)
    perm_spaces = [itertools.permutations(by_class_b[c]) for c in classes]
    for choice in itertools.product(*perm_spaces):
        mapping: dict[str, str] = {}
        for cls, perm in zip(classes, choice):
            mapping.update(zip(by_class_a[cls], perm))
        if _canonical_multiset(a.atoms, mapping) == target:
            return True
    return False


# ---------------------------------------------------------------------------
# Token-level BLEU
# ---------------------------------------------------------------------------

_BLEU_TOKEN_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|\d+(?:\.\d+)?|[(),]")


def bleu_tokens(text: str) -> list[str]:
    """Lowercased token stream: identifiers, numbers, parentheses, commas."""
    return [t.lower() for t in _BLEU_TOKEN_RE.findall(text)]


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def fol_bleu(candidate: str, reference: str) -> float:
    """BLEU-4 over token streams, uniform weights, add-one smoothing on every order.

    Identical streams score exactly 1.0; fully disjoint streams land on a
    small positive smoothing floor.
    """
    cand = bleu_tokens(candidate)
    ref = bleu_tokens(reference)
    if not cand or not ref:
        raise EmptyInputError("fol_bleu operands must contain at least one token")
    log_sum = 0.0
    for n in range(1, 5):
        total = max(len(cand) - n + 1, 0)
        if total == 0:
            matched = 0
        else:
            ref_counts = _ngrams(ref, n)
            matched = sum(min(c, ref_counts[g]) for g, c in _ngrams(cand, n).items())
        log_sum += 0.25 * math.log((matched + 1) / (total + 1))
    brevity = 1.0 if len(cand) >= len(ref) else math.exp(1 - len(ref) / len(cand))
    return brevity * math.exp(log_sum)


# ---------------------------------------------------------------------------
# Complexity counts
# ---------------------------------------------------------------------------


def complexity_counts(q: ConjunctiveQuery) -> tuple[int, int, int]:
    """(number of variables, distinct object classes, binary + metric atom count)."""
    n_objects = len(q.variables)
    n_types = len({a.name for a in q.atoms if isinstance(a, ClassAtom)})
    n_predicates = sum(1 for a in q.atoms if isinstance(a, (RelationAtom, MetricAtom)))
    return n_objects, n_types, n_predicates
