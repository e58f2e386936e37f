"""Probabilistic scoring of conjunctive queries against detection scenes.

Conjunction multiplies factor probabilities; the choice among candidate
assignments takes the maximum. Scoring factorizes over clause groups:
assignments are injective within a group (two variables never bind the same
detection) while detections may be shared across groups, which is what makes
the per-group product decomposition exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

from . import kernels
from .errors import BudgetExceededError, UnsupportedEntityError
from .fol import (
    Atom,
    ClassAtom,
    ClauseGroup,
    ConjunctiveQuery,
    IsolatedAtom,
    MetricAtom,
    clause_groups,
)
from .geometry import (
    GsdMetadata,
    OrientedBox,
    PredicateContext,
    RCC_NAMES,
    eval_directional,
    eval_facing,
    eval_is_close,
    eval_is_different,
    eval_metric_predicate,
    eval_rcc,
)

DEFAULT_FLOOR = 0.05
NAIVE_BUDGET = 1_000_000

_DIRECTIONAL = {"left_of", "right_of", "is_above", "is_below"}
_FACING = {"facing_same", "facing_opposite"}
_RCC = set(RCC_NAMES)


@dataclass(frozen=True)
class Detection:
    """One detected object: oriented box, class label, detector confidence."""

    index: int
    obb: OrientedBox
    label: str
    confidence: float
    difficulty: int = 0

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence must lie in [0, 1], got {self.confidence}")
        if self.difficulty not in (0, 1):
            raise ValueError(f"difficulty must be 0 or 1, got {self.difficulty}")


@dataclass(frozen=True)
class Scene:
    """All detections of one image, with optional acquisition metadata."""

    image_id: str
    detections: tuple[Detection, ...]
    gsd: GsdMetadata | None = None

    def __post_init__(self):
        if not self.image_id:
            raise ValueError("image_id must be non-empty")
        object.__setattr__(
            self, "detections", tuple(sorted(self.detections, key=lambda d: d.index))
        )
        indices = [d.index for d in self.detections]
        if len(set(indices)) != len(indices):
            raise ValueError(f"duplicate detection indices in scene {self.image_id!r}")


@dataclass(frozen=True)
class Witness:
    """Argmax assignment of variables to detections plus the per-atom factors."""

    assignment: dict[str, int]
    per_atom_scores: dict[Atom, float]


@dataclass(frozen=True)
class ScoredImage:
    image_id: str
    probability: float
    witness: Witness | None
    hypotheses_evaluated: int


def _effective_ctx(ctx: PredicateContext | None, scene: Scene) -> PredicateContext:
    ctx = ctx if ctx is not None else PredicateContext()
    return ctx.with_gsd(scene.gsd)


def isolation_value(det: Detection, scene: Scene, ctx: PredicateContext) -> float:
    """1 minus the closeness to the nearest other detection; 1.0 for a lone object."""
    best = 0.0
    for other in scene.detections:
        if other.index == det.index:
            continue
        v = eval_is_close(det.obb, other.obb, ctx)
        if v > best:
            best = v
    return 1.0 - best


def _pair_value(name: str, da: Detection, db: Detection, ctx: PredicateContext) -> float:
    if name in _DIRECTIONAL:
        return eval_directional(name, da.obb, db.obb)
    if name == "is_close":
        return eval_is_close(da.obb, db.obb, ctx)
    if name in _FACING:
        return eval_facing(name, da.obb, db.obb)
    if name == "is_different":
        return eval_is_different(da.index, db.index)
    if name in _RCC:
        return eval_rcc(name, da.obb, db.obb, ctx)
    raise UnsupportedEntityError(name)


def atom_value(
    atom: Atom,
    scene: Scene,
    binding: dict[str, Detection],
    ctx: PredicateContext,
) -> float:
    """Evaluate one atom under a variable binding."""
    if isinstance(atom, ClassAtom):
        return binding[atom.var].confidence
    if isinstance(atom, IsolatedAtom):
        return isolation_value(binding[atom.var], scene, ctx)
    if isinstance(atom, MetricAtom):
        boxes = tuple(binding[v].obb for v in atom.args)
        return eval_metric_predicate(atom.name, boxes, atom.threshold, ctx)
    a, b = (binding[v] for v in atom.args)
    return _pair_value(atom.name, a, b, ctx)


# ---------------------------------------------------------------------------
# Conditional computation and group scoring
# ---------------------------------------------------------------------------


def candidate_sets(
    group: ClauseGroup, scene: Scene, floor: float = DEFAULT_FLOOR
) -> dict[str, list[int]]:
    """Per-variable candidate detections: matching class, confidence >= floor."""
    classes = {a.var: a.name for a in group.atoms if isinstance(a, ClassAtom)}
    return {
        v: [
            d.index
            for d in scene.detections
            if d.label == classes[v] and d.confidence >= floor
        ]
        for v in group.variables
    }


def _build_factors(group, scene, ctx, floor):
    """Factor tables for the enumeration kernel.

    Unary-ish atoms (class confidence, Isolated markers, one-variable metric
    predicates, and degenerate relations over a repeated variable) fold into
    per-candidate weight vectors; every two-variable atom becomes a pairwise
    matrix oriented from the earlier to the later variable in group order.
    """
    cands = candidate_sets(group, scene, floor)
    order = group.variables
    depth = {v: i for i, v in enumerate(order)}
    pos_of = {d.index: p for p, d in enumerate(scene.detections)}
    dets = scene.detections

    cand_pos = [[pos_of[i] for i in cands[v]] for v in order]
    unary = [[1.0] * len(c) for c in cand_pos]
    edges = []

    def fold_unary(var: str, fn) -> None:
        d = depth[var]
        col = unary[d]
        for p, det_pos in enumerate(cand_pos[d]):
            col[p] *= fn(dets[det_pos])

    for atom in group.atoms:
        if isinstance(atom, ClassAtom):
            fold_unary(atom.var, lambda det: det.confidence)
        elif isinstance(atom, IsolatedAtom):
            fold_unary(atom.var, lambda det: isolation_value(det, scene, ctx))
        elif isinstance(atom, MetricAtom) and len(atom.args) == 1:
            fold_unary(
                atom.args[0],
                lambda det: eval_metric_predicate(atom.name, (det.obb,), atom.threshold, ctx),
            )
        else:
            a0, a1 = atom.args
            if a0 == a1:
                fold_unary(a0, lambda det: _two_var_value(atom, det, det, ctx))
                continue
            d0, d1 = depth[a0], depth[a1]
            if d0 < d1:
                src, dst, flipped = d0, d1, False
            else:
                src, dst, flipped = d1, d0, True
            mat = []
            for sp in cand_pos[src]:
                row = []
                for dp in cand_pos[dst]:
                    first, second = (dp, sp) if flipped else (sp, dp)
                    row.append(_two_var_value(atom, dets[first], dets[second], ctx))
                mat.append(row)
            edges.append((src, dst, mat))

    return cands, cand_pos, unary, edges


def _two_var_value(atom: Atom, da: Detection, db: Detection, ctx: PredicateContext) -> float:
    if isinstance(atom, MetricAtom):
        return eval_metric_predicate(atom.name, (da.obb, db.obb), atom.threshold, ctx)
    return _pair_value(atom.name, da, db, ctx)


def score_group(
    group: ClauseGroup,
    scene: Scene,
    ctx: PredicateContext | None = None,
    floor: float = DEFAULT_FLOOR,
):
    """Score one clause group.

    Returns (score, witness_part, count): the max product over injective
    assignments, the argmax as (assignment, per-atom factors) or None when no
    assignment exists, and the number of complete assignments enumerated.
    Ties resolve to the lexicographically smallest detection-index tuple.
    """
    ctx = _effective_ctx(ctx, scene)
    cands, cand_pos, unary, edges = _build_factors(group, scene, ctx, floor)
    score, positions, count = kernels.max_injective_product(
        cand_pos, unary, edges, len(scene.detections)
    )
    if positions is None:
        return 0.0, None, count

    dets = scene.detections
    assignment = {
        var: dets[cand_pos[d][positions[d]]].index for d, var in enumerate(group.variables)
    }
    binding = {var: dets[cand_pos[d][positions[d]]] for d, var in enumerate(group.variables)}
    per_atom = {atom: atom_value(atom, scene, binding, ctx) for atom in group.atoms}
    return score, (assignment, per_atom), count


def score_query(
    q: ConjunctiveQuery,
    scene: Scene,
    ctx: PredicateContext | None = None,
    floor: float = DEFAULT_FLOOR,
) -> ScoredImage:
    """Factorized scoring: the product of independent clause-group scores."""
    probability = 1.0
    hypotheses = 0
    assignment: dict[str, int] = {}
    per_atom: dict[Atom, float] = {}
    for group in clause_groups(q):
        s, witness_part, count = score_group(group, scene, ctx, floor)
        probability *= s
        hypotheses += count
        if witness_part is not None:
            assignment.update(witness_part[0])
            per_atom.update(witness_part[1])
    witness = Witness(assignment, per_atom) if probability > 0.0 else None
    return ScoredImage(scene.image_id, probability, witness, hypotheses)


# ---------------------------------------------------------------------------
# Brute-force oracle and hypothesis counting
# ---------------------------------------------------------------------------


def naive_score(
    q: ConjunctiveQuery,
    scene: Scene,
    ctx: PredicateContext | None = None,
    floor: float = DEFAULT_FLOOR,
    budget: int = NAIVE_BUDGET,
) -> float:
    """Exhaustive joint enumeration across all variables at once.

    Independent of the factorized path: no factor tables, no kernel; every
    atom is re-evaluated per joint assignment. Injectivity applies within
    each clause group; sharing across groups is allowed.
    """
    ctx = _effective_ctx(ctx, scene)
    class_of = q.class_of
    cands = {
        v: [
            d
            for d in scene.detections
            if d.label == class_of[v] and d.confidence >= floor
        ]
        for v in q.variables
    }
    total = 1
    for v in q.variables:
        total *= len(cands[v])
    if total > budget:
        raise BudgetExceededError(
            f"naive enumeration would visit {total} joint assignments (budget {budget})"
        )
    if total == 0:
        return 0.0

    scopes = [g.variables for g in clause_groups(q)]
    best = 0.0
    for combo in itertools.product(*(cands[v] for v in q.variables)):
        binding = dict(zip(q.variables, combo))
        if any(
            len({binding[v].index for v in scope}) != len(scope) for scope in scopes
        ):
            continue
        value = 1.0
        for atom in q.atoms:
            value *= atom_value(atom, scene, binding, ctx)
        if value > best:
            best = value
    return best


def hypothesis_count(
    q: ConjunctiveQuery, scene: Scene, floor: float = DEFAULT_FLOOR
) -> tuple[int, int]:
    """(factorized, naive_exponential) hypothesis counts.

    The naive count is N^M over all detections and query variables. The
    factorized count sums, per clause group, the plain product of candidate
    pool sizes (no injectivity), matching the conditional-computation
    arithmetic rather than the enumerated-assignment count.
    """
    n = len(scene.detections)
    m = len(q.variables)
    naive = n**m
    factorized = 0
    for group in clause_groups(q):
        cands = candidate_sets(group, scene, floor)
        product = 1
        for v in group.variables:
            product *= len(cands[v])
        factorized += product
    return factorized, naive


def iter_assignment_values(
    group: ClauseGroup,
    scene: Scene,
    ctx: PredicateContext | None = None,
    floor: float = DEFAULT_FLOOR,
) -> Iterator[tuple[dict[str, int], float]]:
    """Yield (assignment, product) for every injective assignment of a group.

    Plain recursive enumeration with direct atom evaluation; used for
    explanation drill-down and as a cross-check of the kernel path.
    """
    ctx = _effective_ctx(ctx, scene)
    cands = candidate_sets(group, scene, floor)
    order = group.variables
    det_by_index = {d.index: d for d in scene.detections}

    def rec(depth: int, binding: dict[str, Detection]):
        if depth == len(order):
            value = 1.0
            for atom in group.atoms:
                value *= atom_value(atom, scene, binding, ctx)
            yield {v: det.index for v, det in binding.items()}, value
            return
        var = order[depth]
        for idx in cands[var]:
            det = det_by_index[idx]
            if any(det.index == b.index for b in binding.values()):
                continue
            binding[var] = det
            yield from rec(depth + 1, binding)
            del binding[var]

    yield from rec(0, {})
