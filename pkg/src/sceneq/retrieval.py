"""Corpus ingestion, ranking, explanation records, and the flood-area estimator."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    DuplicateImageIdError,
    EmptyCorpusError,
    MissingGsdError,
    SchemaError,
    UnknownImageError,
)
from .fol import Atom, ConjunctiveQuery, parse_atom, render_query
from .geometry import GsdMetadata, OrientedBox, PredicateContext, compute_gsd
from .inference import (
    DEFAULT_FLOOR,
    Detection,
    Scene,
    Witness,
    score_query,
)
from .vocab import Vocabulary


@dataclass(frozen=True)
class Corpus:
    scenes: tuple[Scene, ...]
    index: dict[str, int] = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        index: dict[str, int] = {}
        for pos, scene in enumerate(self.scenes):
            if scene.image_id in index:
                raise DuplicateImageIdError(f"duplicate image_id {scene.image_id!r}")
            index[scene.image_id] = pos
        object.__setattr__(self, "index", index)

    def scene(self, image_id: str) -> Scene:
        return self.scenes[self.index[image_id]]


@dataclass(frozen=True)
class RankedRun:
    """Ranking of a corpus for one query, with witnesses for nonzero hits."""

    query_id: str
    query_fol: str
    ranking: tuple[tuple[str, float], ...]
    witnesses: dict[str, Witness]
    empty_candidates: dict[str, tuple[str, ...]] = field(default_factory=dict)
    level: int | None = None

    def __post_init__(self):
        for _, probability in self.ranking:
            if not (0.0 <= probability <= 1.0):
                raise ValueError(f"probability {probability} outside [0, 1]")
        ordered = sorted(self.ranking, key=lambda e: (-e[1], e[0]))
        if list(self.ranking) != ordered:
            raise ValueError("ranking must be sorted by probability desc, image_id asc")


@dataclass(frozen=True)
class GroundTruth:
    relevant: dict[str, frozenset[str]]
    complexity_level: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for query_id, images in self.relevant.items():
            if not images:
                raise ValueError(f"empty relevance set for query {query_id!r}")
        for query_id, level in self.complexity_level.items():
            if level not in (1, 2, 3, 4, 5):
                raise ValueError(f"complexity level {level} for {query_id!r} not in 1..5")


# ---------------------------------------------------------------------------
# Corpus loading
# ---------------------------------------------------------------------------

_NUMERIC_FIELDS = ("cx", "cy", "w", "h", "theta")


def _parse_gsd(raw: dict, locus: str) -> GsdMetadata:
    try:
        return GsdMetadata(**{k: float(raw[k]) for k in raw})
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"bad GSD metadata: {exc}", locus) from exc


def _parse_detection(raw: dict, index: int, vocabulary: Vocabulary, locus: str) -> Detection:
    label = raw.get("label")
    if label not in vocabulary.object_classes:
        raise SchemaError(f"label {label!r} not in vocabulary", locus)
    confidence = raw.get("confidence")
    if not isinstance(confidence, (int, float)) or not (0.0 <= confidence <= 1.0):
        raise SchemaError(f"confidence {confidence!r} outside [0, 1]", locus)
    for name in _NUMERIC_FIELDS:
        if not isinstance(raw.get(name), (int, float)):
            raise SchemaError(f"missing or non-numeric field {name!r}", locus)
    difficulty = raw.get("difficulty", 0)
    if difficulty not in (0, 1):
        raise SchemaError(f"difficulty {difficulty!r} must be 0 or 1", locus)
    try:
        obb = OrientedBox(raw["cx"], raw["cy"], raw["w"], raw["h"], raw["theta"])
    except Exception as exc:
        raise SchemaError(f"bad box geometry: {exc}", locus) from exc
    return Detection(index, obb, label, float(confidence), int(difficulty))


def corpus_from_dict(payload: dict, vocabulary: Vocabulary | None = None) -> Corpus:
    vocabulary = vocabulary if vocabulary is not None else Vocabulary.dota()
    images = payload.get("images")
    if not isinstance(images, list):
        raise SchemaError("top-level 'images' list missing", "$")
    scenes = []
    for i, raw in enumerate(images):
        locus = f"images[{i}]"
        image_id = raw.get("image_id")
        if not image_id or not isinstance(image_id, str):
            raise SchemaError("missing image_id", locus)
        gsd = _parse_gsd(raw["gsd"], f"{locus}.gsd") if raw.get("gsd") else None
        detections = tuple(
            _parse_detection(d, j, vocabulary, f"{locus}.detections[{j}]")
            for j, d in enumerate(raw.get("detections", []))
        )
        scenes.append(Scene(image_id, detections, gsd))
    return Corpus(tuple(scenes))


def load_corpus(path: str | Path, vocabulary: Vocabulary | None = None) -> Corpus:
    """Load and validate a scene file (JSON, UTF-8)."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return corpus_from_dict(payload, vocabulary)


# ---------------------------------------------------------------------------
# Retrieval
# ---------------------------------------------------------------------------


def retrieve(
    q: ConjunctiveQuery,
    corpus: Corpus,
    k: int,
    ctx: PredicateContext | None = None,
    floor: float = DEFAULT_FLOOR,
    *,
    query_id: str = "",
    level: int | None = None,
    workers: int = 1,
) -> RankedRun:
    """Score every scene and return the top-k ranking.

    Probability descending, ties by image_id ascending; k clamps to the
    corpus size. Scoring is pure per scene, so the worker count never changes
    the result.
    """
    if not corpus.scenes:
        raise EmptyCorpusError("corpus has no scenes")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scored = list(pool.map(lambda s: score_query(q, s, ctx, floor), corpus.scenes))
    else:
        scored = [score_query(q, scene, ctx, floor) for scene in corpus.scenes]

    scored.sort(key=lambda si: (-si.probability, si.image_id))
    top = scored[: min(k, len(scored))]

    witnesses = {si.image_id: si.witness for si in top if si.witness is not None}
    empty: dict[str, tuple[str, ...]] = {}
    class_of = q.class_of
    for si in top:
        if si.probability > 0.0:
            continue
        scene = corpus.scene(si.image_id)
        present = {d.label for d in scene.detections if d.confidence >= floor}
        empty[si.image_id] = tuple(
            v for v in q.variables if class_of[v] not in present
        )
    return RankedRun(
        query_id=query_id,
        query_fol=render_query(q),
        ranking=tuple((si.image_id, si.probability) for si in top),
        witnesses=witnesses,
        empty_candidates=empty,
        level=level,
    )


def flooded_area_m2(scene: Scene, flooded_label: str) -> float:
    """Total physical footprint of boxes carrying the flooded label."""
    if scene.gsd is None:
        raise MissingGsdError(f"scene {scene.image_id!r} has no GSD metadata")
    gsd_w, gsd_h = compute_gsd(scene.gsd)
    return sum(
        d.obb.w * gsd_w * d.obb.h * gsd_h
        for d in scene.detections
        if d.label == flooded_label
    )


def explain(run: RankedRun, image_id: str, corpus: Corpus) -> dict:
    """Machine-readable explanation of one ranked image.

    For a hit: the bound detection per variable and the per-atom factor
    scores. For a zero-probability image: no witness, plus the variables
    whose candidate pools were empty.
    """
    position = next(
        (i for i, (img, _) in enumerate(run.ranking) if img == image_id), None
    )
    if position is None:
        raise UnknownImageError(f"image {image_id!r} not in run {run.query_id!r}")
    probability = run.ranking[position][1]

    record = {
        "query_id": run.query_id,
        "query_fol": run.query_fol,
        "image_id": image_id,
        "rank": position + 1,
        "probability": probability,
        "witness": None,
        "empty_candidate_variables": list(run.empty_candidates.get(image_id, ())),
    }
    witness = run.witnesses.get(image_id)
    if witness is not None:
        scene = corpus.scene(image_id)
        det_by_index = {d.index: d for d in scene.detections}
        variables = {}
        for var, det_index in sorted(witness.assignment.items()):
            det = det_by_index[det_index]
            variables[var] = {
                "detection_index": det.index,
                "label": det.label,
                "confidence": det.confidence,
                "box": {
                    "cx": det.obb.cx,
                    "cy": det.obb.cy,
                    "w": det.obb.w,
                    "h": det.obb.h,
                    "theta": det.obb.theta,
                },
            }
        record["witness"] = {
            "variables": variables,
            "atoms": [
                {"atom": atom.render(), "score": score}
                for atom, score in witness.per_atom_scores.items()
            ],
        }
    return record


# ---------------------------------------------------------------------------
# Run and ground-truth serialization
# ---------------------------------------------------------------------------


def run_to_dict(run: RankedRun) -> dict:
    return {
        "query_id": run.query_id,
        "level": run.level,
        "query_fol": run.query_fol,
        "ranking": [[image_id, probability] for image_id, probability in run.ranking],
        "witnesses": {
            image_id: {
                "assignment": dict(sorted(w.assignment.items())),
                "per_atom_scores": [
                    {"atom": atom.render(), "score": score}
                    for atom, score in w.per_atom_scores.items()
                ],
            }
            for image_id, w in run.witnesses.items()
        },
        "empty_candidates": {k: list(v) for k, v in run.empty_candidates.items()},
    }


def run_from_dict(payload: dict) -> RankedRun:
    witnesses = {}
    for image_id, raw in payload.get("witnesses", {}).items():
        per_atom: dict[Atom, float] = {}
        for entry in raw.get("per_atom_scores", []):
            per_atom[parse_atom(entry["atom"])] = entry["score"]
        witnesses[image_id] = Witness(dict(raw.get("assignment", {})), per_atom)
    return RankedRun(
        query_id=payload["query_id"],
        query_fol=payload.get("query_fol", ""),
        ranking=tuple((img, p) for img, p in payload.get("ranking", [])),
        witnesses=witnesses,
        empty_candidates={
            k: tuple(v) for k, v in payload.get("empty_candidates", {}).items()
        },
        level=payload.get("level"),
    )


def load_queries(path: str | Path, *, as_fol: bool = False, vocabulary=None):
    """Read a query file: query_id <TAB> level <TAB> text-or-FOL per line."""
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise SchemaError("expected query_id<TAB>level<TAB>query", f"line {lineno}")
            query_id, level_text, body = parts
            try:
                level = int(level_text)
            except ValueError:
                raise SchemaError(f"bad level {level_text!r}", f"line {lineno}")
            entries.append((query_id, level, body, as_fol))
    return entries


def load_ground_truth(path: str | Path, levels: dict[str, int] | None = None) -> GroundTruth:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    relevant = {qid: frozenset(ids) for qid, ids in raw.items()}
    return GroundTruth(relevant=relevant, complexity_level=dict(levels or {}))
