"""Seeded synthetic scenes and queries for benchmarks and randomized checks."""

from __future__ import annotations

import random

from .fol import (
    Atom,
    ClassAtom,
    ConjunctiveQuery,
    IsolatedAtom,
    MetricAtom,
    RelationAtom,
    normalize,
)
from .geometry import GsdMetadata, OrientedBox
from .inference import Detection, Scene
from .retrieval import Corpus
from .vocab import Vocabulary

_SCENE_CLASSES = ("ship", "plane", "harbor", "bridge", "storage_tank", "truck")

_BINARY_POOL = (
    "left_of",
    "right_of",
    "is_above",
    "is_below",
    "is_close",
    "facing_same",
    "facing_opposite",
    "is_different",
    "ec",
    "dc",
    "po",
    "ntpp",
)

_MACRO_POOL = ("aligned", "in_column", "clustered")


def random_box(rng: random.Random, span: float = 200.0) -> OrientedBox:
    return OrientedBox(
        cx=rng.uniform(0.0, span),
        cy=rng.uniform(0.0, span),
        w=rng.uniform(2.0, 40.0),
        h=rng.uniform(2.0, 40.0),
        theta=rng.uniform(-3.1, 3.1),
    )


def random_scene(
    rng: random.Random,
    image_id: str,
    max_detections: int = 6,
    classes: tuple[str, ...] = _SCENE_CLASSES,
    with_gsd: bool = False,
) -> Scene:
    n = rng.randint(1, max_detections)
    detections = tuple(
        Detection(
            index=i,
            obb=random_box(rng),
            label=rng.choice(classes),
            confidence=round(rng.uniform(0.05, 1.0), 3),
            difficulty=rng.randint(0, 1),
        )
        for i in range(n)
    )
    gsd = GsdMetadata(gsd_w_m_per_px=0.5, gsd_h_m_per_px=0.4) if with_gsd else None
    return Scene(image_id, detections, gsd)


def random_query(
    rng: random.Random,
    vocabulary: Vocabulary,
    max_vars: int = 4,
    max_atoms: int = 5,
    classes: tuple[str, ...] = _SCENE_CLASSES,
    allow_isolated: bool = True,
    allow_metric: bool = True,
) -> ConjunctiveQuery:
    """Random normalized query: class atoms for every variable plus a mix of
    binary, metric, macro, and isolation atoms over them."""
    n_vars = rng.randint(1, max_vars)
    variables = [f"v{i}" for i in range(n_vars)]
    atoms: list[Atom] = [ClassAtom(rng.choice(classes), v) for v in variables]

    budget = max_atoms - n_vars
    while budget > 0:
        roll = rng.random()
        if n_vars >= 2 and roll < 0.70:
            a, b = rng.sample(variables, 2)
            name = rng.choice(_BINARY_POOL)
            atoms.append(RelationAtom(name, (a, b)))
        elif n_vars >= 2 and roll < 0.80:
            size = rng.randint(2, min(3, n_vars))
            members = tuple(rng.sample(variables, size))
            atoms.append(RelationAtom(rng.choice(_MACRO_POOL), members))
        elif allow_metric and roll < 0.90:
            if n_vars >= 2 and rng.random() < 0.5:
                a, b = rng.sample(variables, 2)
                atoms.append(MetricAtom("is_close_meters", (a, b), rng.uniform(1.0, 80.0)))
            else:
                atoms.append(
                    MetricAtom("is_square_meters", (rng.choice(variables),), rng.uniform(1.0, 200.0))
                )
        elif allow_isolated:
            atoms.append(IsolatedAtom(rng.choice(variables)))
        budget -= 1
    return normalize(ConjunctiveQuery(tuple(atoms)), vocabulary)


def random_instances(
    seed: int,
    count: int,
    *,
    max_detections: int = 6,
    max_vars: int = 4,
    max_atoms: int = 5,
    allow_isolated: bool = True,
):
    """Yield (query, scene) pairs small enough for the naive oracle."""
    rng = random.Random(seed)
    vocabulary = Vocabulary.dota()
    for i in range(count):
        query = random_query(
            rng,
            vocabulary,
            max_vars=max_vars,
            max_atoms=max_atoms,
            allow_isolated=allow_isolated,
        )
        scene = random_scene(rng, f"img_{i:05d}", max_detections=max_detections, with_gsd=True)
        yield query, scene


# ---------------------------------------------------------------------------
# Benchmark fixtures
# ---------------------------------------------------------------------------

_LEVEL_QUERIES = (
    (1, "a storage tank to the left of another storage tank"),
    (2, "a bridge to the left of a storage tank and two ships close to each other"),
    (3, "a bridge to the left of a storage tank and four storage tanks in column"),
    (4, "four planes aligned and an isolated roundabout"),
    (5, "three tennis courts aligned and two tennis courts close to each other "
        "and a soccer ball field inside a ground track field"),
)


def bench_fixture(seed: int, n_scenes: int = 20, max_detections: int = 30):
    """(corpus, queries) for the benchmark CLI when no files are supplied.

    Detections are drawn from the classes the level queries mention, so the
    per-clause candidate pools (and thus enumeration depth) grow with
    max_detections.
    """
    from .translate import offline_translate

    rng = random.Random(seed)
    vocabulary = Vocabulary.dota()
    classes = (
        "storage_tank",
        "bridge",
        "ship",
        "plane",
        "roundabout",
        "tennis_court",
        "soccer_ball_field",
        "ground_track_field",
    )
    scenes = []
    for i in range(n_scenes):
        n = rng.randint(max(4, max_detections // 2), max_detections)
        detections = tuple(
            Detection(
                index=j,
                obb=random_box(rng, span=800.0),
                label=rng.choice(classes),
                confidence=round(rng.uniform(0.05, 1.0), 3),
                difficulty=rng.randint(0, 1),
            )
            for j in range(n)
        )
        scenes.append(Scene(f"bench_{i:04d}", detections))
    queries = [
        (f"L{level}", level, offline_translate(text, vocabulary))
        for level, text in _LEVEL_QUERIES
    ]
    return Corpus(tuple(scenes)), queries
