"""Vocabulary profiles: object classes, spatial relations, macros, and aliases."""

from __future__ import annotations

from dataclasses import dataclass, field

# Object classes recognized by the detector-facing pipeline.
DOTA_CLASSES = frozenset(
    {
        "vehicle",
        "truck",
        "car",
        "bridge",
        "ship",
        "roundabout",
        "plane",
        "storage_tank",
        "baseball_diamond",
        "basketball_court",
        "ground_track_field",
        "harbor",
        "soccer_ball_field",
        "swimming_pool",
        "tennis_court",
    }
)

FLOOD_EXTRA_CLASSES = frozenset({"building", "road_flooded"})

DIRECTIONAL_RELATIONS = frozenset({"left_of", "right_of", "is_above", "is_below"})
RCC_RELATIONS = frozenset({"dc", "ec", "po", "tpp", "ntpp", "eq", "tppi", "ntppi"})
FACING_RELATIONS = frozenset({"facing_same", "facing_opposite"})
ATOMIC_RELATIONS = (
    DIRECTIONAL_RELATIONS | RCC_RELATIONS | FACING_RELATIONS | {"is_close", "is_different"}
)

# Metric predicates carry a trailing numeric threshold; value is the variable arity.
METRIC_ARITY = {"is_close_meters": 2, "is_square_meters": 1}

# Macro relations expand to chains/cliques of atomic predicates during normalization.
MACRO_RELATIONS = frozenset({"aligned", "in_column", "clustered", "isolated_from"})

# Surface spellings canonicalized during normalization.
RELATION_ALIASES = {"is_on": "ntpp", "externally_connected": "ec"}

# Relations whose argument order is immaterial; equivalence checking sorts their args.
SYMMETRIC_RELATIONS = frozenset(
    {
        "is_close",
        "is_different",
        "is_close_meters",
        "facing_same",
        "facing_opposite",
        "ec",
        "po",
        "eq",
    }
)

# Names the parser recognizes for arity checking, across all profiles.
KNOWN_CLASSES = DOTA_CLASSES | FLOOD_EXTRA_CLASSES
KNOWN_ATOMIC_RELATIONS = ATOMIC_RELATIONS | frozenset(RELATION_ALIASES)


@dataclass(frozen=True)
class Vocabulary:
    """The set of entities and relations a query may mention."""

    object_classes: frozenset[str]
    atomic_relations: frozenset[str] = ATOMIC_RELATIONS
    macro_relations: frozenset[str] = MACRO_RELATIONS
    metric_relations: frozenset[str] = frozenset(METRIC_ARITY)
    aliases: dict[str, str] = field(default_factory=lambda: dict(RELATION_ALIASES))

    def __post_init__(self):
        overlap = self.macro_relations & self.atomic_relations
        if overlap:
            raise ValueError(f"macro relations shadow atomic relations: {sorted(overlap)}")

    def resolve_relation(self, name: str) -> str:
        return self.aliases.get(name, name)

    def relation_names(self) -> tuple[str, ...]:
        """Every relation a query may use, aliases included, sorted."""
        return tuple(
            sorted(
                self.atomic_relations
                | self.macro_relations
                | self.metric_relations
                | frozenset(self.aliases)
            )
        )

    @classmethod
    def dota(cls) -> "Vocabulary":
        return cls(object_classes=DOTA_CLASSES)

    @classmethod
    def flood(cls) -> "Vocabulary":
        return cls(object_classes=DOTA_CLASSES | FLOOD_EXTRA_CLASSES)


PROFILES = {"dota": Vocabulary.dota, "flood": Vocabulary.flood}


def get_profile(name: str) -> Vocabulary:
    try:
        return PROFILES[name]()
    except KeyError:
        raise ValueError(f"unknown vocabulary profile {name!r}; choose from {sorted(PROFILES)}")
