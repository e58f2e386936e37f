"""Text-to-logic translation.

A prompt builder for the in-context-learning template, a backend-agnostic
chat-completion client contract, multi-sample uncertainty control with a
deterministic selection rule, and a fully offline pattern-based translator
for tests and air-gapped runs.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Protocol

import requests

from .errors import (
    BackendUnavailableError,
    EmptySampleSetError,
    NoValidSampleError,
    SceneQError,
    UnsupportedQueryShapeError,
)
from .fol import (
    Atom,
    ClassAtom,
    ConjunctiveQuery,
    IsolatedAtom,
    RelationAtom,
    complexity_counts,
    normalize,
    parse_query,
)
from .vocab import Vocabulary

DEFAULT_SAMPLE_COUNT = 10
DEFAULT_TEMPERATURE = 0.7
DEFAULT_TIMEOUT_S = 30.0


# ---------------------------------------------------------------------------
# Prompt assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PromptDocument:
    """The five prompt sections plus their assembled form."""

    role_section: str
    context_section: str
    steps_section: str
    fewshot_section: str
    output_format_section: str
    assembled: str


_FEWSHOT_EXAMPLES = (
    (
        "two trucks close to each other",
        "truck(a) and truck(b) and is_close(a, b)",
    ),
    (
        "a storage tank to the left of another storage tank",
        "storage_tank(a) and storage_tank(b) and left_of(a, b)",
    ),
    (
        "three ships aligned",
        "ship(a) and ship(b) and ship(c) and left_of(a, b) and left_of(b, c)",
    ),
    (
        "a plane above a truck and two harbors close to each other",
        "plane(a) and truck(b) and is_above(a, b) and harbor(c) and harbor(d) "
        "and is_close(c, d)",
    ),
    (
        "six ships in column and four cars aligned",
        "ship(a) and ship(b) and ship(c) and ship(d) and ship(e) and ship(f) "
        "and is_above(a, b) and is_above(b, c) and is_above(c, d) and is_above(d, e) "
        "and is_above(e, f) and car(g) and car(h) and car(i) and car(j) "
        "and left_of(g, h) and left_of(h, i) and left_of(i, j)",
    ),
)


def build_prompt(query: str, v: Vocabulary) -> PromptDocument:
    """Assemble the translation prompt; deterministic for fixed inputs."""
    role = "You are a logician and expert in Remote Sensing (RS)."

    objects = ", ".join(sorted(v.object_classes))
    relations = ", ".join(v.relation_names())
    context = (
        "You are working on queries that are used to retrieve images in a "
        "remote sensing (RS) scenario. I want you to transform queries in natural "
        "language to the corresponding first order logic (FOL) expression. "
        "Following, there is the list of the entities and the predicates that "
        "you can extract.\n\n"
        f"Objects:\n\n{objects}.\n\n"
        f"Relations:\n\n{relations}."
    )

    steps = (
        "Steps to follow:\n\n"
        "- Step 1: assign to each object in the query a variable, corresponding "
        "to an alphabet letter. Assign to each object a different letter.\n"
        "- Step 2: parse the query into a logical expression using the variables "
        "above and the keywords."
    )

    fewshot_lines = ["Conversion examples:", ""]
    for i, (text, fol) in enumerate(_FEWSHOT_EXAMPLES, start=1):
        fewshot_lines.append(f"Example {i}")
        fewshot_lines.append(f"    - Query: {text}")
        fewshot_lines.append(f"    - FOL expression: {fol}")
    fewshot = "\n".join(fewshot_lines)

    output_format = (
        "Return the answer in the following JSON format:\n"
        "{\n"
        '    "variables": {"a": "category1", "b": "category2", "c": "category3"},\n'
        '    "translations": [{"query": "query string", "expression": "FOL expression"}]\n'
        "}"
    )

    assembled = "\n\n".join(
        [role, context, steps, fewshot, output_format]
    ) + f"\n\nConvert to FOL the following query: {query}"
    return PromptDocument(role, context, steps, fewshot, output_format, assembled)


# ---------------------------------------------------------------------------
# Chat client contract
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChatRequest:
    model: str
    prompt: str
    temperature: float
    n: int


@dataclass(frozen=True)
class ChatSample:
    text: str
    confidence: float | None = None


class ChatClient(Protocol):
    def complete(self, request: ChatRequest) -> list[ChatSample]: ...


class HttpChatClient:
    """Single-turn HTTP/JSON client.

    POSTs {"model", "prompt", "temperature", "n"} to the endpoint and expects
    {"samples": [{"text": ..., "confidence": ...}, ...]} back. No vendor
    specifics live here; adapt at the endpoint.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        timeout_s: float = DEFAULT_TIMEOUT_S,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout_s = timeout_s

    def complete(self, request: ChatRequest) -> list[ChatSample]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": request.model,
            "prompt": request.prompt,
            "temperature": request.temperature,
            "n": request.n,
        }
        try:
            resp = requests.post(
                self.endpoint, json=body, headers=headers, timeout=self.timeout_s
            )
            resp.raise_for_status()
            payload = resp.json()
        except (requests.RequestException, ValueError) as exc:
            raise BackendUnavailableError(f"chat backend failed: {exc}") from exc
        samples = payload.get("samples", [])
        return [
            ChatSample(text=s.get("text", ""), confidence=s.get("confidence"))
            for s in samples
        ]


def extract_fol(raw: str) -> str | None:
    """Pull the FOL expression out of a raw response.

    Prefers the documented JSON shape; scans for the first balanced JSON
    object in surrounding prose, then falls back to treating the whole text
    as a bare FOL string.
    """
    for start in (i for i, ch in enumerate(raw) if ch == "{"):
        depth = 0
        for end in range(start, len(raw)):
            if raw[end] == "{":
                depth += 1
            elif raw[end] == "}":
                depth -= 1
                if depth == 0:
                    try:
                        obj = json.loads(raw[start : end + 1])
                    except json.JSONDecodeError:
                        break
                    if isinstance(obj, dict):
                        translations = obj.get("translations")
                        if isinstance(translations, list) and translations:
                            expr = translations[0].get("expression")
                            if isinstance(expr, str):
                                return expr
                        expr = obj.get("expression")
                        if isinstance(expr, str):
                            return expr
                    break
        else:
            continue
    stripped = raw.strip()
    return stripped or None


# ---------------------------------------------------------------------------
# Sample selection
# ---------------------------------------------------------------------------


class SelectionReason(str, Enum):
    SIMILARITY = "similarity"
    CONFIDENCE_TIE = "confidence_tie"
    MINIMALITY_TIE = "minimality_tie"


@dataclass(frozen=True)
class TranslationSample:
    fol_text: str
    llm_confidence: float = 0.5
    raw_response: str = ""


@dataclass(frozen=True)
class TranslationResult:
    chosen: ConjunctiveQuery
    samples: tuple[TranslationSample, ...]
    similarity_scores: tuple[float, ...]
    selection_reason: SelectionReason


class SimilarityProvider(Protocol):
    def similarity(self, query_text: str, fol_text: str) -> float: ...


_STOPWORDS = frozenset(
    """a an the to of and each other is are there in on with at least that
    another containing image images all from its it
    one two three four five six seven eight nine ten""".split()
)


def _content_words(text: str) -> frozenset[str]:
    words = set()
    for token in re.findall(r"[a-z]+", text.lower()):
        if token in _STOPWORDS:
            continue
        if len(token) > 3 and token.endswith("s"):
            token = token[:-1]
        words.add(token)
    return frozenset(words)


def _fol_words(fol_text: str) -> frozenset[str]:
    words = set()
    for ident in re.findall(r"[A-Za-z_][A-Za-z0-9_]*", fol_text):
        if len(ident) == 1 or ident.lower() == "and":
            continue  # variables and the conjunction keyword carry no content
        for piece in ident.lower().split("_"):
            if piece and piece not in _STOPWORDS:
                words.add(piece)
    return frozenset(words)


class JaccardSimilarity:
    """Token-overlap similarity between a query's content words and an
    expression's predicate/class words. Hermetic default provider; swap in an
    embedding-backed provider for production use."""

    def similarity(self, query_text: str, fol_text: str) -> float:
        qw = _content_words(query_text)
        fw = _fol_words(fol_text)
        if not qw and not fw:
            return 0.0
        return len(qw & fw) / len(qw | fw)


def _sample_size(sample: TranslationSample, v: Vocabulary | None) -> int:
    try:
        q = parse_query(sample.fol_text)
        if v is not None:
            q = normalize(q, v)
    except SceneQError:
        return 1 << 30  # unparseable samples lose minimality ties
    n_objects, _, n_predicates = complexity_counts(q)
    return n_objects + n_predicates


def select_sample(
    samples: list[TranslationSample] | tuple[TranslationSample, ...],
    query: str,
    sim: SimilarityProvider | None = None,
    vocabulary: Vocabulary | None = None,
) -> tuple[int, SelectionReason]:
    """Pick one sample: highest similarity, then highest confidence, then the
    fewest entities+predicates, then the earliest index."""
    if not samples:
        raise EmptySampleSetError("no samples to select from")
    sim = sim if sim is not None else JaccardSimilarity()
    scores = [sim.similarity(query, s.fol_text) for s in samples]

    best_sim = max(scores)
    tied = [i for i, s in enumerate(scores) if s == best_sim]
    # A tie among byte-identical expressions is no tie at all.
    if len(tied) == 1 or len({samples[i].fol_text for i in tied}) == 1:
        return tied[0], SelectionReason.SIMILARITY

    best_conf = max(samples[i].llm_confidence for i in tied)
    tied = [i for i in tied if samples[i].llm_confidence == best_conf]
    if len(tied) == 1:
        return tied[0], SelectionReason.CONFIDENCE_TIE

    sizes = {i: _sample_size(samples[i], vocabulary) for i in tied}
    best_size = min(sizes.values())
    tied = [i for i in tied if sizes[i] == best_size]
    return tied[0], SelectionReason.MINIMALITY_TIE


def translate(
    query: str,
    client: ChatClient,
    n: int = DEFAULT_SAMPLE_COUNT,
    v: Vocabulary | None = None,
    *,
    model: str = "default",
    temperature: float = DEFAULT_TEMPERATURE,
    sim: SimilarityProvider | None = None,
) -> TranslationResult:
    """Multi-sample translation with uncertainty control.

    Collects n samples from the client, drops those that fail parsing or
    vocabulary validation, selects one by the documented tie-break chain, and
    returns it normalized.
    """
    v = v if v is not None else Vocabulary.dota()
    prompt = build_prompt(query, v)
    try:
        raw_samples = client.complete(ChatRequest(model, prompt.assembled, temperature, n))
    except BackendUnavailableError:
        raise
    except Exception as exc:
        raise BackendUnavailableError(f"chat backend failed: {exc}") from exc

    samples: list[TranslationSample] = []
    parsed: dict[int, ConjunctiveQuery] = {}
    for i, raw in enumerate(raw_samples):
        fol_text = extract_fol(raw.text) or ""
        confidence = raw.confidence if raw.confidence is not None else 0.5
        samples.append(TranslationSample(fol_text, confidence, raw.text))
        if not fol_text:
            continue
        try:
            parsed[i] = normalize(parse_query(fol_text), v)
        except SceneQError:
            continue

    if not parsed:
        raise NoValidSampleError(
            f"no valid sample among {len(samples)} responses for query {query!r}"
        )

    valid_indices = sorted(parsed)
    valid_samples = [samples[i] for i in valid_indices]
    local_index, reason = select_sample(valid_samples, query, sim, v)
    chosen_index = valid_indices[local_index]

    sim_provider = sim if sim is not None else JaccardSimilarity()
    similarity_scores = tuple(
        sim_provider.similarity(query, s.fol_text) if i in parsed else 0.0
        for i, s in enumerate(samples)
    )
    return TranslationResult(
        chosen=parsed[chosen_index],
        samples=tuple(samples),
        similarity_scores=similarity_scores,
        selection_reason=reason,
    )


# ---------------------------------------------------------------------------
# Offline translator
# ---------------------------------------------------------------------------

_NUMBER_WORDS = {
    "a": 1,
    "an": 1,
    "one": 1,
    "two": 2,
    "three": 3,
    "four": 4,
    "five": 5,
    "six": 6,
    "seven": 7,
    "eight": 8,
    "nine": 9,
    "ten": 10,
}

_VARIABLE_NAMES = "abcdefghijklmnopqrstuvwxyz"


class _VarPool:
    def __init__(self):
        self._iter = iter(_VARIABLE_NAMES)

    def take(self, count: int) -> list[str]:
        return [next(self._iter) for _ in range(count)]


def _class_lexicon(v: Vocabulary) -> dict[str, str]:
    """Surface form (spaced, singular or plural) -> class name."""
    lexicon: dict[str, str] = {}
    for cls in v.object_classes:
        spaced = cls.replace("_", " ")
        lexicon[spaced] = cls
        lexicon[spaced + "s"] = cls
    return lexicon


def _class_pattern(lexicon: dict[str, str]) -> str:
    forms = sorted(lexicon, key=len, reverse=True)
    return "|".join(re.escape(f) for f in forms)


def _count_of(word: str) -> int | None:
    if word.isdigit():
        return int(word)
    return _NUMBER_WORDS.get(word)


def offline_translate(query: str, v: Vocabulary | None = None) -> ConjunctiveQuery:
    """Deterministic template-based translation for the supported query family.

    Covers counted entities ("three ships"), pairwise directional phrases,
    proximity, alignment/column/cluster groupings, isolation, containment,
    and the flooded-building pattern under the flood profile. Anything else
    raises UnsupportedQueryShapeError naming the fragment.
    """
    v = v if v is not None else Vocabulary.dota()
    lexicon = _class_lexicon(v)
    cls_pat = _class_pattern(lexicon)
    num_pat = r"(?:\d+|a|an|one|two|three|four|five|six|seven|eight|nine|ten)"

    text = query.lower().strip().rstrip(".").strip()
    text = re.sub(r"^(there (are|is)\s+)", "", text)
    if not text:
        raise UnsupportedQueryShapeError(query)

    pool = _VarPool()
    atoms: list[Atom] = []
    for clause in re.split(r"\s+and\s+", text):
        clause = clause.strip()
        atoms.extend(_translate_clause(clause, v, lexicon, cls_pat, num_pat, pool))
    return normalize(ConjunctiveQuery(tuple(atoms)), v)


def _translate_clause(clause, v, lexicon, cls_pat, num_pat, pool) -> list[Atom]:
    # Flood scenario: flooding is not a detectable object class, so "flooded
    # building" maps to a building externally connected to flooded road area.
    if re.search(r"\bflooded buildings?\b", clause):
        if {"building", "road_flooded"} <= v.object_classes:
            a, b = pool.take(2)
            return [
                ClassAtom("building", a),
                ClassAtom("road_flooded", b),
                RelationAtom("externally_connected", (a, b)),
            ]
        raise UnsupportedQueryShapeError(clause)

    m = re.fullmatch(rf"({num_pat})\s+({cls_pat})\s+close to each other", clause)
    if m:
        return _group_atoms(m, lexicon, "clustered", pool, clause)

    m = re.fullmatch(rf"({num_pat})\s+({cls_pat})\s+aligned", clause)
    if m:
        return _group_atoms(m, lexicon, "aligned", pool, clause)

    m = re.fullmatch(rf"({num_pat})\s+({cls_pat})\s+in (?:a )?column", clause)
    if m:
        return _group_atoms(m, lexicon, "in_column", pool, clause)

    m = re.fullmatch(rf"({num_pat})\s+({cls_pat})\s+clustered", clause)
    if m:
        return _group_atoms(m, lexicon, "clustered", pool, clause)

    m = re.fullmatch(
        rf"(?:{num_pat})?\s*(?:an? )?isolated\s+({cls_pat})", clause
    ) or re.fullmatch(rf"(?:an? )?({cls_pat})\s+isolated(?:\s+from .*)?", clause)
    if m:
        (var,) = pool.take(1)
        return [ClassAtom(lexicon[m.group(1)], var), IsolatedAtom(var)]

    m = re.fullmatch(
        rf"(?:an? |one )?({cls_pat})\s+to the (left|right) of\s+"
        rf"(?:an? |another |the )?({cls_pat})",
        clause,
    )
    if m:
        a, b = pool.take(2)
        rel = "left_of" if m.group(2) == "left" else "right_of"
        return [
            ClassAtom(lexicon[m.group(1)], a),
            ClassAtom(lexicon[m.group(3)], b),
            RelationAtom(rel, (a, b)),
        ]

    m = re.fullmatch(
        rf"(?:an? |one )?({cls_pat})\s+(above|below)\s+(?:an? |another |the )?({cls_pat})",
        clause,
    )
    if m:
        a, b = pool.take(2)
        rel = "is_above" if m.group(2) == "above" else "is_below"
        return [
            ClassAtom(lexicon[m.group(1)], a),
            ClassAtom(lexicon[m.group(3)], b),
            RelationAtom(rel, (a, b)),
        ]

    m = re.fullmatch(
        rf"(?:an? |one )?({cls_pat})\s+inside\s+(?:an? |another |the )?({cls_pat})", clause
    )
    if m:
        a, b = pool.take(2)
        return [
            ClassAtom(lexicon[m.group(1)], a),
            ClassAtom(lexicon[m.group(2)], b),
            RelationAtom("is_on", (a, b)),
        ]

    raise UnsupportedQueryShapeError(clause)


def _group_atoms(match, lexicon, macro, pool, clause) -> list[Atom]:
    count = _count_of(match.group(1))
    cls = lexicon[match.group(2)]
    if count is None or count < 2:
        raise UnsupportedQueryShapeError(clause)
    names = pool.take(count)
    atoms: list[Atom] = [ClassAtom(cls, n) for n in names]
    atoms.append(RelationAtom(macro, tuple(names)))
    return atoms
