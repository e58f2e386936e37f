"""Retrieval evaluation: rank metrics, robustness metrics, and the
factorized-vs-naive benchmark report."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass

from . import kernels
from .errors import (
    BudgetExceededError,
    EmptyRunSetError,
    ImageMissingFromCorpusError,
    MissingLevelError,
    NoDetectionsError,
    UnknownQueryError,
)
from .fol import ConjunctiveQuery
from .geometry import PredicateContext
from .inference import (
    DEFAULT_FLOOR,
    NAIVE_BUDGET,
    Scene,
    hypothesis_count,
    naive_score,
    score_query,
)
from .retrieval import Corpus, GroundTruth, RankedRun

DEFAULT_KS = (1, 5, 10)
LEVELS = (1, 2, 3, 4, 5)


# ---------------------------------------------------------------------------
# Rank metrics
# ---------------------------------------------------------------------------


def _relevant_for(run: RankedRun, gt: GroundTruth) -> frozenset[str]:
    if run.query_id not in gt.relevant:
        raise UnknownQueryError(f"query {run.query_id!r} absent from ground truth")
    return gt.relevant[run.query_id]


def precision_at_k(run: RankedRun, gt: GroundTruth, k: int) -> float:
    """Fraction of the top-k retrieved images that are relevant."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    relevant = _relevant_for(run, gt)
    top = [image_id for image_id, _ in run.ranking[:k]]
    return sum(1 for image_id in top if image_id in relevant) / k


def recall_at_k(run: RankedRun, gt: GroundTruth, k: int) -> float:
    """Per-query hit indicator: 1 if any relevant image appears in the top-k."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    relevant = _relevant_for(run, gt)
    return 1.0 if any(img in relevant for img, _ in run.ranking[:k]) else 0.0


def mean_metrics(
    runs: list[RankedRun] | tuple[RankedRun, ...],
    gt: GroundTruth,
    ks: tuple[int, ...] = DEFAULT_KS,
) -> tuple[float, float]:
    """(mR, mP): per-query metrics averaged over queries, then over cutoffs."""
    if not runs:
        raise EmptyRunSetError("mean_metrics needs at least one run")
    recalls = []
    precisions = []
    for k in ks:
        recalls.append(statistics.fmean(recall_at_k(r, gt, k) for r in runs))
        precisions.append(statistics.fmean(precision_at_k(r, gt, k) for r in runs))
    return statistics.fmean(recalls), statistics.fmean(precisions)


@dataclass(frozen=True)
class MetricTable:
    """Per-complexity-level metric values at each cutoff."""

    per_level: dict[int, dict[str, float]]
    ks: tuple[int, ...] = DEFAULT_KS


def per_level_table(
    runs: list[RankedRun] | tuple[RankedRun, ...],
    gt: GroundTruth,
    ks: tuple[int, ...] = DEFAULT_KS,
) -> MetricTable:
    if not runs:
        raise EmptyRunSetError("per_level_table needs at least one run")
    by_level: dict[int, list[RankedRun]] = {}
    for run in runs:
        level = gt.complexity_level.get(run.query_id, run.level)
        if level is None:
            raise MissingLevelError(f"no complexity level for query {run.query_id!r}")
        by_level.setdefault(level, []).append(run)
    table: dict[int, dict[str, float]] = {}
    for level in sorted(by_level):
        level_runs = by_level[level]
        row: dict[str, float] = {}
        for k in ks:
            row[f"R@{k}"] = statistics.fmean(recall_at_k(r, gt, k) for r in level_runs)
            row[f"P@{k}"] = statistics.fmean(precision_at_k(r, gt, k) for r in level_runs)
        row["mR"], row["mP"] = mean_metrics(level_runs, gt, ks)
        table[level] = row
    return MetricTable(per_level=table, ks=ks)


# ---------------------------------------------------------------------------
# Robustness to query complexity
# ---------------------------------------------------------------------------


def rrqc(metric_by_level: dict[int, float], d: int) -> float:
    """Mean metric gap across level pairs at distance d.

    Positive values mean the metric is higher at *lower* complexity.
    """
    if d not in (1, 2, 3, 4):
        raise ValueError(f"distance d must be in 1..4, got {d}")
    missing = [lvl for lvl in LEVELS if lvl not in metric_by_level]
    if missing:
        raise MissingLevelError(f"levels missing from metric table: {missing}")
    pairs = [(i, i + d) for i in LEVELS if i + d in LEVELS]
    return sum(metric_by_level[i] - metric_by_level[j] for i, j in pairs) / len(pairs)


# ---------------------------------------------------------------------------
# Image uncertainty and robustness to it
# ---------------------------------------------------------------------------


def image_uncertainty(scene: Scene) -> float:
    """Mean per-object difficulty flag of a scene."""
    if not scene.detections:
        raise NoDetectionsError(f"scene {scene.image_id!r} has no detections")
    return statistics.fmean(d.difficulty for d in scene.detections)


@dataclass(frozen=True)
class UncertaintyBins:
    bin_edges: tuple[float, ...]
    bins: tuple[frozenset[str], ...]
    per_image_ratio: dict[str, float]


@dataclass(frozen=True)
class RriuResult:
    bins: UncertaintyBins
    bin_means: dict[int, float]  # 1-based bin -> mean hit ratio
    pairs: dict[tuple[int, int], float]  # (i, j), i < j -> P(B_j) - P(B_i)
    empty_bins: tuple[int, ...]


def rriu(
    runs: list[RankedRun] | tuple[RankedRun, ...],
    gt: GroundTruth,
    corpus: Corpus,
    bins_m: int = 2,
    ks: tuple[int, ...] = DEFAULT_KS,
) -> RriuResult:
    """Hit-ratio degradation across equal-width image-uncertainty bins."""
    if bins_m < 1:
        raise ValueError(f"bins_m must be >= 1, got {bins_m}")
    gt_images = sorted({img for ids in gt.relevant.values() for img in ids})
    for img in gt_images:
        if img not in corpus.index:
            raise ImageMissingFromCorpusError(f"ground-truth image {img!r} not in corpus")

    evaluated = [r for r in runs if r.query_id in gt.relevant]
    per_image_ratio: dict[str, float] = {}
    for img in gt_images:
        relevant_runs = [r for r in evaluated if img in gt.relevant[r.query_id]]
        n_gt = len(relevant_runs)
        if n_gt == 0:
            continue
        ratios = []
        for k in ks:
            hits = sum(
                1
                for r in relevant_runs
                if any(ranked == img for ranked, _ in r.ranking[:k])
            )
            ratios.append(hits / n_gt)
        per_image_ratio[img] = statistics.fmean(ratios)

    edges = tuple(j / bins_m for j in range(bins_m + 1))
    bin_sets: list[set[str]] = [set() for _ in range(bins_m)]
    for img in per_image_ratio:
        iu = image_uncertainty(corpus.scene(img))
        slot = min(int(iu * bins_m), bins_m - 1)
        bin_sets[slot].add(img)

    bin_means: dict[int, float] = {}
    empty: list[int] = []
    for j, members in enumerate(bin_sets, start=1):
        if members:
            bin_means[j] = statistics.fmean(per_image_ratio[i] for i in members)
        else:
            empty.append(j)

    pairs = {
        (i, j): bin_means[j] - bin_means[i]
        for i in bin_means
        for j in bin_means
        if i < j
    }
    return RriuResult(
        bins=UncertaintyBins(
            bin_edges=edges,
            bins=tuple(frozenset(s) for s in bin_sets),
            per_image_ratio=per_image_ratio,
        ),
        bin_means=bin_means,
        pairs=pairs,
        empty_bins=tuple(empty),
    )


# ---------------------------------------------------------------------------
# Factorized-vs-naive benchmark
# ---------------------------------------------------------------------------


def _time_stats(samples: list[float]) -> dict[str, float]:
    return {
        "min_s": min(samples),
        "avg_s": statistics.fmean(samples),
        "max_s": max(samples),
    }


def bench_compare(
    corpus: Corpus,
    queries: list[tuple[str, int, ConjunctiveQuery]],
    ctx: PredicateContext | None = None,
    floor: float = DEFAULT_FLOOR,
    budget: int = NAIVE_BUDGET,
    *,
    compare_kernels: bool = False,
) -> dict:
    """Wall-time comparison of factorized scoring against naive enumeration.

    One row per complexity level, sorted ascending. The naive column is
    skipped for any instance whose paper-style hypothesis count (N^M) exceeds
    the budget; skips are annotated, never fatal. With compare_kernels, the
    factorized pass is also timed under every available kernel backend.
    """
    by_level: dict[int, list[tuple[str, ConjunctiveQuery]]] = {}
    for query_id, level, q in queries:
        by_level.setdefault(level, []).append((query_id, q))

    rows = []
    for level in sorted(by_level):
        fact_times: list[float] = []
        naive_times: list[float] = []
        fact_counts: list[int] = []
        naive_counts: list[int] = []
        skipped = 0
        total = 0
        for _, q in by_level[level]:
            for scene in corpus.scenes:
                total += 1
                factorized, naive_exp = hypothesis_count(q, scene, floor)
                fact_counts.append(factorized)
                naive_counts.append(naive_exp)

                t0 = time.perf_counter()
                score_query(q, scene, ctx, floor)
                fact_times.append(time.perf_counter() - t0)

                if naive_exp > budget:
                    skipped += 1
                    continue
                try:
                    t0 = time.perf_counter()
                    naive_score(q, scene, ctx, floor, budget)
                    naive_times.append(time.perf_counter() - t0)
                except BudgetExceededError:
                    skipped += 1

        row = {
            "level": level,
            "instances": total,
            "factorized": _time_stats(fact_times),
            "factorized_count_max": max(fact_counts),
            "factorized_count_total": sum(fact_counts),
            "naive_count_max": max(naive_counts),
            "naive_status": "ok"
            if skipped == 0
            else ("skipped" if not naive_times else f"partial ({skipped}/{total} skipped)"),
        }
        if naive_times:
            row["naive"] = _time_stats(naive_times)
        rows.append(row)

    report: dict = {"budget": budget, "floor": floor, "rows": rows}

    if compare_kernels:
        backends: dict[str, dict] = {}
        for backend in kernels.available_backends():
            with kernels.use_backend(backend):
                times: list[float] = []
                for level in sorted(by_level):
                    for _, q in by_level[level]:
                        for scene in corpus.scenes:
                            t0 = time.perf_counter()
                            score_query(q, scene, ctx, floor)
                            times.append(time.perf_counter() - t0)
                backends[backend] = {"total_s": sum(times), **_time_stats(times)}
        report["kernel_backends"] = backends
        if {"native", "python"} <= set(backends):
            native_total = backends["native"]["total_s"]
            report["kernel_speedup"] = (
                backends["python"]["total_s"] / native_total if native_total > 0 else None
            )
    return report


def table_to_dict(table: MetricTable) -> dict:
    return {
        "ks": list(table.ks),
        "per_level": {str(level): dict(row) for level, row in table.per_level.items()},
    }
