"""Command-line surface: parse, translate, score, retrieve, eval, bench."""

from __future__ import annotations

import json
import os

import click

from .errors import MissingLevelError, SceneQError
from .fol import normalize, parse_query, render_query
from .geometry import PredicateContext
from .inference import DEFAULT_FLOOR, NAIVE_BUDGET, hypothesis_count, score_query
from .metrics import (
    bench_compare,
    image_uncertainty,
    per_level_table,
    rrqc,
    rriu,
    table_to_dict,
)
from .retrieval import (
    load_corpus,
    load_ground_truth,
    load_queries,
    retrieve,
    run_from_dict,
    run_to_dict,
)
from .synth import bench_fixture
from .translate import HttpChatClient, offline_translate
from .translate import translate as translate_text
from .vocab import get_profile

_PROFILE_OPTION = click.option(
    "--vocab-profile",
    type=click.Choice(["dota", "flood"]),
    default="dota",
    show_default=True,
    help="Vocabulary profile for classes and relations.",
)


def _emit(payload, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=False)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)


def _to_query(body: str, as_fol: bool, vocabulary):
    if as_fol:
        return normalize(parse_query(body), vocabulary)
    try:
        return normalize(parse_query(body), vocabulary)
    except SceneQError:
        return offline_translate(body, vocabulary)


@click.group()
def main():
    """Query oriented-bounding-box scenes with conjunctive first-order logic."""


@main.command("parse")
@click.argument("query")
@click.option("--fol", is_flag=True, help="Treat the input strictly as FOL (no text fallback).")
@_PROFILE_OPTION
def parse_cmd(query, fol, vocab_profile):
    """Parse text or FOL and print the canonical normalized FOL."""
    vocabulary = get_profile(vocab_profile)
    try:
        q = _to_query(query, fol, vocabulary)
    except SceneQError as exc:
        raise click.ClickException(str(exc))
    click.echo(render_query(q))


@main.command("translate")
@click.argument("query")
@click.option("--offline", is_flag=True, help="Use the deterministic offline translator.")
@click.option("--endpoint", default=None, help="Chat backend endpoint URL.")
@click.option("--model", default="default", show_default=True)
@click.option("--samples", default=10, show_default=True, help="Samples to request.")
@click.option("--temperature", default=0.7, show_default=True)
@click.option("--timeout", default=30.0, show_default=True, help="Per-request timeout (s).")
@_PROFILE_OPTION
def translate_cmd(query, offline, endpoint, model, samples, temperature, timeout, vocab_profile):
    """Translate a natural-language query to FOL."""
    vocabulary = get_profile(vocab_profile)
    try:
        if offline:
            q = offline_translate(query, vocabulary)
            _emit({"query": query, "fol": render_query(q), "mode": "offline"}, None)
            return
        if not endpoint:
            raise click.ClickException("--endpoint is required unless --offline is given")
        client = HttpChatClient(
            endpoint, model, api_key=os.environ.get("SCENEQ_API_KEY"), timeout_s=timeout
        )
        result = translate_text(
            query, client, n=samples, v=vocabulary, model=model, temperature=temperature
        )
        _emit(
            {
                "query": query,
                "fol": render_query(result.chosen),
                "selection_reason": result.selection_reason.value,
                "samples": [s.fol_text for s in result.samples],
                "similarity_scores": list(result.similarity_scores),
            },
            None,
        )
    except SceneQError as exc:
        raise click.ClickException(str(exc))


@main.command("score")
@click.argument("query")
@click.option("--scene", "scene_path", required=True, type=click.Path(exists=True))
@click.option("--image-id", default=None, help="Image to score (default: sole image).")
@click.option("--fol", is_flag=True)
@click.option("--floor", default=DEFAULT_FLOOR, show_default=True)
@_PROFILE_OPTION
def score_cmd(query, scene_path, image_id, fol, floor, vocab_profile):
    """Score one query against one scene; print probability, witness, counts."""
    vocabulary = get_profile(vocab_profile)
    try:
        corpus = load_corpus(scene_path, vocabulary)
        if image_id is None:
            if len(corpus.scenes) != 1:
                raise click.ClickException("--image-id is required for multi-image files")
            scene = corpus.scenes[0]
        else:
            if image_id not in corpus.index:
                raise click.ClickException(f"image {image_id!r} not in {scene_path}")
            scene = corpus.scene(image_id)
        q = _to_query(query, fol, vocabulary)
        scored = score_query(q, scene, PredicateContext(), floor)
        factorized, naive = hypothesis_count(q, scene, floor)
        payload = {
            "image_id": scene.image_id,
            "query_fol": render_query(q),
            "probability": scored.probability,
            "hypotheses_enumerated": scored.hypotheses_evaluated,
            "hypothesis_count_factorized": factorized,
            "hypothesis_count_naive": str(naive),
            "witness": None,
        }
        if scored.witness is not None:
            payload["witness"] = {
                "assignment": dict(sorted(scored.witness.assignment.items())),
                "per_atom_scores": [
                    {"atom": atom.render(), "score": score}
                    for atom, score in scored.witness.per_atom_scores.items()
                ],
            }
        _emit(payload, None)
    except SceneQError as exc:
        raise click.ClickException(str(exc))


@main.command("retrieve")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--queries", "queries_path", required=True, type=click.Path(exists=True))
@click.option("--fol", is_flag=True, help="Query file bodies are FOL, not text.")
@click.option("--topk", default=10, show_default=True)
@click.option("--floor", default=DEFAULT_FLOOR, show_default=True)
@click.option("--workers", default=1, show_default=True)
@click.option("--out", default=None, type=click.Path(), help="Write runs JSON here.")
@_PROFILE_OPTION
def retrieve_cmd(corpus_path, queries_path, fol, topk, floor, workers, out, vocab_profile):
    """Rank the corpus for every query in a query file."""
    vocabulary = get_profile(vocab_profile)
    try:
        corpus = load_corpus(corpus_path, vocabulary)
        runs = []
        for query_id, level, body, as_fol in load_queries(queries_path, as_fol=fol):
            q = _to_query(body, as_fol, vocabulary)
            run = retrieve(
                q,
                corpus,
                topk,
                PredicateContext(),
                floor,
                query_id=query_id,
                level=level,
                workers=workers,
            )
            runs.append(run_to_dict(run))
        _emit({"runs": runs}, out)
    except SceneQError as exc:
        raise click.ClickException(str(exc))


@main.command("eval")
@click.option("--runs", "runs_path", required=True, type=click.Path(exists=True))
@click.option("--gt", "gt_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", default=None, type=click.Path(exists=True))
@click.option("--ks", default="1,5,10", show_default=True)
@click.option("--bins", default=2, show_default=True, help="Image-uncertainty bins.")
@click.option("--csv", "csv_path", default=None, type=click.Path())
@click.option("--out", default=None, type=click.Path())
@_PROFILE_OPTION
def eval_cmd(runs_path, gt_path, corpus_path, ks, bins, csv_path, out, vocab_profile):
    """Compute rank and robustness metrics for saved runs against ground truth."""
    vocabulary = get_profile(vocab_profile)
    try:
        with open(runs_path, encoding="utf-8") as fh:
            runs = [run_from_dict(r) for r in json.load(fh)["runs"]]
        levels = {r.query_id: r.level for r in runs if r.level is not None}
        gt = load_ground_truth(gt_path, levels)
        ks_tuple = tuple(int(x) for x in ks.split(","))

        table = per_level_table(runs, gt, ks_tuple)
        report = {"ks": list(ks_tuple), **table_to_dict(table)}

        rrqc_section: dict = {
            "note": "positive values mean the metric is higher at lower complexity"
        }
        for metric in ("mR", "mP"):
            by_level = {lvl: row[metric] for lvl, row in table.per_level.items()}
            try:
                rrqc_section[metric] = {
                    str(d): rrqc(by_level, d) for d in (1, 2, 3, 4)
                }
            except MissingLevelError as exc:
                rrqc_section[metric] = {"error": str(exc)}
        report["rrqc"] = rrqc_section

        if corpus_path:
            corpus = load_corpus(corpus_path, vocabulary)
            per_image_iu = {
                s.image_id: image_uncertainty(s) for s in corpus.scenes if s.detections
            }
            histogram = [0] * bins
            for value in per_image_iu.values():
                histogram[min(int(value * bins), bins - 1)] += 1
            report["image_uncertainty"] = {
                "per_image": per_image_iu,
                "histogram": histogram,
                "bin_edges": [j / bins for j in range(bins + 1)],
            }
            result = rriu(runs, gt, corpus, bins, ks_tuple)
            report["rriu"] = {
                "bin_edges": list(result.bins.bin_edges),
                "bin_means": {str(k): v for k, v in result.bin_means.items()},
                "pairs": {f"{i},{j}": v for (i, j), v in result.pairs.items()},
                "empty_bins": list(result.empty_bins),
            }

        if csv_path:
            with open(csv_path, "w", encoding="utf-8") as fh:
                header = ["level"] + [f"R@{k}" for k in ks_tuple] + [
                    f"P@{k}" for k in ks_tuple
                ] + ["mR", "mP"]
                fh.write(",".join(header) + "\n")
                for level, row in sorted(table.per_level.items()):
                    cells = [str(level)] + [
                        f"{row[c]:.6f}" for c in header[1:]
                    ]
                    fh.write(",".join(cells) + "\n")
        _emit(report, out)
    except SceneQError as exc:
        raise click.ClickException(str(exc))


@main.command("bench")
@click.option("--corpus", "corpus_path", default=None, type=click.Path(exists=True))
@click.option("--queries", "queries_path", default=None, type=click.Path(exists=True))
@click.option("--fol", is_flag=True)
@click.option("--floor", default=DEFAULT_FLOOR, show_default=True)
@click.option("--budget", default=NAIVE_BUDGET, show_default=True)
@click.option("--seed", default=7, show_default=True, help="Seed for the synthetic fixture.")
@click.option(
    "--scene-size",
    default=30,
    show_default=True,
    help="Max detections per synthetic scene (kernel work grows with this).",
)
@click.option("--compare-kernels", is_flag=True, help="Also time each kernel backend.")
@click.option("--out", default=None, type=click.Path())
@_PROFILE_OPTION
def bench_cmd(
    corpus_path,
    queries_path,
    fol,
    floor,
    budget,
    seed,
    scene_size,
    compare_kernels,
    out,
    vocab_profile,
):
    """Benchmark factorized scoring against naive enumeration."""
    vocabulary = get_profile(vocab_profile)
    try:
        if corpus_path and queries_path:
            corpus = load_corpus(corpus_path, vocabulary)
            queries = []
            for query_id, level, body, as_fol in load_queries(queries_path, as_fol=fol):
                queries.append((query_id, level, _to_query(body, as_fol, vocabulary)))
        else:
            corpus, queries = bench_fixture(seed, max_detections=scene_size)
        report = bench_compare(
            corpus,
            queries,
            PredicateContext(),
            floor,
            budget,
            compare_kernels=compare_kernels,
        )
        _emit(report, out)
    except SceneQError as exc:
        raise click.ClickException(str(exc))


if __name__ == "__main__":
    main()
