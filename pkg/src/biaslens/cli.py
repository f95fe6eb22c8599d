"""Command-line entry point.

Subcommands: validate, retrieve, eval-i2t, eval-t2i, triplets, synth,
analyze, report. Every command is a pure function of (input files,
config, seed): reports carry a provenance header (tool version, seed,
config hash) and repeated invocations produce byte-identical outputs,
independent of the --threads degree.

Exit codes: 0 success, 1 I/O or environment failure, 2 validation or
domain error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path
from typing import Mapping, Sequence

from . import __version__, analytics, corpus, datasetkit, metrics, retrieval, synth, triplets
from .errors import BiaslensError

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID = 2

DEFAULT_DEPTHS = (5, 10, 25, 50, 99)


def _provenance(seed: int | None, options: Mapping[str, object]) -> dict[str, object]:
    canonical = json.dumps(options, sort_keys=True, default=str)
    return {
        "tool_version": __version__,
        "seed": seed,
        "config_hash": hashlib.sha256(canonical.encode("utf-8")).hexdigest(),
    }


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return config


def _resolve(args: argparse.Namespace, config: Mapping[str, object], name: str, default=None):
    """Flag value if given, else config-file value, else the default."""
    value = getattr(args, name.replace("-", "_"), None)
    if value is not None:
        return value
    if name in config:
        return config[name]
    return default


def _scorer_config(args, config) -> retrieval.ScorerConfig:
    return retrieval.ScorerConfig(
        similarity=_resolve(args, config, "scorer", "cosine"),
        l2_normalize_inputs=bool(_resolve(args, config, "l2-normalize", False)),
        maxsim_inner=_resolve(args, config, "maxsim-inner", "dot"),
    )


def _parse_k_list(text: str | Sequence[int]) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(k) for k in text)
    return tuple(int(part) for part in str(text).split(",") if part)


def _annotated(emb_path: str, meta_path: str | None) -> corpus.AnnotatedSet:
    emb = corpus.load_embeddings(emb_path)
    if meta_path is None:
        return corpus.AnnotatedSet(emb, {})
    return corpus.join_meta(emb, corpus.load_meta(meta_path))


def _out_dir(args, config) -> Path:
    out = Path(_resolve(args, config, "out-dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_expected(spec_text: str | None, meta: corpus.AnnotatedSet) -> metrics.LanguageDistribution:
    """--expected: 'uniform' (over the pool's languages) or a JSON file path."""
    if spec_text in (None, "uniform"):
        languages = {m.language for m in (meta.meta(i) for i in meta.ids()) if m and m.language}
        return metrics.LanguageDistribution.uniform(languages)
    with open(spec_text, encoding="utf-8") as fh:
        table = json.load(fh)
    return metrics.LanguageDistribution({lang.lower(): float(p) for lang, p in table.items()})


def _load_qrels(path: str) -> dict[str, set[str]]:
    """TREC qrels: query_id iteration doc_id relevance (whitespace-separated)."""
    relevant: dict[str, set[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 4:
                raise ValueError(f"{path}: expected 4 fields per qrels line")
            query_id, _, doc_id, rel = parts
            if int(rel) > 0:
                relevant.setdefault(query_id, set()).add(doc_id)
    return relevant


# ----------------------------------------------------------------- commands

def cmd_validate(args, config) -> int:
    findings = []
    try:
        emb = corpus.load_embeddings(args.embeddings)
    except corpus.FormatError as exc:
        print(f"INVALID {args.embeddings}: {exc}")
        return EXIT_INVALID
    print(f"embeddings: {len(emb)} records, dim={emb.dim}, "
          f"multi_vector={emb.multi_vector}")
    if args.meta:
        annotated = corpus.join_meta(emb, corpus.load_meta(args.meta))
        for rec_id in annotated.missing_meta:
            findings.append(f"embedding {rec_id!r} has no metadata row")
        for rec_id in annotated.unmatched_meta:
            findings.append(f"metadata row {rec_id!r} has no embedding")
        print(f"metadata: {len(annotated.ids()) - len(annotated.missing_meta)} joined, "
              f"{len(annotated.missing_meta)} missing, "
              f"{len(annotated.unmatched_meta)} unmatched")
    if args.catalog:
        catalog = corpus.load_catalog(args.catalog)
        print(f"catalog: {len(catalog.languages())} languages")
    for finding in findings:
        print(f"FINDING: {finding}")
    print("no findings" if not findings else f"{len(findings)} findings")
    return EXIT_OK if not findings else EXIT_INVALID


def cmd_retrieve(args, config) -> int:
    cfg = _scorer_config(args, config)
    queries = _annotated(args.queries, args.query_meta)
    candidates = _annotated(args.candidates, args.cand_meta)
    k = int(_resolve(args, config, "k", 10))
    threads = _resolve(args, config, "threads")
    run = retrieval.build_run(queries, candidates, k, cfg,
                              threads=int(threads) if threads else None)
    retrieval.write_run(run, args.out)
    print(f"wrote {args.out}: {len(run.lists)} queries, k={k}")
    return EXIT_OK


def _obtain_run(args, config, cfg) -> retrieval.RunFile:
    if args.run:
        return retrieval.load_run(args.run)
    if not (args.queries and args.candidates):
        raise ValueError("need either --run or both --queries and --candidates")
    queries = _annotated(args.queries, None)
    candidates = _annotated(args.candidates, None)
    threads = _resolve(args, config, "threads")
    depth = max(_parse_k_list(_resolve(args, config, "k", DEFAULT_DEPTHS)))
    return retrieval.build_run(queries, candidates, depth, cfg,
                               threads=int(threads) if threads else None)


def cmd_eval_i2t(args, config) -> int:
    cfg = _scorer_config(args, config)
    run = _obtain_run(args, config, cfg)
    meta = corpus.AnnotatedSet.from_meta(corpus.load_meta(args.meta))
    catalog = corpus.load_catalog(args.catalog)
    expected = _load_expected(args.expected, meta)
    epsilon = float(_resolve(args, config, "epsilon", 1e-6))
    smoothing = metrics.SmoothingConfig(epsilon)
    seed = _resolve(args, config, "seed")
    depths = _parse_k_list(_resolve(args, config, "k", DEFAULT_DEPTHS))
    out = _out_dir(args, config)
    options = {"epsilon": epsilon, "k": list(depths), "expected": args.expected or "uniform",
               "scorer": cfg.similarity}
    provenance = _provenance(seed, options)

    summary: dict[str, object] = {"provenance": provenance}
    relevant = _load_qrels(args.qrels) if args.qrels else None
    if relevant:
        summary["accuracy@5"] = metrics.accuracy_at_k(run, relevant, 5)
        summary["ndcg@10"] = metrics.ndcg_at_k(run, relevant, 10)
    for k in depths:
        report = metrics.compute_bias(run, meta, expected, k, smoothing)
        ndcg = metrics.per_query_ndcg(run, relevant, k) if relevant else None
        hits = metrics.per_query_hits(run, relevant, k) if relevant else None
        metrics.write_bias_report(report, out / f"bias_report_k{k}.json",
                                  provenance=provenance, ndcg=ndcg, hits=hits)
        hist = metrics.tier_histogram(run, meta, catalog, k)
        metrics.write_tier_histogram(hist, out / f"tier_histogram_k{k}.csv")
        summary[f"lbkl@{k}"] = report.mean_lbkl
        summary[f"dlbkl@{k}"] = report.mean_dlbkl
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote reports for k={list(depths)} to {out}")
    return EXIT_OK


def cmd_eval_t2i(args, config) -> int:
    cfg = _scorer_config(args, config)
    queries = _annotated(args.queries, args.query_meta)
    images = _annotated(args.images, args.image_meta)
    manifest = corpus.load_manifest(args.manifest)
    seed = _resolve(args, config, "seed")
    out = _out_dir(args, config)
    provenance = _provenance(seed, {"manifest": str(args.manifest), "scorer": cfg.similarity})
    report = triplets.evaluate_triplets(manifest, queries, images, cfg)
    triplets.write_sp_report(report, out / "sp_report.json", provenance=provenance)
    sp = report.overall.sp
    print(f"overall SP: {sp:.4f} over {report.overall.tallies.n} trials "
          f"({report.tie_count} ties)")
    return EXIT_OK


def cmd_triplets(args, config) -> int:
    pool = corpus.load_meta(args.pool)
    query_rows = corpus.load_meta(args.queries) if args.queries_are_meta else None
    if query_rows is not None:
        specs = [datasetkit.QuerySpec(text=m.id, language=m.language, country=m.country,
                                      concept=m.concepts[0]) for m in query_rows]
    else:
        specs = []
        with open(args.queries, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                specs.append(datasetkit.QuerySpec(
                    text=obj["text"], language=obj["language"],
                    country=obj["country"], concept=obj["concept"]))
    cfg = datasetkit.AssemblyConfig(
        seed=int(_resolve(args, config, "seed", 0)),
        triplets_per_query=int(_resolve(args, config, "triplets-per-query", 1)),
        require_distinct_countries=not args.allow_same_country,
    )
    result = datasetkit.assemble_triplets(pool, specs, cfg)
    out = _out_dir(args, config)
    corpus.write_manifest(result.entries, out / "manifest.jsonl")
    datasetkit.write_skip_report(result.skipped, out / "skips.csv")
    datasetkit.write_stats_csv(datasetkit.manifest_stats(result.entries), out / "stats.csv")
    print(f"assembled {len(result.entries)} entries, skipped {len(result.skipped)} queries")
    return EXIT_OK


def _parse_languages(text: str) -> tuple[tuple[str, int], ...]:
    pairs = []
    for part in text.split(","):
        lang, _, count = part.partition(":")
        pairs.append((lang.strip(), int(count)))
    return tuple(pairs)


def _parse_labels(text: str) -> tuple[tuple[str, str], ...]:
    pairs = []
    for part in text.split(","):
        lang, _, country = part.partition(":")
        pairs.append((lang.strip(), country.strip()))
    return tuple(pairs)


def cmd_synth_lists(args, config) -> int:
    spec = synth.PlacementSpec(
        k=int(_resolve(args, config, "k", 10)),
        pattern=args.pattern,
        languages=_parse_languages(args.languages),
        seed=int(_resolve(args, config, "seed", 0)),
    )
    run, annotated = synth.gen_ranked_lists(spec, args.n_queries)
    out = _out_dir(args, config)
    retrieval.write_run(run, out / "run.tsv")
    corpus.write_meta((annotated.meta(i) for i in annotated.ids()), out / "docs.meta.jsonl")
    print(f"wrote {out / 'run.tsv'} ({args.n_queries} lists of {spec.k})")
    return EXIT_OK


def cmd_synth_world(args, config) -> int:
    spec = synth.ClusterSpec(
        labels=_parse_labels(args.labels) if args.labels else synth.DEFAULT_LABELS,
        points_per_label=args.points_per_label,
        dim=args.dim,
        centroid_separation=args.separation,
        noise_sigma=args.sigma,
        alignment=args.alignment,
        seed=int(_resolve(args, config, "seed", 0)),
        concepts=tuple(args.concepts.split(",")) if args.concepts else synth.DEFAULT_CONCEPTS,
    )
    queries, images, manifest = synth.gen_embedding_world(spec)
    out = _out_dir(args, config)
    corpus.write_embeddings(queries.embeddings, out / "queries.pemb")
    corpus.write_meta((queries.meta(i) for i in queries.ids()), out / "queries.meta.jsonl")
    corpus.write_embeddings(images.embeddings, out / "images.pemb")
    corpus.write_meta((images.meta(i) for i in images.ids()), out / "images.meta.jsonl")
    corpus.write_manifest(manifest, out / "manifest.jsonl")
    print(f"wrote world to {out}: {len(queries.ids())} queries, "
          f"{len(images.ids())} images, {len(manifest)} triplets")
    return EXIT_OK


def _label_counts(annotated: corpus.AnnotatedSet, label_key: str) -> dict[str, int]:
    counts: dict[str, int] = {}
    for rec_id in annotated.ids():
        label = getattr(annotated.meta(rec_id), label_key)
        counts[label] = counts.get(label, 0) + 1
    return counts


def cmd_analyze(args, config) -> int:
    annotated = _annotated(args.embeddings, args.meta)
    report = analytics.silhouette(annotated, label_key=args.label, distance=args.distance)
    out = _out_dir(args, config)
    analytics.write_silhouette_csv(report, _label_counts(annotated, args.label),
                                   out / "silhouette.csv")
    image_report = None
    if args.image_embeddings:
        image_set = _annotated(args.image_embeddings, args.image_meta)
        image_report = analytics.silhouette(image_set, label_key=args.label,
                                            distance=args.distance)
        analytics.write_silhouette_csv(image_report, _label_counts(image_set, args.label),
                                       out / "image_silhouette.csv")
    if args.sp_report:
        with open(args.sp_report, encoding="utf-8") as fh:
            sp_doc = json.load(fh)
        group_key = "by_language" if args.label == "language" else "by_country"
        rows = []
        for group, entry in sorted(sp_doc.get(group_key, {}).items()):
            sp = entry.get("sp")
            if not isinstance(sp, (int, float)) or group not in report.per_label:
                continue
            row = [group, float(sp), report.per_label[group]]
            if image_report is not None:
                if group not in image_report.per_label:
                    continue
                row.append(image_report.per_label[group])
            rows.append(tuple(row))
        names = ("sp", "ts", "is") if image_report is not None else ("sp", "ts")
        analytics.write_paired_csv(rows, out / "sp_vs_silhouette.csv", value_names=names)
        if len(rows) >= 2:
            from .errors import ZeroVariance
            doc: dict[str, object] = {"n": len(rows)}
            for idx, name in enumerate(names, start=0):
                if name == "sp":
                    continue
                try:
                    corr = analytics.pearson([r[1] for r in rows],
                                             [r[idx + 1] for r in rows])
                    doc[f"pearson_sp_{name}"] = corr.r
                    print(f"pearson(sp, {name}) = {corr.r:.4f} over {corr.n} groups")
                except ZeroVariance:
                    doc[f"pearson_sp_{name}"] = "undefined"
                    print(f"pearson(sp, {name}) undefined (zero variance)")
            with open(out / "correlation.json", "w", encoding="utf-8") as fh:
                json.dump(doc, fh, indent=2, sort_keys=True)
                fh.write("\n")
    print(f"wrote {out / 'silhouette.csv'}")
    return EXIT_OK


def cmd_report(args, config) -> int:
    run = retrieval.load_run(args.run)
    meta = corpus.AnnotatedSet.from_meta(corpus.load_meta(args.meta))
    catalog = corpus.load_catalog(args.catalog)
    expected = _load_expected(args.expected, meta)
    epsilon = float(_resolve(args, config, "epsilon", 1e-6))
    smoothing = metrics.SmoothingConfig(epsilon)
    depths = _parse_k_list(_resolve(args, config, "k", DEFAULT_DEPTHS))
    out = _out_dir(args, config)
    import csv as _csv
    with open(out / "fig_bias_by_k.csv", "w", encoding="utf-8", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["k", "lbkl", "dlbkl"])
        for k in depths:
            report = metrics.compute_bias(run, meta, expected, k, smoothing)
            writer.writerow([k, repr(report.mean_lbkl), repr(report.mean_dlbkl)])
    hist = metrics.tier_histogram(run, meta, catalog, max(depths))
    metrics.write_tier_histogram(hist, out / "fig_rank_tiers.csv")
    with open(out / "fig_tier_totals.csv", "w", encoding="utf-8", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["tier", "count"])
        for tier in ("high", "medium", "low"):
            writer.writerow([tier, hist.totals.get(tier, 0)])
    print(f"wrote figure data to {out}")
    return EXIT_OK


# -------------------------------------------------------------------- parser

def _add_scorer_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scorer", choices=retrieval.SIMILARITIES, default=None,
                        help="similarity function (default cosine)")
    parser.add_argument("--l2-normalize", action="store_const", const=True, default=None,
                        help="l2-normalize inputs before scoring")
    parser.add_argument("--maxsim-inner", choices=("dot", "cosine"), default=None,
                        help="token-level similarity inside maxsim")


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override it")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None,
                        help="parallelism degree (default: available cores)")
    parser.add_argument("--out-dir", default=None, help="output directory (default .)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biaslens",
                                     description="Retrieval bias measurement toolkit")
    parser.add_argument("--version", action="version", version=f"biaslens {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate embeddings, sidecar and catalog")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--meta")
    p.add_argument("--catalog")
    _add_common_flags(p)
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("retrieve", help="build a TREC run file by brute-force scoring")
    p.add_argument("--queries", required=True)
    p.add_argument("--query-meta")
    p.add_argument("--candidates", required=True)
    p.add_argument("--cand-meta")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--out", required=True)
    _add_scorer_flags(p)
    _add_common_flags(p)
    p.set_defaults(handler=cmd_retrieve)

    p = sub.add_parser("eval-i2t", help="language-prevalence bias metrics over a run")
    p.add_argument("--run", help="existing TREC run (skips retrieval)")
    p.add_argument("--queries", help="query embeddings (when building the run)")
    p.add_argument("--candidates", help="candidate embeddings (when building the run)")
    p.add_argument("--meta", required=True, help="candidate metadata sidecar")
    p.add_argument("--catalog")
    p.add_argument("--expected", help="'uniform' or JSON file of language probabilities")
    p.add_argument("--qrels", help="TREC qrels for accuracy/NDCG")
    p.add_argument("--k", default=None, help="comma-separated depth list")
    p.add_argument("--epsilon", type=float, default=None)
    _add_scorer_flags(p)
    _add_common_flags(p)
    p.set_defaults(handler=cmd_eval_i2t)

    p = sub.add_parser("eval-t2i", help="forced-choice self-preference evaluation")
    p.add_argument("--queries", required=True)
    p.add_argument("--query-meta")
    p.add_argument("--images", required=True)
    p.add_argument("--image-meta")
    p.add_argument("--manifest", required=True)
    _add_scorer_flags(p)
    _add_common_flags(p)
    p.set_defaults(handler=cmd_eval_t2i)

    p = sub.add_parser("triplets", help="assemble a triplet manifest from a tagged pool")
    p.add_argument("--pool", required=True, help="pool metadata sidecar (JSONL)")
    p.add_argument("--queries", required=True,
                   help="JSONL with text/language/country/concept per line")
    p.add_argument("--queries-are-meta", action="store_true",
                   help="treat --queries as a metadata sidecar")
    p.add_argument("--triplets-per-query", type=int, default=None)
    p.add_argument("--allow-same-country", action="store_true")
    _add_common_flags(p)
    p.set_defaults(handler=cmd_triplets)

    p = sub.add_parser("synth", help="generate synthetic evaluation inputs")
    synth_sub = p.add_subparsers(dest="mode", required=True)

    q = synth_sub.add_parser("lists", help="ranked lists with prescribed language placement")
    q.add_argument("--pattern", choices=synth.PATTERNS, required=True)
    q.add_argument("--languages", required=True, help="lang:count pairs, e.g. en:5,th:5")
    q.add_argument("--k", type=int, default=None)
    q.add_argument("--n-queries", type=int, default=1)
    _add_common_flags(q)
    q.set_defaults(handler=cmd_synth_lists)

    q = synth_sub.add_parser("world", help="Gaussian embedding world plus triplet manifest")
    q.add_argument("--labels", help="lang:COUNTRY pairs, e.g. en:USA,th:THA")
    q.add_argument("--concepts", help="comma-separated concept names")
    q.add_argument("--points-per-label", type=int, default=3)
    q.add_argument("--dim", type=int, default=16)
    q.add_argument("--separation", type=float, default=1.0)
    q.add_argument("--sigma", type=float, default=0.1)
    q.add_argument("--alignment", type=float, default=1.0)
    _add_common_flags(q)
    q.set_defaults(handler=cmd_synth_world)

    p = sub.add_parser("analyze", help="silhouette analytics and SP correlation")
    p.add_argument("--embeddings", required=True, help="text embeddings (the ts column)")
    p.add_argument("--meta", required=True)
    p.add_argument("--image-embeddings", help="optional image set (adds the is column)")
    p.add_argument("--image-meta")
    p.add_argument("--label", choices=("language", "country"), default="language")
    p.add_argument("--distance", choices=analytics.DISTANCES, default="euclidean")
    p.add_argument("--sp-report", help="sp_report.json to correlate against")
    _add_common_flags(p)
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("report", help="emit figure-ready CSVs from a run")
    p.add_argument("--run", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--catalog")
    p.add_argument("--expected")
    p.add_argument("--k", default=None, help="comma-separated depth list")
    p.add_argument("--epsilon", type=float, default=None)
    _add_common_flags(p)
    p.set_defaults(handler=cmd_report)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(getattr(args, "config", None))
        return args.handler(args, config)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (BiaslensError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
