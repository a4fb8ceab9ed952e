"""Command-line entry point.

Exit codes: 0 on success, 1 on data violations or malformed inputs, 2 on
usage errors (including missing files). All randomness flows from --seed,
which is recorded in every output artifact.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from sensechain import counting, model as core
from sensechain.corpus import (
    DatasetSplit,
    filter_words,
    load_embeddings,
    load_inventory,
    split_dataset,
)
from sensechain.decoding import parse_from_annotation, parse_to_dict
from sensechain.evaluation import EvalResult, Scores, evaluate, significance
from sensechain.model import SchemaError


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="sensechain",
        description="Workbench for sense-chain annotation and polysemy parsing.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    registry: dict[str, argparse.ArgumentParser] = {}

    def sub(name: str, help_text: str) -> argparse.ArgumentParser:
        p = subs.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON file whose keys mirror this subcommand's flags")
        registry[name] = p
        return p

    p = sub("validate", "check annotation files against every invariant")
    p.add_argument("files", nargs="+")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_validate)

    p = sub("stats", "summary statistics over an annotation corpus")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", default="stats")
    p.set_defaults(func=_cmd_stats)

    p = sub("count", "exact counts of the possible annotations of an n-sense word")
    p.add_argument("--senses", type=int, required=True)
    p.add_argument("--labels", type=int, default=2)
    p.add_argument("--enumerate", dest="enumerate_", action="store_true",
                   help="cross-check by brute-force enumeration (small n only)")
    p.add_argument("--constructible", action="store_true",
                   help="also count forests buildable without conduit overrides")
    p.set_defaults(func=_cmd_count)

    p = sub("agree", "agreement statistics over multiply-annotated corpora")
    p.add_argument("--annotations", nargs="+", required=True,
                   help="one corpus file or directory per annotator")
    p.add_argument("--filters", default="all,ap,ac")
    p.add_argument("--out", default="agreement.json")
    p.set_defaults(func=_cmd_agree)

    p = sub("preprocess", "merge split halves and strip virtual senses")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_preprocess)

    p = sub("split", "deterministic 80:10:10 train/dev/test split")
    p.add_argument("--words", help="text file with one word per line")
    p.add_argument("--inventory", help="derive the word list by filtering this inventory")
    p.add_argument("--sample", type=int, help="sample this many words before splitting")
    p.add_argument("--weights", help="optional 'word weight' file guiding the sample")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_split)

    p = sub("train", "train a polysemy-parsing baseline")
    p.add_argument("--model", choices=["mpd", "biaffine"], required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--split", required=True, help="directory written by the split subcommand")
    p.add_argument("--out", required=True, help="checkpoint path (.npz)")
    p.add_argument("--report", help="directory for the training report (default: beside --out)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=5e-5)
    p.add_argument("--dropout", type=float, default=0.33)
    p.add_argument("--weight-decay", type=float, default=0.01)
    p.add_argument("--patience", type=int, default=8)
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--edge-hidden", type=int, default=2048)
    p.add_argument("--label-hidden", type=int, default=100)
    p.set_defaults(func=_cmd_train)

    p = sub("parse", "predict parses for every word of a gold corpus")
    p.add_argument("--model", required=True, help="checkpoint path, or 'random'")
    p.add_argument("--annotations", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mst-metric", choices=["euclidean", "cosine"], default="euclidean")
    p.set_defaults(func=_cmd_parse)

    p = sub("evaluate", "score a model against gold under 1-best and n-best")
    p.add_argument("--model", required=True, help="checkpoint path, or 'random'")
    p.add_argument("--annotations", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--split", help="restrict to the test portion of this split directory")
    p.add_argument("--protocol", choices=["1-best", "n-best", "both"], default="both")
    p.add_argument("--out", default="evaluation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mst-metric", choices=["euclidean", "cosine"], default="euclidean")
    p.set_defaults(func=_cmd_evaluate)

    p = sub("significance", "paired permutation tests between evaluation reports")
    p.add_argument("--results", nargs="+", required=True,
                   help="evaluation.json files written by the evaluate subcommand")
    p.add_argument("--r", type=int, default=10_000)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--out", default="significance")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_significance)

    p = sub("serve", "run the annotation service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--inventory", required=True)
    p.add_argument("--store-dir", required=True)
    p.add_argument("--annotators", required=True, help="token file: 'annotator token' per line")
    p.add_argument("--words", help="optional word list; defaults to the filtered inventory")
    p.set_defaults(func=_cmd_serve)

    return parser, registry


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry = build_parser()
    try:
        _apply_config(argv, registry)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    raise SystemExit(main())


def _apply_config(argv: list[str], registry: dict[str, argparse.ArgumentParser]) -> None:
    if "--config" not in argv or not argv:
        return
    command = argv[0]
    if command not in registry:
        return
    config_path = argv[argv.index("--config") + 1]
    try:
        config = json.loads(Path(config_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"config {config_path}: {exc}") from None
    sub = registry[command]
    known = {action.dest for action in sub._actions}
    unknown = set(config) - known
    if unknown:
        raise SchemaError(f"config {config_path}: unknown keys {sorted(unknown)}")
    sub.set_defaults(**config)
    for action in sub._actions:
        if action.dest in config:
            action.required = False


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------


def _cmd_validate(args) -> int:
    bad = False
    for name in args.files:
        try:
            annotations = core.load_annotations(name)
        except SchemaError as exc:
            print(f"{name}: {exc}")
            bad = True
            continue
        for ann in annotations:
            violations = core.validate(ann)
            if violations:
                bad = True
                for v in violations:
                    print(f"{name}: {ann.word} ({ann.annotator}): {v}")
            elif not args.quiet:
                print(f"{name}: {ann.word} ({ann.annotator}): OK")
    return 1 if bad else 0


def _cmd_stats(args) -> int:
    from sensechain.report import corpus_stats, write_stats_report

    annotations = core.load_annotations(args.annotations)
    stats = corpus_stats(annotations)
    paths = write_stats_report(Path(args.out), stats)
    print(json.dumps({k: v for k, v in stats.items() if k != "senses_per_word_histogram"}, indent=2))
    print("wrote: " + ", ".join(str(p) for p in paths))
    return 0


def _cmd_count(args) -> int:
    n, k = args.senses, args.labels
    single = counting.count_single_root(n, k)
    total = counting.count_total(n, k)
    print(f"senses: {n}")
    print(f"labels: {k}")
    print(f"single-root: {single}")
    print(f"total: {total}")
    print(f"total (3 s.f.): {counting.round_significant(total)}")
    if args.constructible:
        if k != 2:
            raise ValueError("constructible counts are defined for the two-label scheme")
        print(f"constructible single-root: {counting.count_single_root_constructible(n)}")
        print(f"constructible total: {counting.count_total_constructible(n)}")
    if args.enumerate_:
        streamed = sum(1 for _ in counting.enumerate_annotations(n, k))
        match = "match" if streamed == total else "MISMATCH"
        print(f"enumerated: {streamed} ({match})")
        if streamed != total:
            return 1
    return 0


def _cmd_agree(args) -> int:
    from sensechain.agreement import agreement_report
    from sensechain.report import agreement_table, write_agreement_report, write_json

    filters = [f.strip() for f in args.filters.split(",") if f.strip()]
    corpora = [core.load_corpus(path) for path in args.annotations]
    report = agreement_report(corpora, filters)
    out = Path(args.out)
    paths = write_agreement_report(out.parent if out.parent != Path("") else Path("."), report)
    if out.name != "agreement.json":
        write_json(out, report.to_dict())
        paths.insert(0, out)
    print(agreement_table(report))
    print("wrote: " + ", ".join(str(p) for p in paths))
    return 0


def _cmd_preprocess(args) -> int:
    annotations = core.load_annotations(args.annotations)
    out_docs = []
    for ann in annotations:
        processed, warnings = core.preprocess(ann)
        for w in warnings:
            print(f"{ann.word}: {w}", file=sys.stderr)
        out_docs.append(core.annotation_to_dict(processed))
    Path(args.out).write_text(json.dumps(out_docs, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    print(f"preprocessed {len(out_docs)} words -> {args.out}")
    return 0


def _load_words(path: str) -> list[str]:
    return [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]


def _cmd_split(args) -> int:
    if bool(args.words) == bool(args.inventory):
        raise ValueError("give exactly one of --words and --inventory")
    words = _load_words(args.words) if args.words else filter_words(load_inventory(args.inventory))
    if args.sample:
        from sensechain.corpus import load_word_weights, sample_words

        weights = load_word_weights(args.weights) if args.weights else None
        words = sample_words(words, args.sample, args.seed, weights)
    split = split_dataset(words, args.seed)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, part in (("train", split.train), ("dev", split.dev), ("test", split.test)):
        (outdir / f"{name}.txt").write_text("\n".join(part) + "\n", encoding="utf-8")
    (outdir / "split.json").write_text(
        json.dumps({"seed": args.seed, "sizes": {"train": len(split.train), "dev": len(split.dev), "test": len(split.test)}})
        + "\n",
        encoding="utf-8",
    )
    print(f"split {len(words)} words into {len(split.train)}/{len(split.dev)}/{len(split.test)} -> {outdir}")
    return 0


def _read_split(path: str) -> DatasetSplit:
    outdir = Path(path)
    return DatasetSplit(
        tuple(_load_words(outdir / "train.txt")),
        tuple(_load_words(outdir / "dev.txt")),
        tuple(_load_words(outdir / "test.txt")),
    )


def _load_gold(path: str) -> dict[str, "core.WordAnnotation"]:
    gold = {}
    for ann in core.load_annotations(path):
        processed, _ = core.preprocess(ann)
        gold[processed.word] = processed
    return gold


def _cmd_train(args) -> int:
    from sensechain.parsers import TrainConfig, save_model, train
    from sensechain.report import write_training_report

    gold = _load_gold(args.annotations)
    table, coverage = load_embeddings(args.embeddings)
    usable = {w: ann for w, ann in gold.items() if all(s.id in table for s in ann.senses)}
    dropped = len(gold) - len(usable)
    if dropped:
        print(f"excluded {dropped} words with missing embeddings", file=sys.stderr)
    config = TrainConfig(
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        dropout=args.dropout,
        weight_decay=args.weight_decay,
        patience=args.patience,
        seed=args.seed,
        max_epochs=args.max_epochs,
    )
    split = _read_split(args.split)
    model, log = train(
        args.model, config, split, usable, table,
        edge_hidden=args.edge_hidden, label_hidden=args.label_hidden,
    )
    save_model(model, args.out, config)
    report_dir = Path(args.report) if args.report else Path(args.out).parent / "training-report"
    paths = write_training_report(report_dir, log)
    print(f"trained {args.model} ({len(log)} epochs) -> {args.out}")
    print("wrote: " + ", ".join(str(p) for p in paths))
    return 0


def _candidates(model, word: str, senses, table, n_best: bool, rng, metric="euclidean"):
    from sensechain import parsers
    from sensechain.decoding import n_best_variants

    if model == "random":
        first = parsers.random_parse(word, senses, rng)
        if not n_best:
            return [first]
        options = [first]
        for _ in range(len(senses) - 1):
            options.append(parsers.random_parse(word, senses, rng))
        unique = []
        seen = set()
        for p in options:
            if p.entries not in seen:
                seen.add(p.entries)
                unique.append(p)
        return unique[: max(len(senses), 1)]
    if isinstance(model, parsers.MpdModel):
        parse = parsers.mpd_predict(model, senses, table, metric=metric)
        if not n_best or len(senses) < 2:
            return [parse]
        emb = [table[sid] for sid in parse.sense_ids()]
        probs = model.probabilities(np.stack(emb))
        prob_map = {
            sid: {kind: float(probs[i, j]) for j, kind in enumerate(parsers.LABELS)}
            for i, sid in enumerate(parse.sense_ids())
        }
        return n_best_variants(parse, points=emb, labels=parse.labels(),
                               probabilities=prob_map, metric=metric)
    parse = parsers.biaffine_predict(model, senses, table)
    if not n_best or len(senses) < 2:
        return [parse]
    matrix, logits = parsers.biaffine_score(model, senses, table)
    edge_labels = parsers.biaffine_edge_labels(matrix, logits)
    return n_best_variants(parse, scores=matrix, edge_labels=edge_labels)


def _load_model_arg(spec: str):
    if spec == "random":
        return "random"
    from sensechain.parsers import load_model

    return load_model(spec)


def _cmd_parse(args) -> int:
    model = _load_model_arg(args.model)
    gold = _load_gold(args.annotations)
    table = None
    if model != "random":
        if not args.embeddings:
            raise ValueError("--embeddings is required unless --model random")
        table, _ = load_embeddings(args.embeddings)
    rng = np.random.default_rng(args.seed)
    parses = []
    for word in sorted(gold):
        senses = [s.id for s in gold[word].senses]
        candidates = _candidates(model, word, senses, table, False, rng, args.mst_metric)
        parses.append(parse_to_dict(candidates[0]))
    payload = {"seed": args.seed, "mst_metric": args.mst_metric, "parses": parses}
    Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(f"parsed {len(parses)} words -> {args.out} (seed {args.seed})")
    return 0


def _cmd_evaluate(args) -> int:
    from sensechain.report import results_table, write_eval_report

    model = _load_model_arg(args.model)
    gold_annotations = _load_gold(args.annotations)
    if args.split:
        test_words = [w for w in _read_split(args.split).test if w in gold_annotations]
    else:
        test_words = sorted(gold_annotations)
    if not test_words:
        raise ValueError("no test words to evaluate")
    table = None
    if model != "random":
        if not args.embeddings:
            raise ValueError("--embeddings is required unless --model random")
        table, _ = load_embeddings(args.embeddings)
        test_words = [
            w for w in test_words if all(s.id in table for s in gold_annotations[w].senses)
        ]
    gold = {w: parse_from_annotation(gold_annotations[w]) for w in test_words}

    protocols = ["1-best", "n-best"] if args.protocol == "both" else [args.protocol]
    model_id = args.model if args.model == "random" else Path(args.model).stem
    results = []
    for protocol in protocols:
        rng = np.random.default_rng(args.seed)
        candidates = {
            w: _candidates(model, w, list(gold[w].sense_ids()), table,
                           protocol == "n-best", rng, args.mst_metric)
            for w in test_words
        }
        results.append(evaluate(gold, candidates, model_id, protocol))
    paths = write_eval_report(Path(args.out), results)
    run_meta = Path(args.out) / "run.json"
    run_meta.write_text(
        json.dumps({"model": model_id, "seed": args.seed, "mst_metric": args.mst_metric})
        + "\n",
        encoding="utf-8",
    )
    paths.append(run_meta)
    print(results_table(results))
    print(f"seed: {args.seed}  mst-metric: {args.mst_metric}")
    print("wrote: " + ", ".join(str(p) for p in paths))
    return 0


def _cmd_significance(args) -> int:
    from sensechain.report import write_significance_report

    loaded: dict[str, EvalResult] = {}
    for path in args.results:
        for raw in json.loads(Path(path).read_text(encoding="utf-8")):
            per_word = {w: Scores(**s) for w, s in raw["per_word"].items()}
            result = EvalResult(
                raw["model"], raw["protocol"], per_word, raw["los"], raw["uuas"], raw["ulas"]
            )
            key = f"{result.model_id}/{result.protocol}"
            if key in loaded:  # same model evaluated twice (e.g. two seeds)
                qualifier = Path(path).parent.name or Path(path).stem
                key = f"{qualifier}:{key}"
            loaded[key] = result

    by_protocol: dict[str, dict[str, EvalResult]] = {}
    for key, result in loaded.items():
        by_protocol.setdefault(result.protocol, {})[key] = result
    all_results = []
    for protocol in sorted(by_protocol):
        group = by_protocol[protocol]
        if len(group) > 1:
            all_results.extend(significance(group, r=args.r, alpha=args.alpha, seed=args.seed))
    if not all_results:
        raise ValueError("need at least two results sharing a protocol")
    paths = write_significance_report(Path(args.out), all_results)
    for r in all_results:
        marker = "*" if r.significant else " "
        print(
            f"{marker} {r.model_a} vs {r.model_b} [{r.metric}]: p={r.p_value:.5f} "
            f"(alpha/{r.n_comparisons}={r.alpha / r.n_comparisons:.5f}, r={r.r})"
        )
    print("wrote: " + ", ".join(str(p) for p in paths))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from sensechain.service import TaskStore, create_app, load_tokens

    inventory = load_inventory(args.inventory)
    words = _load_words(args.words) if args.words else filter_words(inventory)
    tokens = load_tokens(args.annotators)
    store = TaskStore(Path(args.store_dir), inventory, words)
    app = create_app(store, inventory, tokens)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    entrypoint()
