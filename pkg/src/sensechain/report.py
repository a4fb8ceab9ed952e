"""Report rendering: delimited tables, JSON, and matplotlib figures.

Every reporting subcommand writes machine-readable output (JSON plus CSV)
and renders a figure alongside it in the same directory.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from sensechain.agreement import CATEGORIES, AgreementReport
from sensechain.evaluation import METRICS, EvalResult, SignificanceResult
from sensechain.model import LabelKind, WordAnnotation, partition
from sensechain.parsers import EpochRecord


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def _fmt(value: float | None, digits: int = 2) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


# ---------------------------------------------------------------------------
# Evaluation results.
# ---------------------------------------------------------------------------


def results_table(results: Sequence[EvalResult]) -> str:
    lines = [f"{'protocol':<10} {'model':<12} {'LOS':>7} {'UUAS':>7} {'ULAS':>7}"]
    for r in results:
        lines.append(
            f"{r.protocol:<10} {r.model_id:<12} {r.los:>7.1f} {r.uuas:>7.1f} {r.ulas:>7.1f}"
        )
    return "\n".join(lines)


def write_eval_report(outdir: Path, results: Sequence[EvalResult]) -> list[Path]:
    outdir.mkdir(parents=True, exist_ok=True)
    json_path = outdir / "evaluation.json"
    write_json(json_path, [r.to_dict() for r in results])
    csv_path = outdir / "evaluation.csv"
    write_csv(
        csv_path,
        ["protocol", "model", "los", "uuas", "ulas"],
        [[r.protocol, r.model_id, f"{r.los:.4f}", f"{r.uuas:.4f}", f"{r.ulas:.4f}"] for r in results],
    )
    txt_path = outdir / "evaluation.txt"
    txt_path.write_text(results_table(results) + "\n", encoding="utf-8")
    fig_path = outdir / "evaluation.png"
    _figure_eval(results, fig_path)
    return [json_path, csv_path, txt_path, fig_path]


def _figure_eval(results: Sequence[EvalResult], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    names = [f"{r.model_id}\n({r.protocol})" for r in results]
    x = range(len(results))
    width = 0.25
    for offset, metric in zip((-width, 0.0, width), METRICS):
        ax.bar(
            [i + offset for i in x],
            [r.to_dict()[metric] for r in results],
            width,
            label=metric.upper(),
        )
    ax.set_xticks(list(x))
    ax.set_xticklabels(names, fontsize=8)
    ax.set_ylabel("score")
    ax.set_ylim(0, 100)
    ax.legend()
    ax.set_title("Parsing scores")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


# ---------------------------------------------------------------------------
# Agreement.
# ---------------------------------------------------------------------------


def agreement_table(report: AgreementReport) -> str:
    lines = [f"annotators: {report.n_annotators}   words: {report.n_words}"]
    lines.append(f"mean pairwise ARI over partitions: {_fmt(report.ari, 4)}")
    lines.append("")
    lines.append(f"{'category':<12} {'pct all':>8} {'pct ap':>8} {'pct ac':>8} "
                 f"{'kap all':>8} {'kap ap':>8} {'kap ac':>8}")
    for cat in CATEGORIES:
        pct = report.pct_label.get(cat, {})
        kap = report.fleiss_kappa.get(cat, {})
        lines.append(
            f"{cat:<12} {_fmt(pct.get('all')):>8} {_fmt(pct.get('ap')):>8} {_fmt(pct.get('ac')):>8} "
            f"{_fmt(kap.get('all'), 3):>8} {_fmt(kap.get('ap'), 3):>8} {_fmt(kap.get('ac'), 3):>8}"
        )
    lines.append("")
    lines.append(f"{'metric':<12} {'all':>8} {'ap':>8}")
    lines.append(f"{'uuas':<12} {_fmt(report.uuas.get('all')):>8} {_fmt(report.uuas.get('ap')):>8}")
    lines.append(f"{'ulas':<12} {_fmt(report.ulas.get('all')):>8} {_fmt(report.ulas.get('ap')):>8}")
    return "\n".join(lines)


def write_agreement_report(outdir: Path, report: AgreementReport) -> list[Path]:
    outdir.mkdir(parents=True, exist_ok=True)
    json_path = outdir / "agreement.json"
    write_json(json_path, report.to_dict())
    rows = []
    for cat in CATEGORIES:
        for flt, value in report.pct_label.get(cat, {}).items():
            rows.append([cat, flt, "percent", "" if value is None else f"{value:.6f}"])
        for flt, value in report.fleiss_kappa.get(cat, {}).items():
            rows.append([cat, flt, "kappa", "" if value is None else f"{value:.6f}"])
    for flt, value in report.uuas.items():
        rows.append(["attachment", flt, "uuas", "" if value is None else f"{value:.6f}"])
    for flt, value in report.ulas.items():
        rows.append(["attachment", flt, "ulas", "" if value is None else f"{value:.6f}"])
    csv_path = outdir / "agreement.csv"
    write_csv(csv_path, ["category", "filter", "measure", "value"], rows)
    txt_path = outdir / "agreement.txt"
    txt_path.write_text(agreement_table(report) + "\n", encoding="utf-8")
    fig_path = outdir / "agreement.png"
    _figure_agreement(report, fig_path)
    return [json_path, csv_path, txt_path, fig_path]


def _figure_agreement(report: AgreementReport, path: Path) -> None:
    fig, (left, right) = plt.subplots(1, 2, figsize=(9, 4))
    filters = ["all", "ap", "ac"]
    x = range(len(CATEGORIES))
    width = 0.25
    for i, flt in enumerate(filters):
        values = [report.pct_label[cat].get(flt) or 0.0 for cat in CATEGORIES]
        left.bar([v + (i - 1) * width for v in x], values, width, label=flt.upper())
    left.set_xticks(list(x))
    left.set_xticklabels(CATEGORIES, fontsize=8)
    left.set_ylim(0, 100)
    left.set_ylabel("pairwise agreement (%)")
    left.legend()
    for i, flt in enumerate(filters):
        values = [report.fleiss_kappa[cat].get(flt) or 0.0 for cat in CATEGORIES]
        right.bar([v + (i - 1) * width for v in x], values, width, label=flt.upper())
    right.set_xticks(list(x))
    right.set_xticklabels(CATEGORIES, fontsize=8)
    right.set_ylim(0, 1)
    right.set_ylabel("Fleiss' kappa")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


# ---------------------------------------------------------------------------
# Training curves.
# ---------------------------------------------------------------------------


def write_training_report(outdir: Path, log: Sequence[EpochRecord]) -> list[Path]:
    outdir.mkdir(parents=True, exist_ok=True)
    json_path = outdir / "training.json"
    write_json(json_path, [r.to_dict() for r in log])
    csv_path = outdir / "training.csv"
    write_csv(
        csv_path,
        ["phase", "epoch", "train_loss", "dev_loss", "lr", "event"],
        [[r.phase, r.epoch, repr(r.train_loss), repr(r.dev_loss), repr(r.lr), r.event] for r in log],
    )
    fig_path = outdir / "training.png"
    fig, ax = plt.subplots(figsize=(7, 4))
    for phase in sorted({r.phase for r in log}):
        rows = [r for r in log if r.phase == phase]
        ax.plot([r.epoch for r in rows], [r.dev_loss for r in rows], label=f"{phase} dev")
        ax.plot(
            [r.epoch for r in rows],
            [r.train_loss for r in rows],
            linestyle="--",
            alpha=0.6,
            label=f"{phase} train",
        )
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.legend()
    ax.set_title("Training")
    fig.tight_layout()
    fig.savefig(fig_path, dpi=150)
    plt.close(fig)
    return [json_path, csv_path, fig_path]


# ---------------------------------------------------------------------------
# Corpus statistics.
# ---------------------------------------------------------------------------


def corpus_stats(annotations: Sequence[WordAnnotation]) -> dict:
    label_counts = {kind.value: 0 for kind in LabelKind}
    senses_per_word: list[int] = []
    cluster_counts: list[int] = []
    splits = 0
    virtuals = 0
    conduits = 0
    for ann in annotations:
        senses_per_word.append(len(ann.senses))
        cluster_counts.append(partition(ann).cluster_count)
        for s in ann.senses:
            label_counts[s.label.kind.value] += 1
            splits += s.id.is_split_half
            virtuals += s.id.is_virtual
            conduits += s.conduit
    n_senses = sum(senses_per_word)
    return {
        "words": len(annotations),
        "senses": n_senses,
        "labels": label_counts,
        "mean_senses_per_word": n_senses / len(annotations) if annotations else 0.0,
        "mean_clusters_per_word": sum(cluster_counts) / len(cluster_counts) if cluster_counts else 0.0,
        "split_halves": splits,
        "virtual_senses": virtuals,
        "conduits": conduits,
        "senses_per_word_histogram": {
            str(k): senses_per_word.count(k) for k in sorted(set(senses_per_word))
        },
    }


def write_stats_report(outdir: Path, stats: dict) -> list[Path]:
    outdir.mkdir(parents=True, exist_ok=True)
    json_path = outdir / "stats.json"
    write_json(json_path, stats)
    csv_path = outdir / "stats.csv"
    rows = [[key, json.dumps(value)] for key, value in stats.items()]
    write_csv(csv_path, ["statistic", "value"], rows)
    fig_path = outdir / "stats.png"
    fig, (left, right) = plt.subplots(1, 2, figsize=(9, 4))
    hist = stats["senses_per_word_histogram"]
    left.bar(list(hist.keys()), list(hist.values()))
    left.set_xlabel("senses per word")
    left.set_ylabel("words")
    labels = stats["labels"]
    right.bar(list(labels.keys()), list(labels.values()))
    right.set_ylabel("senses")
    fig.tight_layout()
    fig.savefig(fig_path, dpi=150)
    plt.close(fig)
    return [json_path, csv_path, fig_path]


def write_significance_report(outdir: Path, results: Sequence[SignificanceResult]) -> list[Path]:
    outdir.mkdir(parents=True, exist_ok=True)
    json_path = outdir / "significance.json"
    write_json(json_path, [r.to_dict() for r in results])
    csv_path = outdir / "significance.csv"
    write_csv(
        csv_path,
        ["model_a", "model_b", "metric", "p_value", "r", "alpha", "n_comparisons", "significant"],
        [
            [r.model_a, r.model_b, r.metric, repr(r.p_value), r.r, r.alpha, r.n_comparisons, r.significant]
            for r in results
        ],
    )
    return [json_path, csv_path]
