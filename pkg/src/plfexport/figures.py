"""Figure rendering for the statistics report.

Companion to the delimited stats output: bar charts of the per-kind
individual counts and the per-predicate relation counts, written as PNG
files next to the report.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .ontology import PREDICATES, StatsReport  # noqa: E402

_KIND_LABELS = ("types", "consts", "axioms", "thms", "classes")


def _bar(path: str, labels, values, title: str, color: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(range(len(labels)), values, color=color)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_ylabel("count")
    ax.set_title(title)
    for i, v in enumerate(values):
        ax.annotate(str(v), (i, v), ha="center", va="bottom", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_stats_figures(report: StatsReport, out_dir: str) -> list[str]:
    """Write the two summary charts; returns the file paths."""
    os.makedirs(out_dir, exist_ok=True)
    kinds_png = os.path.join(out_dir, "individuals_by_kind.png")
    values = [report.types, report.consts, report.axioms, report.thms,
              report.classes]
    _bar(kinds_png, _KIND_LABELS, values,
         f"Exported individuals ({report.individuals} total, "
         f"{report.theories} theories, {report.locales} locales)",
         "#33658a")
    rel_png = os.path.join(out_dir, "relations_by_predicate.png")
    preds = list(PREDICATES)
    _bar(rel_png, preds, [report.relations.get(p, 0) for p in preds],
         f"Ontology relations ({report.relations_total} total)",
         "#86bbd8")
    return [kinds_png, rel_png]
