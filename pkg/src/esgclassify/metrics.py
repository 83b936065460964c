"""Precision/recall/F1 over emitted label sets vs. gold, with micro, macro,
and support-weighted aggregates plus exact-set-match accuracy.

Conventions: a metric whose denominator is zero is 0. Macro-F1 averages
over labels with gold support or at least one prediction ("active" mode);
``macro="all-catalog"`` averages over every catalog label instead.
Accuracy is the fraction of articles whose emitted set equals the gold set
exactly, which for single-label data at k=1 is ordinary accuracy.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import LabelCatalog
from .errors import InputError
from .strategies import Prediction


@dataclass
class LabelCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def support(self) -> int:
        return self.tp + self.fn


@dataclass(frozen=True)
class LabelMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    per_label: dict[str, LabelMetrics]
    micro_precision: float
    micro_recall: float
    micro_f1: float
    macro_f1: float
    weighted_f1: float
    accuracy: float
    n_articles: int


def _safe_div(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def _f1(p: float, r: float) -> float:
    return _safe_div(2.0 * p * r, p + r)


def count_label_outcomes(predictions: Sequence[Prediction],
                         gold: Mapping[str, set],
                         catalog: LabelCatalog) -> dict[str, LabelCounts]:
    """Per-label tp/fp/fn between emitted sets and gold sets.

    For each article: a label in both emitted and gold is a tp, emitted
    only is a fp, gold only is a fn. Emitted lists are treated as sets.
    """
    counts = {label: LabelCounts() for label in catalog.ids()}
    seen = set()
    for pred in predictions:
        if pred.article_id in seen:
            raise InputError(f"duplicate prediction for article {pred.article_id!r}")
        seen.add(pred.article_id)
        if pred.article_id not in gold:
            raise InputError(f"prediction for {pred.article_id!r} has no gold entry")
        emitted = set(pred.emitted)
        gold_set = set(gold[pred.article_id])
        for label in emitted | gold_set:
            if label not in counts:
                raise InputError(f"label {label!r} not in catalog")
            c = counts[label]
            if label in emitted and label in gold_set:
                c.tp += 1
            elif label in emitted:
                c.fp += 1
            else:
                c.fn += 1
    return counts


def exact_match_count(predictions: Sequence[Prediction],
                      gold: Mapping[str, set]) -> int:
    return sum(1 for p in predictions
               if set(p.emitted) == set(gold[p.article_id]))


def compute_report(counts: Mapping[str, LabelCounts], n_articles: int,
                   exact_matches: int, macro: str = "active") -> MetricsReport:
    if macro not in ("active", "all-catalog"):
        raise InputError(f"macro mode must be 'active' or 'all-catalog', got {macro!r}")
    per_label = {}
    for label, c in counts.items():
        p = _safe_div(c.tp, c.tp + c.fp)
        r = _safe_div(c.tp, c.tp + c.fn)
        per_label[label] = LabelMetrics(precision=p, recall=r, f1=_f1(p, r),
                                        support=c.support)

    tp = sum(c.tp for c in counts.values())
    fp = sum(c.fp for c in counts.values())
    fn = sum(c.fn for c in counts.values())
    micro_p = _safe_div(tp, tp + fp)
    micro_r = _safe_div(tp, tp + fn)

    if macro == "active":
        macro_labels = [lab for lab, c in counts.items()
                        if c.support > 0 or c.tp + c.fp > 0]
    else:
        macro_labels = list(counts)
    macro_f1 = (sum(per_label[lab].f1 for lab in macro_labels) / len(macro_labels)
                if macro_labels else 0.0)

    total_support = sum(m.support for m in per_label.values())
    weighted_f1 = _safe_div(sum(m.support * m.f1 for m in per_label.values()),
                            total_support)

    return MetricsReport(per_label=per_label,
                         micro_precision=micro_p, micro_recall=micro_r,
                         micro_f1=_f1(micro_p, micro_r), macro_f1=macro_f1,
                         weighted_f1=weighted_f1,
                         accuracy=_safe_div(exact_matches, n_articles),
                         n_articles=n_articles)


def evaluate_predictions(predictions: Sequence[Prediction],
                         gold: Mapping[str, set], catalog: LabelCatalog,
                         macro: str = "active") -> MetricsReport:
    """Counts plus report in one step."""
    counts = count_label_outcomes(predictions, gold, catalog)
    return compute_report(counts, n_articles=len(predictions),
                          exact_matches=exact_match_count(predictions, gold),
                          macro=macro)


def gold_map(articles) -> dict[str, set]:
    return {a.id: set(a.gold_labels) for a in articles}


# ---------------------------------------------------------------------------
# Report serialization and run comparison


def report_to_dict(report: MetricsReport) -> dict:
    return {
        "n_articles": report.n_articles,
        "accuracy": report.accuracy,
        "micro_precision": report.micro_precision,
        "micro_recall": report.micro_recall,
        "micro_f1": report.micro_f1,
        "macro_f1": report.macro_f1,
        "weighted_f1": report.weighted_f1,
        "per_label": {label: {"precision": m.precision, "recall": m.recall,
                              "f1": m.f1, "support": m.support}
                      for label, m in report.per_label.items()},
    }


def report_from_dict(doc: Mapping) -> MetricsReport:
    try:
        per_label = {label: LabelMetrics(precision=m["precision"], recall=m["recall"],
                                         f1=m["f1"], support=m["support"])
                     for label, m in doc["per_label"].items()}
        return MetricsReport(per_label=per_label,
                             micro_precision=doc["micro_precision"],
                             micro_recall=doc["micro_recall"],
                             micro_f1=doc["micro_f1"], macro_f1=doc["macro_f1"],
                             weighted_f1=doc["weighted_f1"],
                             accuracy=doc["accuracy"],
                             n_articles=doc["n_articles"])
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed report document: {exc}") from exc


def save_report(report: MetricsReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_report(path) -> MetricsReport:
    with open(path, encoding="utf-8") as fh:
        return report_from_dict(json.load(fh))


_COMPARE_COLUMNS = ("run", "accuracy", "micro_f1", "macro_f1", "weighted_f1")


def compare_runs(reports: Mapping[str, MetricsReport],
                 key: str = "weighted_f1") -> list[dict]:
    """Rows sorted by the key metric, descending; ties break on run name."""
    if not reports:
        raise InputError("compare_runs needs at least one report")
    if key not in _COMPARE_COLUMNS[1:]:
        raise InputError(f"unknown comparison key {key!r}")
    rows = [{"run": name, "accuracy": r.accuracy, "micro_f1": r.micro_f1,
             "macro_f1": r.macro_f1, "weighted_f1": r.weighted_f1}
            for name, r in reports.items()]
    rows.sort(key=lambda row: (-row[key], row["run"]))
    return rows


def render_comparison_text(rows: Sequence[Mapping]) -> str:
    widths = {col: max(len(col), *(len(_cell(row[col])) for row in rows))
              for col in _COMPARE_COLUMNS}
    lines = ["  ".join(col.ljust(widths[col]) for col in _COMPARE_COLUMNS)]
    for row in rows:
        lines.append("  ".join(_cell(row[col]).ljust(widths[col])
                               for col in _COMPARE_COLUMNS))
    return "\n".join(lines) + "\n"


def render_comparison_csv(rows: Sequence[Mapping]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=_COMPARE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({col: _cell(row[col]) for col in _COMPARE_COLUMNS})
    return buf.getvalue()


def _cell(value) -> str:
    return f"{value:.4f}" if isinstance(value, float) else str(value)
