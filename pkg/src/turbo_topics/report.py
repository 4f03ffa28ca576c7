"""Side-by-side rendering of unigram lists and merged phrase lists."""

from __future__ import annotations

import html
from typing import Dict, List, Sequence

from .growth import TopicPhraseReport


class ReportMismatch(ValueError):
    pass


def _check_keys(reports: Sequence[TopicPhraseReport], baselines: Dict[int, list]):
    have_r = {r.topic for r in reports}
    have_b = set(baselines)
    if have_r != have_b:
        parts = []
        if have_r - have_b:
            parts.append("no unigram list for topics " + ", ".join(map(str, sorted(have_r - have_b))))
        if have_b - have_r:
            parts.append("no phrase report for topics " + ", ".join(map(str, sorted(have_b - have_r))))
        raise ReportMismatch("; ".join(parts))


def _columns(report: TopicPhraseReport, unigrams: list, rows: int):
    left = [(w, float(p)) for w, p in sorted(unigrams, key=lambda wp: (-wp[1], wp[0]))][:rows]
    right = [(" ".join(e.ngram), e.mass) for e in report.entries][:rows]
    return left, right


def render_text(reports: Sequence[TopicPhraseReport], baselines: Dict[int, list], rows: int = 10) -> str:
    """Per topic, unigrams by probability beside n-grams by merged mass.

    ``baselines`` maps topic id to (word, probability) pairs.
    """
    _check_keys(reports, baselines)
    out = []
    for r in sorted(reports, key=lambda r: r.topic):
        left, right = _columns(r, baselines[r.topic], rows)
        width = max([len(f"{w}  {p:.4f}") for w, p in left] + [len("unigrams")])
        out.append(f"topic {r.topic}")
        out.append(f"{'unigrams':<{width}}  |  n-grams")
        for i in range(max(len(left), len(right))):
            a = f"{left[i][0]}  {left[i][1]:.4f}" if i < len(left) else ""
            b = f"{right[i][0]}  {right[i][1]:.4f}" if i < len(right) else ""
            out.append(f"{a:<{width}}  |  {b}".rstrip())
        out.append("")
    return "\n".join(out) + ("\n" if not out else "")


def render_html(reports: Sequence[TopicPhraseReport], baselines: Dict[int, list], rows: int = 10) -> str:
    _check_keys(reports, baselines)
    e = html.escape
    parts = ["<!DOCTYPE html>", "<html><head><meta charset=\"utf-8\"><title>topic phrases</title>",
             "<style>table{border-collapse:collapse;margin:1em}td,th{padding:2px 8px}"
             "td.m{text-align:right;color:#666}</style></head><body>"]
    for r in sorted(reports, key=lambda r: r.topic):
        left, right = _columns(r, baselines[r.topic], rows)
        parts.append(f"<table><caption>topic {r.topic}</caption>"
                     "<tr><th colspan=2>unigrams</th><th colspan=2>n-grams</th></tr>")
        for i in range(max(len(left), len(right))):
            a = f"<td>{e(left[i][0])}</td><td class=m>{left[i][1]:.4f}</td>" if i < len(left) else "<td></td><td></td>"
            b = f"<td>{e(right[i][0])}</td><td class=m>{right[i][1]:.4f}</td>" if i < len(right) else "<td></td><td></td>"
            parts.append(f"<tr>{a}{b}</tr>")
        parts.append("</table>")
    parts.append("</body></html>")
    return "\n".join(parts) + "\n"


def baselines_from_model(model_dump: dict) -> Dict[int, List[tuple]]:
    """(word, probability) lists from an LDA model dump's top-word counts."""
    out = {}
    for t in model_dump.get("topics", []):
        pairs = [(w, c) for w, c in t["top_words"]]
        total = t.get("n_assigned") or sum(c for _, c in pairs) or 1
        out[int(t["topic"])] = [(w, c / total) for w, c in pairs]
    return out
