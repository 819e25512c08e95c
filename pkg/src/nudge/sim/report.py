"""Evaluation metrics and report rendering for nudge trials."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import timedelta
from pathlib import Path
from typing import Iterable, Mapping

from ..store import Corpus, NotificationLedger, Resolution

BUCKETS = ("<=1 day", "<=3 days", "<=1 week", ">1 week")
BUCKET_LIMITS = (timedelta(days=1), timedelta(days=3), timedelta(weeks=1))


def reduction_pct(baseline_avg: float, arm_avg: float) -> float:
    """Percentage decrease of ``arm_avg`` relative to ``baseline_avg``."""
    if baseline_avg == 0:
        raise ZeroDivisionError("baseline average is zero")
    return (baseline_avg - arm_avg) / baseline_avg * 100.0


def bucket_of(elapsed: timedelta | None) -> str:
    """Completion bucket; ``None`` (still open) lands in the last bucket."""
    if elapsed is not None:
        for name, limit in zip(BUCKETS, BUCKET_LIMITS):
            if elapsed <= limit:
                return name
    return BUCKETS[-1]


def bucket_completions(ledger: NotificationLedger, corpus: Corpus) -> dict[str, int]:
    """Count notified PRs by how long after the notification they closed."""
    counts = dict.fromkeys(BUCKETS, 0)
    for entry in ledger.entries.values():
        found = corpus.find_pr(entry.pr_id)
        closed = found[1].closed_at if found else None
        counts[bucket_of(closed - entry.notified_at if closed else None)] += 1
    return counts


def bucket_percentages(counts: Mapping[str, int]) -> dict[str, float]:
    total = sum(counts.values())
    if total == 0:
        return {k: 0.0 for k in counts}
    return {k: v / total * 100.0 for k, v in counts.items()}


@dataclass(frozen=True)
class ResolutionStats:
    positive: int
    negative: int
    none: int

    @property
    def total(self) -> int:
        return self.positive + self.negative + self.none

    @property
    def verdicts(self) -> int:
        return self.positive + self.negative

    @property
    def positive_rate(self) -> float:
        """Positive resolutions over every notification (non-responses included)."""
        return self.positive / self.total if self.total else 0.0

    @property
    def negative_share_of_verdicts(self) -> float:
        return self.negative / self.verdicts if self.verdicts else 0.0


def resolution_stats(ledger: NotificationLedger | Iterable) -> ResolutionStats:
    """Tally Resolved (positive), WontFix (negative) and everything else (no response)."""
    entries = ledger.entries.values() if isinstance(ledger, NotificationLedger) else ledger
    pos = neg = none = 0
    for e in entries:
        res = e.resolution if hasattr(e, "resolution") else Resolution(e)
        if res is Resolution.RESOLVED:
            pos += 1
        elif res is Resolution.WONT_FIX:
            neg += 1
        else:
            none += 1
    return ResolutionStats(pos, neg, none)


# --- report container and rendering -----------------------------------------------

@dataclass(frozen=True)
class ArmSummary:
    arm: str
    avg_lifetime_hours: float
    pr_count: int
    notified: int = 0
    buckets: Mapping[str, int] = field(default_factory=lambda: dict.fromkeys(BUCKETS, 0))
    resolutions: ResolutionStats = ResolutionStats(0, 0, 0)


@dataclass(frozen=True)
class TrialReport:
    arms: tuple[ArmSummary, ...]
    baseline: str = "None"
    lifetimes: Mapping[str, tuple[float, ...]] = field(default_factory=dict, compare=True)

    def arm(self, name: str) -> ArmSummary:
        for a in self.arms:
            if a.arm == name:
                return a
        raise KeyError(name)

    @property
    def reductions(self) -> dict[str, float | None]:
        try:
            base = self.arm(self.baseline).avg_lifetime_hours
        except KeyError:
            return {a.arm: None for a in self.arms}
        return {a.arm: (reduction_pct(base, a.avg_lifetime_hours) if base else None) for a in self.arms}

    @property
    def total_completed(self) -> int:
        return sum(a.pr_count for a in self.arms)


def _fmt(value: float | None, digits: int = 2) -> str:
    return "" if value is None else f"{value:.{digits}f}"


def lifetime_rows(report: TrialReport) -> list[list[str]]:
    reductions = report.reductions
    return [["arm", "avg_lifetime_hours", "pr_count", "reduction_pct"]] + [
        [a.arm, _fmt(a.avg_lifetime_hours), str(a.pr_count),
         "" if a.arm == report.baseline else _fmt(reductions[a.arm])]
        for a in report.arms
    ]


def bucket_rows(report: TrialReport) -> list[list[str]]:
    rows = [["arm", "bucket", "count", "percent"]]
    for a in report.arms:
        if not a.notified:
            continue
        pct = bucket_percentages(a.buckets)
        rows += [[a.arm, b, str(a.buckets[b]), _fmt(pct[b])] for b in BUCKETS]
    return rows


def resolution_rows(report: TrialReport) -> list[list[str]]:
    rows = [["arm", "positive", "negative", "verdicts", "no_response", "total", "positive_rate_pct"]]
    for a in report.arms:
        if not a.notified:
            continue
        r = a.resolutions
        rows.append([a.arm, str(r.positive), str(r.negative), str(r.verdicts), str(r.none), str(r.total),
                     _fmt(r.positive_rate * 100)])
    return rows


def _csv(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _text_table(title: str, rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    line = "+".join("-" * (w + 2) for w in widths)
    out = [title, line]
    for n, row in enumerate(rows):
        out.append("|".join(f" {cell.rjust(w) if n else cell.ljust(w)} " for cell, w in zip(row, widths)))
        if n == 0:
            out.append(line)
    out.append(line)
    return "\n".join(out) + "\n"


def render_text(report: TrialReport) -> str:
    return "\n".join([
        _text_table("Average pull request lifetime (hours)", lifetime_rows(report)),
        _text_table("Completion after notification", bucket_rows(report)),
        _text_table("Notification resolutions", resolution_rows(report)),
    ])


def render_svg(report: TrialReport, width: int = 480, height: int = 240) -> str:
    """Grouped bar chart of completion-bucket percentages per notified arm."""
    arms = [a for a in report.arms if a.notified]
    margin, base = 40, height - 40
    group_w = (width - 2 * margin) / len(BUCKETS)
    bar_w = group_w / (len(arms) + 1) if arms else group_w
    colors = ("#4e79a7", "#f28e2b", "#59a14f")
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<line x1="{margin}" y1="{base}" x2="{width - margin}" y2="{base}" stroke="black"/>']
    for g, bucket in enumerate(BUCKETS):
        x0 = margin + g * group_w
        parts.append(f'<text x="{x0 + group_w / 2:.1f}" y="{base + 16}" font-size="11" '
                     f'text-anchor="middle">{bucket.replace("<", "&lt;").replace(">", "&gt;")}</text>')
        for i, a in enumerate(arms):
            pct = bucket_percentages(a.buckets)[bucket]
            h = pct / 100 * (base - margin)
            parts.append(f'<rect x="{x0 + (i + 0.5) * bar_w:.1f}" y="{base - h:.1f}" width="{bar_w:.1f}" '
                         f'height="{h:.1f}" fill="{colors[i % len(colors)]}"><title>{a.arm}: {pct:.2f}%</title></rect>')
    for i, a in enumerate(arms):
        parts.append(f'<text x="{margin + i * 110}" y="20" font-size="11" fill="{colors[i % len(colors)]}">{a.arm}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(report: TrialReport, out_dir: str | Path, svg: bool = True) -> list[Path]:
    """Write CSV tables, a text summary, and optionally an SVG chart; return the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "lifetimes.csv": _csv(lifetime_rows(report)),
        "buckets.csv": _csv(bucket_rows(report)),
        "resolutions.csv": _csv(resolution_rows(report)),
        "report.txt": render_text(report),
    }
    if svg:
        files["buckets.svg"] = render_svg(report)
    paths = []
    for name, text in files.items():
        path = out / name
        path.write_text(text, encoding="utf-8")
        paths.append(path)
    return paths
