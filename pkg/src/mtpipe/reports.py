"""Rendering of reports: key=value lines and aligned plain-text tables."""

from __future__ import annotations

from decimal import ROUND_HALF_UP, Decimal
from typing import Any, Mapping, Sequence

from .errors import DataError


def render_kv(data: Mapping[str, Any], prefix: str = "") -> list[str]:
    """Flatten a report dict into sorted key=value lines."""
    lines: list[str] = []
    for key in data:
        value = data[key]
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            lines.extend(render_kv(value, prefix=f"{name}."))
        else:
            lines.append(f"{name}={value}")
    return lines


def round_half_up(value: float, places: int = 0) -> float:
    quantum = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def _render_rows(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt(cells: Sequence[str]) -> str:
        return "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(cells)).rstrip()
    sep = "-" * (sum(widths) + 2 * (len(widths) - 1))
    return "\n".join([fmt(headers), sep] + [fmt(r) for r in rows])


def report_table(manifest_data: Mapping[str, Any], table: str) -> str:
    """Render one of the report tables from a manifest's stage data.

    data_stats: per-corpus #Sents / #Vocab / Avg.Len (Avg.Len rounded to
    the nearest integer for presentation); synthetic_stats: the same for
    a backtranslation run's sides; results: per-system Valid/Test BLEU.
    """
    stages = manifest_data.get("stages", {})
    if table == "data_stats":
        stats = stages.get("stats")
        if not stats:
            raise DataError("manifest has no 'stats' stage data for table data_stats")
        rows = [
            [row["name"], str(row["n_sents"]), str(row["vocab_size"]), str(int(round_half_up(row["avg_len"])))]
            for row in stats
        ]
        return _render_rows(["Data", "#Sents", "#Vocab", "Avg.Len"], rows)
    if table == "synthetic_stats":
        bt = stages.get("backtranslate")
        if not bt:
            raise DataError("manifest has no 'backtranslate' stage data for table synthetic_stats")
        report = bt["report"] if "report" in bt else bt
        rows = []
        for name, side in (("synthetic (src)", "src_stats"), ("synthetic (tgt)", "tgt_stats")):
            stats = report[side]
            rows.append(
                [name, str(stats["n_sents"]), str(stats["vocab_size"]), str(int(round_half_up(stats["avg_len"])))]
            )
        return _render_rows(["Data", "#Sents", "#Vocab", "Avg.Len"], rows)
    if table == "results":
        score_rows = stages.get("score")
        if not score_rows:
            raise DataError("manifest has no 'score' stage data for table results")
        rows = []
        for row in score_rows:
            def cell(key: str) -> str:
                value = row.get(key)
                return "N/A" if value is None else f"{value:.1f}"
            rows.append([row.get("system", "system"), cell("valid"), cell("test")])
        return _render_rows(["Model", "Valid", "Test"], rows)
    raise DataError(f"unknown table {table!r} (expected data_stats, synthetic_stats or results)")
