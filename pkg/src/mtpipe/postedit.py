"""Rule-based correction of numeric and date values in translations.

Chinese source side: arabic coefficients with magnitude characters
(万 = 10^4, 亿 = 10^8, chainable as in 1亿2000万), bare arabic numbers,
and dates 年/月/日. Vietnamese target side: digit groups with '.' as the
thousands separator and ',' as the decimal mark, magnitude words
tỷ = 10^9, triệu = 10^6, nghìn/ngàn = 10^3, and D/M/Y dates.

Entities on the two sides are aligned monotonically per kind (dates to
dates, numbers to numbers), never by value: values are exactly what may
be wrong. When counts match, pairs align index-wise; when they differ,
only value-anchored prefix/suffix pairs plus a lone middle pair are
corrected, and everything else is left untouched and reported, so a
correct translation is never degraded.

All values are exact (fractions), so parse -> render -> parse round-trips
without drift and corrections are idempotent.

The reverse direction (Vietnamese source, Chinese target) is implemented
behind the same interface but is experimental: it has no reference
examples, only symmetry with the forward direction.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .errors import DataError

_DAYS_IN_MONTH = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)


def _is_leap(year: int) -> bool:
    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)


def _valid_date(year: int | None, month: int, day: int) -> bool:
    """Proleptic Gregorian validity; yearless dates allow Feb 29."""
    if not 1 <= month <= 12 or day < 1:
        return False
    limit = _DAYS_IN_MONTH[month - 1]
    if month == 2 and (year is None or _is_leap(year)):
        limit = 29
    return day <= limit


@dataclass(frozen=True, slots=True)
class DateValue:
    """A calendar date; year may be unknown (None) for forms like 12月1日."""

    year: int | None
    month: int
    day: int


@dataclass(frozen=True, slots=True)
class NumericEntity:
    """A parsed number or date with its location in the text."""

    kind: str  # "number" | "date"
    value: Fraction | DateValue
    span: tuple[int, int]
    surface: str
    unit_word: str | None = None


@dataclass(frozen=True, slots=True)
class Rules:
    """Magnitude-word tables; extend via a rules file without code changes."""

    zh_units: tuple[tuple[str, int], ...] = (("亿", 8), ("万", 4))
    vi_units: tuple[tuple[str, int], ...] = (("tỷ", 9), ("triệu", 6), ("nghìn", 3), ("ngàn", 3))

    @classmethod
    def from_file(cls, path: str) -> "Rules":
        """Load unit tables from a JSON file: {"zh_units": {"亿": 8, ...},
        "vi_units": {"tỷ": 9, ...}}. Omitted tables keep their defaults."""
        with open(path, encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: rules file is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise DataError(f"{path}: rules file must be a JSON object")
        unknown = set(raw) - {"zh_units", "vi_units"}
        if unknown:
            raise DataError(f"{path}: unknown rules keys {sorted(unknown)}")

        def table(key: str, default: tuple) -> tuple:
            if key not in raw:
                return default
            entries = raw[key]
            if not isinstance(entries, dict) or not all(
                isinstance(k, str) and k and isinstance(v, int) and v > 0 for k, v in entries.items()
            ):
                raise DataError(f"{path}: {key} must map words to positive integer powers of ten")
            return tuple(sorted(entries.items(), key=lambda kv: (-kv[1], kv[0])))

        return cls(zh_units=table("zh_units", cls.zh_units), vi_units=table("vi_units", cls.vi_units))


DEFAULT_RULES = Rules()

# Digit-group grammars. Chinese allows ','-grouped thousands and '.'
# decimals; Vietnamese groups with '.' and marks decimals with ','.
_ZH_NUM = r"(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?"
_VI_NUM = r"(?:\d{1,3}(?:\.\d{3})+|\d+)(?:,\d+)?"


def _zh_to_fraction(s: str) -> Fraction:
    return Fraction(s.replace(",", ""))


def _vi_to_fraction(s: str) -> Fraction:
    return Fraction(s.replace(".", "").replace(",", "."))


@dataclass(frozen=True)
class _Grammar:
    date: re.Pattern
    unit_chain: re.Pattern
    bare: re.Pattern
    num_re: str
    units: tuple[tuple[str, int], ...]
    to_fraction: Callable[[str], Fraction]
    date_groups: str  # "ymd" or "dmy"


def _zh_grammar(rules: Rules) -> _Grammar:
    unit_alt = "|".join(re.escape(u) for u, _ in rules.zh_units)
    return _Grammar(
        date=re.compile(r"(?<!\d)(?:(\d{1,4})年)?(\d{1,2})月(\d{1,2})日"),
        unit_chain=re.compile(rf"(?<![\d.,])(?:{_ZH_NUM}(?:{unit_alt}))+"),
        bare=re.compile(rf"(?<![\d.,]){_ZH_NUM}(?!\d)"),
        num_re=_ZH_NUM,
        units=rules.zh_units,
        to_fraction=_zh_to_fraction,
        date_groups="ymd",
    )


def _vi_grammar(rules: Rules) -> _Grammar:
    unit_alt = "|".join(re.escape(u) for u, _ in rules.vi_units)
    return _Grammar(
        date=re.compile(r"(?<![\d/])(\d{1,2})/(\d{1,2})/(\d{1,4})(?![\d/])"),
        unit_chain=re.compile(rf"(?<![\d.,])(?:{_VI_NUM}\s?(?:{unit_alt})\b)(?:\s{_VI_NUM}\s?(?:{unit_alt})\b)*"),
        bare=re.compile(rf"(?<![\d.,]){_VI_NUM}(?!\d)"),
        num_re=_VI_NUM,
        units=rules.vi_units,
        to_fraction=_vi_to_fraction,
        date_groups="dmy",
    )


def _parse_unit_chain(surface: str, g: _Grammar) -> tuple[Fraction, str] | None:
    """Value and leading unit word of a coefficient+unit chain.

    Magnitudes must strictly decrease along the chain (1亿2000万 is valid,
    2000万1亿 is not); otherwise the candidate is rejected.
    """
    unit_alt = "|".join(re.escape(u) for u, _ in g.units)
    piece = re.compile(rf"({g.num_re})\s?({unit_alt})")
    powers = dict(g.units)
    total = Fraction(0)
    last_power: int | None = None
    lead_unit: str | None = None
    pos = 0
    while pos < len(surface):
        m = piece.match(surface, pos)
        if m is None:
            return None
        power = powers[m.group(2)]
        if last_power is not None and power >= last_power:
            return None
        total += g.to_fraction(m.group(1)) * 10 ** power
        if lead_unit is None:
            lead_unit = m.group(2)
        last_power = power
        pos = m.end()
        while pos < len(surface) and surface[pos] == " ":
            pos += 1
    if lead_unit is None:
        return None
    return total, lead_unit


def _resolve_overlaps(candidates: list[NumericEntity]) -> list[NumericEntity]:
    # Longest match wins at equal starts; accepted entities never overlap.
    ordered = sorted(candidates, key=lambda e: (e.span[0], -(e.span[1] - e.span[0])))
    accepted: list[NumericEntity] = []
    last_end = -1
    for ent in ordered:
        if ent.span[0] >= last_end:
            accepted.append(ent)
            last_end = ent.span[1]
    return accepted


def _extract(text: str, g: _Grammar) -> list[NumericEntity]:
    candidates: list[NumericEntity] = []
    for m in g.date.finditer(text):
        if g.date_groups == "ymd":
            year = int(m.group(1)) if m.group(1) else None
            month, day = int(m.group(2)), int(m.group(3))
        else:
            day, month, year = int(m.group(1)), int(m.group(2)), int(m.group(3))
        if not _valid_date(year, month, day):
            continue
        candidates.append(NumericEntity("date", DateValue(year, month, day), (m.start(), m.end()), m.group(0)))
    for m in g.unit_chain.finditer(text):
        parsed = _parse_unit_chain(m.group(0), g)
        if parsed is None:
            continue
        value, unit = parsed
        candidates.append(NumericEntity("number", value, (m.start(), m.end()), m.group(0), unit))
    for m in g.bare.finditer(text):
        candidates.append(NumericEntity("number", g.to_fraction(m.group(0)), (m.start(), m.end()), m.group(0)))
    return _resolve_overlaps(candidates)


def extract_zh_entities(text: str, rules: Rules = DEFAULT_RULES) -> list[NumericEntity]:
    """Numbers (万/亿 forms and bare digits) and 年月日 dates, in span order."""
    return _extract(text, _zh_grammar(rules))


def extract_vi_entities(text: str, rules: Rules = DEFAULT_RULES) -> list[NumericEntity]:
    """Numbers (magnitude words, separator digits) and D/M/Y dates, in span order."""
    return _extract(text, _vi_grammar(rules))


def _decimal_parts(value: Fraction, max_places: int = 12) -> tuple[int, str] | None:
    """(integer part, fractional digits) when value terminates; None otherwise."""
    if value < 0:
        return None
    intpart = value.numerator // value.denominator
    rest = value - intpart
    digits = ""
    for _ in range(max_places):
        if rest == 0:
            break
        rest *= 10
        d = rest.numerator // rest.denominator
        digits += str(d)
        rest -= d
    if rest != 0:
        return None
    return intpart, digits.rstrip("0")


def _group_thousands(n: int, sep: str) -> str:
    s = str(n)
    groups = []
    while len(s) > 3:
        groups.append(s[-3:])
        s = s[:-3]
    groups.append(s)
    return sep.join(reversed(groups))


def _render_decimal(value: Fraction, thousands_sep: str | None, decimal_mark: str) -> str:
    parts = _decimal_parts(value)
    if parts is None:
        raise DataError(f"cannot render non-terminating value {value}")
    intpart, digits = parts
    rendered = _group_thousands(intpart, thousands_sep) if thousands_sep else str(intpart)
    return rendered + decimal_mark + digits if digits else rendered


def _clean_coefficient(value: Fraction, power: int) -> Fraction | None:
    """value / 10^power when that is >= 1 and integer or one decimal."""
    coef = value / 10 ** power
    if coef >= 1 and (coef.denominator == 1 or (coef * 10).denominator == 1):
        return coef
    return None


def _preferred_coefficient(value: Fraction, power: int) -> Fraction | None:
    """value / 10^power when that keeps 1..4 integer digits and terminates."""
    coef = value / 10 ** power
    if 1 <= coef < 10 ** 4 and _decimal_parts(coef) is not None:
        return coef
    return None


def render_vi_number(value: Fraction | int, preferred_unit: str | None = None, rules: Rules = DEFAULT_RULES) -> str:
    """Vietnamese rendering of an exact non-negative value.

    Prefers the caller-supplied magnitude word when the coefficient stays
    in [1, 10^4), which is how an existing unit in the translation is kept
    and only its coefficient rescaled; otherwise picks the largest unit
    giving a clean coefficient (integer or one decimal, at least 1); else
    plain digits with '.' thousands grouping and ',' decimals.
    """
    value = Fraction(value)
    if value < 0:
        raise DataError("cannot render a negative value")
    units = dict(rules.vi_units)
    if preferred_unit in units:
        coef = _preferred_coefficient(value, units[preferred_unit])
        if coef is not None:
            return f"{_render_decimal(coef, None, ',')} {preferred_unit}"
    for unit, power in rules.vi_units:
        if unit == "ngàn":
            continue  # parse-only alias of nghìn
        coef = _clean_coefficient(value, power)
        if coef is not None:
            return f"{_render_decimal(coef, None, ',')} {unit}"
    return _render_decimal(value, ".", ",")


def render_vi_date(date: DateValue) -> str:
    """D/M/Y with no zero padding (D/M when the year is unknown)."""
    if not _valid_date(date.year, date.month, date.day):
        raise DataError(f"invalid date {date}")
    if date.year is None:
        return f"{date.day}/{date.month}"
    return f"{date.day}/{date.month}/{date.year}"


def render_zh_number(value: Fraction | int, preferred_unit: str | None = None, rules: Rules = DEFAULT_RULES) -> str:
    """Chinese rendering: 万/亿 chains for clean magnitudes, else plain digits.

    Reverse-direction counterpart of render_vi_number; experimental.
    """
    value = Fraction(value)
    if value < 0:
        raise DataError("cannot render a negative value")
    units = dict(rules.zh_units)
    if preferred_unit in units:
        coef = _preferred_coefficient(value, units[preferred_unit])
        if coef is not None:
            return f"{_render_decimal(coef, None, '.')}{preferred_unit}"
    smallest_power = min(p for _, p in rules.zh_units)
    if value.denominator == 1 and value >= 10 ** smallest_power and value % 10 ** smallest_power == 0:
        chain = ""
        rest = int(value)
        for unit, power in rules.zh_units:
            scale = 10 ** power
            if rest >= scale:
                chain += f"{rest // scale}{unit}"
                rest %= scale
        if rest == 0 and chain:
            return chain
    for unit, power in rules.zh_units:
        coef = _clean_coefficient(value, power)
        if coef is not None:
            return f"{_render_decimal(coef, None, '.')}{unit}"
    return _render_decimal(value, None, ".")


def render_zh_date(date: DateValue) -> str:
    """Y年M月D日 with no zero padding (M月D日 when the year is unknown)."""
    if not _valid_date(date.year, date.month, date.day):
        raise DataError(f"invalid date {date}")
    if date.year is None:
        return f"{date.month}月{date.day}日"
    return f"{date.year}年{date.month}月{date.day}日"


@dataclass(frozen=True, slots=True)
class Edit:
    span: tuple[int, int]
    before: str
    after: str
    reason: str


@dataclass(frozen=True, slots=True)
class Skipped:
    """An entity left untouched because its alignment was ambiguous."""

    side: str  # "src" | "tgt"
    kind: str
    span: tuple[int, int]
    surface: str


@dataclass(frozen=True)
class EditScript:
    """Non-overlapping replacements in increasing span order, applied left to right."""

    edits: tuple[Edit, ...] = ()
    skipped: tuple[Skipped, ...] = ()

    def __post_init__(self) -> None:
        last_end = 0
        for e in self.edits:
            if e.span[1] < e.span[0] or e.span[0] < last_end:
                raise ValueError("edit spans must be increasing and non-overlapping")
            last_end = e.span[1]

    def apply(self, text: str) -> str:
        out = []
        prev = 0
        for e in self.edits:
            out.append(text[prev:e.span[0]])
            out.append(e.after)
            prev = e.span[1]
        out.append(text[prev:])
        return "".join(out)


def _values_equal(a: NumericEntity, b: NumericEntity) -> bool:
    if a.kind != b.kind:
        return False
    if a.kind == "number":
        return a.value == b.value
    av, bv = a.value, b.value
    if av.year is None or bv.year is None:
        return (av.month, av.day) == (bv.month, bv.day)
    return (av.year, av.month, av.day) == (bv.year, bv.month, bv.day)


def _align_kind(
    src: list[NumericEntity], tgt: list[NumericEntity]
) -> tuple[list[tuple[NumericEntity, NumericEntity]], list[tuple[str, NumericEntity]]]:
    m, n = len(src), len(tgt)
    if m == n:
        return list(zip(src, tgt)), []
    # Counts differ: anchor pairs whose values already agree from both ends;
    # a lone middle pair is still unambiguous, anything more is skipped.
    lo = 0
    while lo < min(m, n) and _values_equal(src[lo], tgt[lo]):
        lo += 1
    hi = 0
    while hi < min(m, n) - lo and _values_equal(src[m - 1 - hi], tgt[n - 1 - hi]):
        hi += 1
    pairs = [(src[i], tgt[i]) for i in range(lo)]
    pairs += [(src[m - hi + j], tgt[n - hi + j]) for j in range(hi)]
    mid_src = src[lo:m - hi]
    mid_tgt = tgt[lo:n - hi]
    if len(mid_src) == 1 and len(mid_tgt) == 1:
        pairs.append((mid_src[0], mid_tgt[0]))
        mid_src, mid_tgt = [], []
    skipped = [("src", e) for e in mid_src] + [("tgt", e) for e in mid_tgt]
    return pairs, skipped


def correct_translation(
    src: str,
    tgt: str,
    direction: str = "zh-vi",
    rules: Rules = DEFAULT_RULES,
) -> tuple[str, EditScript]:
    """Rewrite mistranslated numeric and date values in tgt to match src.

    direction "zh-vi" corrects a Vietnamese translation of a Chinese
    source; "vi-zh" is the experimental mirror. Numbers reuse the target's
    existing magnitude word where feasible; dates with an unknown source
    year keep the target's year.
    """
    if direction == "zh-vi":
        src_ents = extract_zh_entities(src, rules)
        tgt_ents = extract_vi_entities(tgt, rules)
        render_number: Callable = render_vi_number
        render_date: Callable = render_vi_date
    elif direction == "vi-zh":
        src_ents = extract_vi_entities(src, rules)
        tgt_ents = extract_zh_entities(tgt, rules)
        render_number = render_zh_number
        render_date = render_zh_date
    else:
        raise ValueError(f"unknown direction {direction!r}")

    edits: list[Edit] = []
    skipped: list[Skipped] = []
    for kind in ("number", "date"):
        pairs, skips = _align_kind(
            [e for e in src_ents if e.kind == kind],
            [e for e in tgt_ents if e.kind == kind],
        )
        skipped.extend(Skipped(side, e.kind, e.span, e.surface) for side, e in skips)
        for s_ent, t_ent in pairs:
            if _values_equal(s_ent, t_ent):
                continue
            if kind == "number":
                after = render_number(s_ent.value, preferred_unit=t_ent.unit_word, rules=rules)
                reason = "number-value"
            else:
                year = s_ent.value.year if s_ent.value.year is not None else t_ent.value.year
                after = render_date(DateValue(year, s_ent.value.month, s_ent.value.day))
                reason = "date-value"
            edits.append(Edit(t_ent.span, t_ent.surface, after, reason))

    edits.sort(key=lambda e: e.span)
    script = EditScript(tuple(edits), tuple(skipped))
    return script.apply(tgt), script


def correct_lines(
    src_lines: list[str],
    hyp_lines: list[str],
    direction: str = "zh-vi",
    rules: Rules = DEFAULT_RULES,
) -> tuple[list[str], list[dict]]:
    """Correct aligned files line by line.

    Returns the corrected lines and a per-edit report: line number
    (1-based), span, before, after, reason; skipped entities appear with
    reason "ambiguous-alignment".
    """
    if len(src_lines) != len(hyp_lines):
        raise DataError(f"source/hypothesis length mismatch: {len(src_lines)} vs {len(hyp_lines)}")
    corrected: list[str] = []
    rows: list[dict] = []
    for line_no, (src, hyp) in enumerate(zip(src_lines, hyp_lines), start=1):
        fixed, script = correct_translation(src, hyp, direction=direction, rules=rules)
        corrected.append(fixed)
        for e in script.edits:
            rows.append(
                {
                    "line": line_no,
                    "span": list(e.span),
                    "before": e.before,
                    "after": e.after,
                    "reason": e.reason,
                }
            )
        for s in script.skipped:
            rows.append(
                {
                    "line": line_no,
                    "span": list(s.span),
                    "before": s.surface,
                    "after": s.surface,
                    "reason": f"ambiguous-alignment ({s.side} {s.kind})",
                }
            )
    return corrected, rows
