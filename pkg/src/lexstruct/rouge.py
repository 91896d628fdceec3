"""From-scratch ROUGE-1/2/L/Lsum and the model-comparison report.

Tokenization lowercases and splits on whitespace and punctuation, keeping
hyphens between digits so instrument numbers like ``64-46`` stay atomic.
Reported numbers are F1 by convention (precision and recall are retained on
every score object); percentages use half-up rounding to two decimals.
"""

from __future__ import annotations

import csv
import re
from collections import Counter
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import IO, Mapping, Sequence

from .triples import KnowledgeTriple, format_eid


class MismatchedArticleSets(ValueError):
    """Models in one report were not evaluated over the same articles."""


_TOKEN_RE = re.compile(r"\d+(?:-\d+)+|\w+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Score:
    precision: float
    recall: float
    f1: float


_ZERO = Score(0.0, 0.0, 0.0)


def _f1(p: float, r: float) -> float:
    if p + r == 0:
        return 0.0
    return 2 * p * r / (p + r)


def _score(matches: int, gen_total: int, ref_total: int) -> Score:
    if gen_total == 0 or ref_total == 0:
        return _ZERO
    p = matches / gen_total
    r = matches / ref_total
    return Score(p, r, _f1(p, r))


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(gen: Sequence[str], ref: Sequence[str], n: int) -> Score:
    """Clipped n-gram overlap. Either side empty (in n-gram space) scores 0."""
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    gen_grams = _ngrams(gen, n)
    ref_grams = _ngrams(ref, n)
    matches = sum((gen_grams & ref_grams).values())
    return _score(matches, sum(gen_grams.values()), sum(ref_grams.values()))


def _lcs_table(a: Sequence[str], b: Sequence[str]) -> list[list[int]]:
    rows = len(a) + 1
    cols = len(b) + 1
    table = [[0] * cols for _ in range(rows)]
    for i in range(1, rows):
        row = table[i]
        prev = table[i - 1]
        ai = a[i - 1]
        for j in range(1, cols):
            if ai == b[j - 1]:
                row[j] = prev[j - 1] + 1
            else:
                row[j] = prev[j] if prev[j] >= row[j - 1] else row[j - 1]
    return table


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    return _lcs_table(a, b)[len(a)][len(b)]


def rouge_l(gen: Sequence[str], ref: Sequence[str]) -> Score:
    length = lcs_length(gen, ref)
    return _score(length, len(gen), len(ref))


def _lcs_indices(ref: Sequence[str], gen: Sequence[str]) -> set[int]:
    """Positions in ref of one longest common subsequence with gen."""
    if not ref or not gen:
        return set()
    table = _lcs_table(ref, gen)
    i, j = len(ref), len(gen)
    hits: set[int] = set()
    while i > 0 and j > 0:
        if ref[i - 1] == gen[j - 1]:
            hits.add(i - 1)
            i -= 1
            j -= 1
        elif table[i - 1][j] >= table[i][j - 1]:
            i -= 1
        else:
            j -= 1
    return hits


def rouge_lsum(
    gen_lines: Sequence[Sequence[str]], ref_lines: Sequence[Sequence[str]]
) -> Score:
    """Summary-level LCS.

    For each reference line, union the LCS hit positions against every
    generated line; each token occurrence on either side is consumable once.
    """
    ref_total = sum(len(line) for line in ref_lines)
    gen_total = sum(len(line) for line in gen_lines)
    if ref_total == 0 or gen_total == 0:
        return _ZERO
    ref_counts = Counter(tok for line in ref_lines for tok in line)
    gen_counts = Counter(tok for line in gen_lines for tok in line)
    hits = 0
    for ref_line in ref_lines:
        union: set[int] = set()
        for gen_line in gen_lines:
            union |= _lcs_indices(ref_line, gen_line)
        for idx in sorted(union):
            token = ref_line[idx]
            if gen_counts[token] > 0 and ref_counts[token] > 0:
                hits += 1
                gen_counts[token] -= 1
                ref_counts[token] -= 1
    return _score(hits, gen_total, ref_total)


@dataclass(frozen=True)
class RougeScore:
    r1: Score
    r2: Score
    rl: Score
    rlsum: Score


def score_article(
    gen_triples: Sequence[KnowledgeTriple],
    ref_triples: Sequence[KnowledgeTriple],
) -> RougeScore:
    """Score one article's generated triples against the ground truth.

    Both lists serialize one triple per line, in the order given; R-1/R-2/R-L
    run over the concatenated text, R-Lsum over the line structure.
    """
    gen_lines = [t.serialize() for t in gen_triples]
    ref_lines = [t.serialize() for t in ref_triples]
    gen_tokens = tokenize("\n".join(gen_lines))
    ref_tokens = tokenize("\n".join(ref_lines))
    return RougeScore(
        r1=rouge_n(gen_tokens, ref_tokens, 1),
        r2=rouge_n(gen_tokens, ref_tokens, 2),
        rl=rouge_l(gen_tokens, ref_tokens),
        rlsum=rouge_lsum(
            [tokenize(line) for line in gen_lines],
            [tokenize(line) for line in ref_lines],
        ),
    )


def format_percent(value: float) -> str:
    """Half-up percentage with two decimals, e.g. 2/3 -> ``66.67``."""
    return str(
        Decimal(repr(value * 100)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    )


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 0.0


@dataclass
class ReportRow:
    model: str
    r1: Score
    r2: Score
    rl: Score
    rlsum: Score
    eid_seconds: float | None = None
    params_b: float | None = None
    ranks: dict[str, int] | None = None

    @property
    def eid(self) -> str:
        return format_eid(self.eid_seconds) if self.eid_seconds is not None else "-"


_METRIC_COLUMNS = ("r1", "r2", "rl", "rlsum")


@dataclass
class ComparisonReport:
    rows: list[ReportRow]

    def sorted_by(self, column: str, descending: bool = True) -> list[ReportRow]:
        if column == "model":
            return sorted(self.rows, key=lambda r: r.model, reverse=descending)
        if column == "eid":
            key = lambda r: r.eid_seconds if r.eid_seconds is not None else float("inf")
            return sorted(self.rows, key=key, reverse=descending)
        return sorted(self.rows, key=lambda r: getattr(r, column).f1, reverse=descending)

    def to_csv(self, sink: IO[str]) -> None:
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(["model", "R-1", "R-2", "R-L", "R-Lsum", "EID", "NPB"])
        for row in self.rows:
            writer.writerow(
                [
                    row.model,
                    format_percent(row.r1.f1),
                    format_percent(row.r2.f1),
                    format_percent(row.rl.f1),
                    format_percent(row.rlsum.f1),
                    row.eid,
                    "" if row.params_b is None else f"{row.params_b:g}",
                ]
            )

    def to_markdown(self, sink: IO[str]) -> None:
        sink.write("| Model | R-1 | R-2 | R-L | R-Lsum | EID | NPB |\n")
        sink.write("| --- | --- | --- | --- | --- | --- | --- |\n")
        for row in self.rows:
            cells = [row.model]
            for col in _METRIC_COLUMNS:
                value = format_percent(getattr(row, col).f1)
                rank = (row.ranks or {}).get(col)
                cells.append(f"{value} ({rank})" if rank else value)
            eid_rank = (row.ranks or {}).get("eid")
            cells.append(f"{row.eid} ({eid_rank})" if eid_rank else row.eid)
            cells.append("" if row.params_b is None else f"{row.params_b:g}")
            sink.write("| " + " | ".join(cells) + " |\n")


def _mean_score(scores: Sequence[Score]) -> Score:
    p = _mean([s.precision for s in scores])
    r = _mean([s.recall for s in scores])
    f1 = _mean([s.f1 for s in scores])
    return Score(p, r, f1)


def build_report(
    results: Mapping[str, Mapping[str, RougeScore]],
    timings: Mapping[str, float] | None = None,
    params: Mapping[str, float] | None = None,
) -> ComparisonReport:
    """Aggregate per-article scores into one row per model.

    Every model must cover the same article set. The best three values per
    column are flagged with rank markers (1..3); EID ranks lower-is-better.
    """
    models = list(results)
    if not models:
        return ComparisonReport(rows=[])
    reference_set = set(results[models[0]])
    for model in models[1:]:
        if set(results[model]) != reference_set:
            raise MismatchedArticleSets(
                f"article set for {model!r} differs from {models[0]!r}"
            )
    rows = []
    for model in models:
        per_article = results[model]
        rows.append(
            ReportRow(
                model=model,
                r1=_mean_score([s.r1 for s in per_article.values()]),
                r2=_mean_score([s.r2 for s in per_article.values()]),
                rl=_mean_score([s.rl for s in per_article.values()]),
                rlsum=_mean_score([s.rlsum for s in per_article.values()]),
                eid_seconds=(timings or {}).get(model),
                params_b=(params or {}).get(model),
            )
        )
    for row in rows:
        row.ranks = {}
    for col in _METRIC_COLUMNS:
        ordered = sorted(rows, key=lambda r: getattr(r, col).f1, reverse=True)
        for rank, row in enumerate(ordered[:3], start=1):
            row.ranks[col] = rank  # type: ignore[index]
    timed = [r for r in rows if r.eid_seconds is not None]
    for rank, row in enumerate(sorted(timed, key=lambda r: r.eid_seconds)[:3], start=1):
        row.ranks["eid"] = rank  # type: ignore[index]
    return ComparisonReport(rows=rows)
