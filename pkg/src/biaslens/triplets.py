"""Forced-choice triplet evaluation and the self-preference score.

Each trial presents a query with three candidates: semantically relevant
(same concept, other culture), culturally relevant (same culture, other
concept) and non-relevant. The candidate with the highest similarity
wins; win proportions M_sem/M_cul/M_non over N trials give the
self-preference score SP = M_cul / M_sem. SP above 1 means the model
prefers cultural association over semantic faithfulness.

Exact score ties go to exactly one winner by fixed priority
sem > cul > non (bias-understating on purpose); every tie is counted and
reported so the rule stays auditable. SP is deliberately unclamped:
M_sem = 0 with cultural wins yields +inf, and 0/0 is reported as nan
("undefined"), never as a silent 0.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import AnnotatedSet, TripletEntry
from .errors import EmptyOutcomeSet, UnresolvedId
from .retrieval import ScorerConfig, TripletScores, score_triplet

WINNER_PRIORITY = ("sem", "cul", "non")


@dataclass(frozen=True)
class TripletOutcome:
    query_id: str
    winner: str
    scores: TripletScores
    tie: bool


@dataclass(frozen=True)
class WinTallies:
    """Win proportions per candidate type; they sum to 1 (exclusive winner)."""

    n: int
    m_sem: float
    m_cul: float
    m_non: float


@dataclass(frozen=True)
class GroupResult:
    tallies: WinTallies
    sp: float
    ties: int


@dataclass(frozen=True)
class SPReport:
    overall: GroupResult
    by_country: Mapping[str, GroupResult]
    by_language: Mapping[str, GroupResult]
    tie_count: int


def judge(scores: TripletScores) -> TripletOutcome:
    """Pick the winner by highest similarity; ties resolve sem > cul > non."""
    values = {"sem": scores.s_sem, "cul": scores.s_cul, "non": scores.s_non}
    for name, value in values.items():
        if not math.isfinite(value):
            raise ValueError(f"query {scores.query_id!r}: non-finite {name} score {value!r}")
    best = max(values.values())
    winners = [name for name in WINNER_PRIORITY if values[name] == best]
    return TripletOutcome(scores.query_id, winners[0], scores, tie=len(winners) > 1)


def tally(outcomes: Sequence[TripletOutcome]) -> WinTallies:
    """Win proportions over a collection of judged trials."""
    n = len(outcomes)
    if n == 0:
        raise EmptyOutcomeSet("no outcomes to tally")
    counts = {"sem": 0, "cul": 0, "non": 0}
    for outcome in outcomes:
        counts[outcome.winner] += 1
    return WinTallies(n, counts["sem"] / n, counts["cul"] / n, counts["non"] / n)


def self_preference(tallies: WinTallies) -> float:
    """SP = M_cul / M_sem, with +inf and nan sentinels instead of clamping."""
    if tallies.m_sem == 0.0:
        return math.inf if tallies.m_cul > 0.0 else math.nan
    return tallies.m_cul / tallies.m_sem


def _group_result(outcomes: Sequence[TripletOutcome]) -> GroupResult:
    tallies = tally(outcomes)
    ties = sum(1 for o in outcomes if o.tie)
    return GroupResult(tallies, self_preference(tallies), ties)


def evaluate_triplets(manifest: Iterable[TripletEntry], queries: AnnotatedSet,
                      images: AnnotatedSet, cfg: ScorerConfig) -> SPReport:
    """Score, judge and tally every manifest entry; group by country and language."""
    outcomes: list[TripletOutcome] = []
    by_country: dict[str, list[TripletOutcome]] = {}
    by_language: dict[str, list[TripletOutcome]] = {}
    for entry in manifest:
        try:
            query = queries.record(entry.query_id)
        except KeyError:
            raise UnresolvedId(f"query id {entry.query_id!r} not in query set") from None
        candidates = []
        for cand_id in (entry.sem_id, entry.cul_id, entry.non_id):
            try:
                candidates.append(images.record(cand_id))
            except KeyError:
                raise UnresolvedId(f"candidate id {cand_id!r} not in image set") from None
        outcome = judge(score_triplet(query, *candidates, cfg))
        outcomes.append(outcome)
        by_country.setdefault(entry.query_country, []).append(outcome)
        by_language.setdefault(entry.query_language, []).append(outcome)
    if not outcomes:
        raise EmptyOutcomeSet("manifest is empty")
    return SPReport(
        overall=_group_result(outcomes),
        by_country={c: _group_result(o) for c, o in sorted(by_country.items())},
        by_language={l: _group_result(o) for l, o in sorted(by_language.items())},
        tie_count=sum(1 for o in outcomes if o.tie),
    )


def _sp_cell(value: float) -> object:
    if math.isnan(value):
        return "undefined"
    if math.isinf(value):
        return "inf"
    return value


def _group_doc(result: GroupResult) -> dict[str, object]:
    return {
        "n": result.tallies.n,
        "m_sem": result.tallies.m_sem,
        "m_cul": result.tallies.m_cul,
        "m_non": result.tallies.m_non,
        "sp": _sp_cell(result.sp),
        "ties": result.ties,
    }


def write_sp_report(report: SPReport, path: str | Path,
                    provenance: Mapping[str, object] | None = None) -> None:
    """JSON report plus a per-group CSV sibling (<path>.csv).

    CSV columns mirror the tabular layout used for published win rates:
    group, n, m_sem, m_cul, m_non, sp, ties.
    """
    doc = {
        "overall": _group_doc(report.overall),
        "by_country": {c: _group_doc(g) for c, g in sorted(report.by_country.items())},
        "by_language": {l: _group_doc(g) for l, g in sorted(report.by_language.items())},
        "tie_count": report.tie_count,
    }
    if provenance is not None:
        doc["provenance"] = dict(provenance)
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(path.with_suffix(path.suffix + ".csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "n", "m_sem", "m_cul", "m_non", "sp", "ties"])
        rows = [("overall", report.overall)]
        rows += [(f"country:{c}", g) for c, g in sorted(report.by_country.items())]
        rows += [(f"language:{l}", g) for l, g in sorted(report.by_language.items())]
        for name, group in rows:
            t = group.tallies
            sp_cell = _sp_cell(group.sp)
            if not isinstance(sp_cell, str):
                sp_cell = repr(sp_cell)
            writer.writerow([name, t.n, repr(t.m_sem), repr(t.m_cul), repr(t.m_non),
                             sp_cell, group.ties])
