"""End-to-end pipeline: extrapolate every incident, score the chain sets,
and emit scorecards plus line-delimited chain exports.

Incidents are processed independently in file order; output assembly is
serialized, so repeated runs over identical assets produce byte-identical
text.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from ._jsonio import compact_json
from .corpus import IncidentRecord
from .errors import UsckcError, ValidationError
from .killchain import (
    DEFAULT_CAP,
    AttackStep,
    ChainSet,
    ExtrapolationRule,
    Provenance,
    USCKC,
    extrapolate_chains,
)
from .metrics import (
    ConsequenceBand,
    ConsequenceVector,
    ScoreTable,
    attack_likelihood,
    attack_sophistication,
    classify_consequence_band,
    segment_consequence,
)
from .sysmodel import SegmentGraph
from .taxonomy import ActivityCategory, Phase, TaxonomyCatalog

SEGMENT_KEYS = ("space", "ground", "user", "link")


@dataclass(frozen=True)
class PipelineConfig:
    cap: int = DEFAULT_CAP


@dataclass(frozen=True)
class Scorecard:
    """Derived per-incident summary; never hand-edited."""

    incident_id: str
    attack_type: str
    year: int
    chain_count: int
    branch_profile: tuple[int, ...]
    alpha_ta_plus: float
    alpha_te_plus: float
    alpha_ta_minus: float
    alpha_te_minus: float
    likelihood: float
    consequence: dict[str, float]
    bands: dict[str, ConsequenceBand]


@dataclass(frozen=True)
class PipelineResult:
    scorecards: tuple[Scorecard, ...]
    chain_export_lines: tuple[str, ...]
    total_chains: int


def chain_export_line(chain: USCKC, chain_index: int) -> str:
    """One chain per line; steps carry the full export field set."""
    return compact_json(
        {
            "incident_id": chain.incident_id,
            "chain_index": chain_index,
            "steps": [
                {
                    "step_index": i,
                    "phase": step.phase.value,
                    "activity": step.activity.value,
                    "tactic": step.tactic,
                    "technique": step.technique,
                    "provenance": step.provenance.value,
                }
                for i, step in enumerate(chain.steps, start=1)
            ],
        }
    )


def export_chain_set(chains: ChainSet) -> list[str]:
    return [chain_export_line(chain, i) for i, chain in enumerate(chains.chains)]


def parse_chain_export(lines: Iterable[str]) -> list[USCKC]:
    """Rebuild chains from export lines (inverse of chain_export_line)."""
    chains = []
    for line in lines:
        if not line.strip():
            continue
        raw = json.loads(line)
        steps = tuple(
            AttackStep(
                phase=Phase(step["phase"]),
                activity=ActivityCategory(step["activity"]),
                tactic=step["tactic"],
                technique=step["technique"],
                provenance=Provenance(step["provenance"]),
            )
            for step in raw["steps"]
        )
        chains.append(USCKC(incident_id=raw["incident_id"], steps=steps))
    return chains


def _scorecard(record: IncidentRecord, chains: ChainSet, scores: ScoreTable) -> Scorecard:
    soph = attack_sophistication(chains, scores)
    likelihood = attack_likelihood(chains, scores)
    vec = record.consequence or ConsequenceVector()
    consequence = segment_consequence(vec)
    return Scorecard(
        incident_id=record.incident_id,
        attack_type=record.attack_type.value,
        year=record.year,
        chain_count=len(chains.chains),
        branch_profile=chains.branch_profile,
        alpha_ta_plus=soph.highest[0],
        alpha_te_plus=soph.highest[1],
        alpha_ta_minus=soph.lowest[0],
        alpha_te_minus=soph.lowest[1],
        likelihood=likelihood,
        consequence=consequence,
        bands={key: classify_consequence_band(consequence[key]) for key in SEGMENT_KEYS},
    )


def run_pipeline(
    corpus: Sequence[IncidentRecord],
    catalog: TaxonomyCatalog,
    graph: SegmentGraph,
    rules: Sequence[ExtrapolationRule],
    scores: ScoreTable,
    config: PipelineConfig | None = None,
) -> PipelineResult:
    config = config or PipelineConfig()
    scorecards: list[Scorecard] = []
    export_lines: list[str] = []
    total = 0
    for record in corpus:
        try:
            chains = extrapolate_chains(record, graph, catalog, rules, cap=config.cap)
            scorecards.append(_scorecard(record, chains, scores))
        except UsckcError as exc:
            if exc.incident_id is None:
                exc.incident_id = record.incident_id
            raise
        export_lines.extend(export_chain_set(chains))
        total += len(chains.chains)
    return PipelineResult(
        scorecards=tuple(scorecards),
        chain_export_lines=tuple(export_lines),
        total_chains=total,
    )


# ---------------------------------------------------------------------------
# tabular rendering

_SCORECARD_COLUMNS = (
    "incident_id",
    "attack_type",
    "year",
    "chain_count",
    "branch_profile",
    "alpha_ta_plus",
    "alpha_te_plus",
    "alpha_ta_minus",
    "alpha_te_minus",
    "likelihood",
    "consequence_space",
    "consequence_ground",
    "consequence_user",
    "consequence_link",
    "band_space",
    "band_ground",
    "band_user",
    "band_link",
)


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def render_scorecards(scorecards: Iterable[Scorecard]) -> str:
    rows = ["\t".join(_SCORECARD_COLUMNS)]
    for card in scorecards:
        rows.append(
            "\t".join(
                [
                    card.incident_id,
                    card.attack_type,
                    str(card.year),
                    str(card.chain_count),
                    ",".join(str(k) for k in card.branch_profile),
                    _fmt(card.alpha_ta_plus),
                    _fmt(card.alpha_te_plus),
                    _fmt(card.alpha_ta_minus),
                    _fmt(card.alpha_te_minus),
                    _fmt(card.likelihood),
                ]
                + [_fmt(card.consequence[key]) for key in SEGMENT_KEYS]
                + [card.bands[key].value for key in SEGMENT_KEYS]
            )
        )
    return "\n".join(rows) + "\n"


_SERIES_FIELDS = {
    "alpha_ta_plus": lambda card: card.alpha_ta_plus,
    "alpha_te_plus": lambda card: card.alpha_te_plus,
    "alpha_ta_minus": lambda card: card.alpha_ta_minus,
    "alpha_te_minus": lambda card: card.alpha_te_minus,
    "likelihood": lambda card: card.likelihood,
    "consequence.space": lambda card: card.consequence["space"],
    "consequence.ground": lambda card: card.consequence["ground"],
    "consequence.user": lambda card: card.consequence["user"],
    "consequence.link": lambda card: card.consequence["link"],
}


def yearly_series(
    scorecards: Sequence[Scorecard], field: str
) -> list[tuple[int, str, float]]:
    """Plot-ready (year, attack_type, value) rows, one per incident,
    ordered by (year, incident_id)."""
    if field not in _SERIES_FIELDS:
        raise ValidationError(
            f"unknown series field {field!r}; one of {', '.join(sorted(_SERIES_FIELDS))}"
        )
    accessor = _SERIES_FIELDS[field]
    ordered = sorted(scorecards, key=lambda card: (card.year, card.incident_id))
    return [(card.year, card.attack_type, accessor(card)) for card in ordered]


# ---------------------------------------------------------------------------
# re-scoring exported chains


@dataclass(frozen=True)
class ScoreRow:
    incident_id: str
    alpha_ta_plus: float
    alpha_te_plus: float
    alpha_ta_minus: float
    alpha_te_minus: float
    likelihood: float


def score_chain_export(lines: Iterable[str], scores: ScoreTable) -> list[ScoreRow]:
    """Per-incident sophistication/likelihood rows recomputed from an export."""
    grouped: dict[str, list[USCKC]] = {}
    for chain in parse_chain_export(lines):
        grouped.setdefault(chain.incident_id, []).append(chain)
    rows = []
    for incident_id, chains in grouped.items():
        soph = attack_sophistication(chains, scores)
        rows.append(
            ScoreRow(
                incident_id=incident_id,
                alpha_ta_plus=soph.highest[0],
                alpha_te_plus=soph.highest[1],
                alpha_ta_minus=soph.lowest[0],
                alpha_te_minus=soph.lowest[1],
                likelihood=attack_likelihood(chains, scores),
            )
        )
    return rows


def render_score_rows(rows: Iterable[ScoreRow]) -> str:
    out = ["\t".join(
        ("incident_id", "alpha_ta_plus", "alpha_te_plus",
         "alpha_ta_minus", "alpha_te_minus", "likelihood")
    )]
    for row in rows:
        out.append(
            "\t".join(
                [
                    row.incident_id,
                    _fmt(row.alpha_ta_plus),
                    _fmt(row.alpha_te_plus),
                    _fmt(row.alpha_ta_minus),
                    _fmt(row.alpha_te_minus),
                    _fmt(row.likelihood),
                ]
            )
        )
    return "\n".join(out) + "\n"
