"""Consequence structures, sophistication summaries, and chain likelihoods.

All functions here are pure over immutable inputs. Sophistication and
likelihood scores are analyst inputs carried in a score table; lookups
for unscored identifiers fall back to the table defaults and the
fallback is flagged in the result.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Mapping, Sequence

from ._jsonio import read_json
from .errors import ScoreTableError, ValidationError

if TYPE_CHECKING:  # pragma: no cover
    from .killchain import USCKC


# ---------------------------------------------------------------------------
# score table

DEFAULT_TACTIC_SOPHISTICATION = 0.5
DEFAULT_TECHNIQUE_SOPHISTICATION = 0.5
DEFAULT_TECHNIQUE_LIKELIHOOD = 0.2


@dataclass(frozen=True)
class ScoreTable:
    tactic_sophistication: dict[str, float]
    technique_sophistication: dict[str, float]
    technique_likelihood: dict[str, float]
    default_tactic_sophistication: float = DEFAULT_TACTIC_SOPHISTICATION
    default_technique_sophistication: float = DEFAULT_TECHNIQUE_SOPHISTICATION
    default_technique_likelihood: float = DEFAULT_TECHNIQUE_LIKELIHOOD

    def tactic_sophistication_of(self, tactic_id: str) -> tuple[float, bool]:
        """Score plus a flag marking a default fallback."""
        if tactic_id in self.tactic_sophistication:
            return self.tactic_sophistication[tactic_id], False
        return self.default_tactic_sophistication, True

    def technique_sophistication_of(self, technique_id: str) -> tuple[float, bool]:
        if technique_id in self.technique_sophistication:
            return self.technique_sophistication[technique_id], False
        return self.default_technique_sophistication, True

    def technique_likelihood_of(self, technique_id: str) -> tuple[float, bool]:
        if technique_id in self.technique_likelihood:
            return self.technique_likelihood[technique_id], False
        return self.default_technique_likelihood, True


def _check_unit(value, *, what: str, exclusive_zero: bool = False) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ScoreTableError(f"{what}: score {value!r} is not a number")
    value = float(value)
    if exclusive_zero:
        if not 0.0 < value <= 1.0:
            raise ScoreTableError(f"{what}: likelihood {value} outside (0, 1]")
    elif not 0.0 <= value <= 1.0:
        raise ScoreTableError(f"{what}: score {value} outside [0, 1]")
    return value


def scores_from_dict(data: Mapping, *, origin: str = "<scores>") -> ScoreTable:
    defaults = data.get("defaults", {})
    return ScoreTable(
        tactic_sophistication={
            key: _check_unit(v, what=f"{origin} tactic {key}")
            for key, v in data.get("tactic_sophistication", {}).items()
        },
        technique_sophistication={
            key: _check_unit(v, what=f"{origin} technique {key}")
            for key, v in data.get("technique_sophistication", {}).items()
        },
        technique_likelihood={
            key: _check_unit(v, what=f"{origin} technique {key}", exclusive_zero=True)
            for key, v in data.get("technique_likelihood", {}).items()
        },
        default_tactic_sophistication=_check_unit(
            defaults.get("tactic_sophistication", DEFAULT_TACTIC_SOPHISTICATION),
            what=f"{origin} default tactic sophistication",
        ),
        default_technique_sophistication=_check_unit(
            defaults.get("technique_sophistication", DEFAULT_TECHNIQUE_SOPHISTICATION),
            what=f"{origin} default technique sophistication",
        ),
        default_technique_likelihood=_check_unit(
            defaults.get("technique_likelihood", DEFAULT_TECHNIQUE_LIKELIHOOD),
            what=f"{origin} default technique likelihood",
            exclusive_zero=True,
        ),
    )


def load_scores(path: str | Path) -> ScoreTable:
    return scores_from_dict(read_json(path, kind="score table"), origin=str(path))


# ---------------------------------------------------------------------------
# sophistication (highest / lowest over a chain set)


@dataclass(frozen=True)
class ChainSophistication:
    max_tactic: float
    max_technique: float
    fallback_tactics: tuple[str, ...]
    fallback_techniques: tuple[str, ...]


@dataclass(frozen=True)
class SophisticationSummary:
    highest: tuple[float, float]
    lowest: tuple[float, float]
    per_chain: tuple[tuple[float, float], ...]


def chain_sophistication(chain: "USCKC", scores: ScoreTable) -> ChainSophistication:
    """Scores of the most sophisticated tactic and technique in one chain."""
    if not chain.steps:
        raise ValidationError("cannot score an empty chain")
    tactic_ids = sorted({step.tactic for step in chain.steps})
    technique_ids = sorted({step.technique for step in chain.steps})
    fallback_tactics = []
    fallback_techniques = []
    max_ta = 0.0
    for tid in tactic_ids:
        value, fell_back = scores.tactic_sophistication_of(tid)
        if fell_back:
            fallback_tactics.append(tid)
        max_ta = max(max_ta, value)
    max_te = 0.0
    for teid in technique_ids:
        value, fell_back = scores.technique_sophistication_of(teid)
        if fell_back:
            fallback_techniques.append(teid)
        max_te = max(max_te, value)
    return ChainSophistication(
        max_tactic=max_ta,
        max_technique=max_te,
        fallback_tactics=tuple(fallback_tactics),
        fallback_techniques=tuple(fallback_techniques),
    )


def _chains_of(chains) -> tuple:
    inner = getattr(chains, "chains", chains)
    return tuple(inner)


def attack_sophistication(chains, scores: ScoreTable) -> SophisticationSummary:
    """Highest and lowest per-chain (max tactic, max technique) pairs.

    The highest pair is the most sophisticated tactic/technique that any
    probable chain uses; the lowest pair is the least sophisticated that
    some chain can succeed with.
    """
    members = _chains_of(chains)
    if not members:
        raise ValidationError("attack_sophistication requires a nonempty chain set")
    per_chain = tuple(
        (res.max_tactic, res.max_technique)
        for res in (chain_sophistication(chain, scores) for chain in members)
    )
    return SophisticationSummary(
        highest=(max(p[0] for p in per_chain), max(p[1] for p in per_chain)),
        lowest=(min(p[0] for p in per_chain), min(p[1] for p in per_chain)),
        per_chain=per_chain,
    )


# ---------------------------------------------------------------------------
# likelihood


def chain_likelihood(chain: "USCKC", scores: ScoreTable) -> float:
    """Minimum technique likelihood across the chain's steps: every step
    must succeed for the chain to succeed."""
    if not chain.steps:
        raise ValidationError("cannot score an empty chain")
    return min(scores.technique_likelihood_of(step.technique)[0] for step in chain.steps)


def attack_likelihood(chains, scores: ScoreTable) -> float:
    """Maximum chain likelihood over the set: one probable chain succeeding
    suffices. Ties resolve to the lexicographically first chain index."""
    members = _chains_of(chains)
    if not members:
        raise ValidationError("attack_likelihood requires a nonempty chain set")
    return max(chain_likelihood(chain, scores) for chain in members)


# ---------------------------------------------------------------------------
# consequence vectors

GROUND_LINK_PAIRS = ("GS-MC", "GS-DPC", "GS-RT", "MC-DPC", "MC-RT", "DPC-RT")
LINK_CLASSES = ("S", "SS", "GG", "SG", "SU", "GU", "UU") + tuple(
    f"G:{pair}" for pair in GROUND_LINK_PAIRS
)

SUBVECTOR_SIZES = {
    "space.bus": 6,
    "space.payload": 5,
    "ground.ground_station": 4,
    "ground.mission_control": 3,
    "ground.data_processing": 2,
    "ground.remote_terminal": 2,
    "user": 3,
}


class ConsequenceBand(str, Enum):
    SUPERFICIAL = "superficial"
    TEMPORARY = "temporary"
    NON_RECOVERABLE = "non_recoverable"


@dataclass(frozen=True)
class ConsequenceVector:
    """Per-module degradation scores; absent sub-vectors mean no consequence."""

    bus: tuple[float, ...] = (0.0,) * 6
    payload: tuple[float, ...] = (0.0,) * 5
    ground_station: tuple[float, ...] = (0.0,) * 4
    mission_control: tuple[float, ...] = (0.0,) * 3
    data_processing: tuple[float, ...] = (0.0,) * 2
    remote_terminal: tuple[float, ...] = (0.0,) * 2
    user: tuple[float, ...] = (0.0,) * 3
    link: dict[str, tuple[float, float, float]] = field(default_factory=dict)

    def subvector(self, key: str) -> tuple[float, ...]:
        return {
            "space.bus": self.bus,
            "space.payload": self.payload,
            "ground.ground_station": self.ground_station,
            "ground.mission_control": self.mission_control,
            "ground.data_processing": self.data_processing,
            "ground.remote_terminal": self.remote_terminal,
            "user": self.user,
        }[key]


def _check_vector(raw, size: int, *, what: str) -> tuple[float, ...]:
    if not isinstance(raw, (list, tuple)) or len(raw) != size:
        raise ValidationError(f"{what}: expected {size} scores, got {raw!r}")
    return tuple(_check_unit(v, what=what) for v in raw)


def consequence_from_dict(data: Mapping, *, origin: str = "<consequence>") -> ConsequenceVector:
    space = data.get("space", {})
    ground = data.get("ground", {})
    link_raw = data.get("link", {})
    link: dict[str, tuple[float, float, float]] = {}
    for key, triple in link_raw.items():
        if key not in LINK_CLASSES:
            raise ValidationError(
                f"{origin}: unknown link class {key!r}; allowed: {', '.join(LINK_CLASSES)}"
            )
        link[key] = _check_vector(triple, 3, what=f"{origin} link {key}")
    return ConsequenceVector(
        bus=_check_vector(space.get("bus", [0.0] * 6), 6, what=f"{origin} space.bus"),
        payload=_check_vector(space.get("payload", [0.0] * 5), 5, what=f"{origin} space.payload"),
        ground_station=_check_vector(
            ground.get("ground_station", [0.0] * 4), 4, what=f"{origin} ground.ground_station"
        ),
        mission_control=_check_vector(
            ground.get("mission_control", [0.0] * 3), 3, what=f"{origin} ground.mission_control"
        ),
        data_processing=_check_vector(
            ground.get("data_processing", [0.0] * 2), 2, what=f"{origin} ground.data_processing"
        ),
        remote_terminal=_check_vector(
            ground.get("remote_terminal", [0.0] * 2), 2, what=f"{origin} ground.remote_terminal"
        ),
        user=_check_vector(data.get("user", [0.0] * 3), 3, what=f"{origin} user"),
        link=link,
    )


def consequence_to_dict(vec: ConsequenceVector) -> dict:
    return {
        "space": {"bus": list(vec.bus), "payload": list(vec.payload)},
        "ground": {
            "ground_station": list(vec.ground_station),
            "mission_control": list(vec.mission_control),
            "data_processing": list(vec.data_processing),
            "remote_terminal": list(vec.remote_terminal),
        },
        "user": list(vec.user),
        "link": {key: list(triple) for key, triple in sorted(vec.link.items())},
    }


def aggregate_consequence(
    vec: ConsequenceVector,
    weights: Mapping[str, Sequence[float]] | None = None,
) -> dict[str, float | tuple[float, float, float]]:
    """Weighted means for the availability-style sub-vectors.

    Link-class confidentiality/integrity/availability triples describe
    different properties and are never averaged together; they are
    returned verbatim, and asking for weights on them is refused.
    """
    weights = dict(weights or {})
    for key in weights:
        if key.startswith("link") or key in LINK_CLASSES:
            raise ValidationError(
                "confidentiality/integrity/availability triples are not aggregated; "
                f"remove weights for {key!r}"
            )
        if key not in SUBVECTOR_SIZES:
            raise ValidationError(f"unknown sub-vector {key!r} in weight map")

    out: dict[str, float | tuple[float, float, float]] = {}
    for key, size in SUBVECTOR_SIZES.items():
        values = vec.subvector(key)
        if key in weights:
            w = [float(x) for x in weights[key]]
            if len(w) != size:
                raise ValidationError(
                    f"weight map for {key!r} has {len(w)} entries, expected {size}"
                )
            if any(x < 0 for x in w):
                raise ValidationError(f"weights for {key!r} must be nonnegative")
            if abs(sum(w) - 1.0) > 1e-9:
                raise ValidationError(f"weights for {key!r} must sum to 1")
        else:
            w = [1.0 / size] * size
        out[key] = sum(v * x for v, x in zip(values, w))
    for cls, triple in sorted(vec.link.items()):
        out[f"link.{cls}"] = triple
    return out


def classify_consequence_band(score: float) -> ConsequenceBand:
    """Band an aggregate score: superficial impact is instantly recoverable,
    temporary impact is recoverable, non-recoverable is not."""
    if not 0.0 <= score <= 1.0:
        raise ValidationError(f"consequence score {score} outside [0, 1]")
    if score <= 0.3:
        return ConsequenceBand.SUPERFICIAL
    if score < 0.8:
        return ConsequenceBand.TEMPORARY
    return ConsequenceBand.NON_RECOVERABLE


def segment_consequence(vec: ConsequenceVector) -> dict[str, float]:
    """Per-segment roll-up used by scorecards: mean of component means for
    the module segments, and the largest CIA component over link classes."""
    agg = aggregate_consequence(vec)
    space = (agg["space.bus"] + agg["space.payload"]) / 2
    ground = (
        agg["ground.ground_station"]
        + agg["ground.mission_control"]
        + agg["ground.data_processing"]
        + agg["ground.remote_terminal"]
    ) / 4
    link = max((max(triple) for triple in vec.link.values()), default=0.0)
    return {"space": space, "ground": ground, "user": agg["user"], "link": link}
