"""Kill-chain construction and missing-data extrapolation.

Two entry points mirror the two situations an analyst faces. When a
record carries full phase/activity/tactic annotations on every observed
step, ``construct_usckc`` maps the steps one-to-one onto a single chain.
When details are missing, ``extrapolate_chains`` prepends hypothetical
but plausible prior steps in front of each observed step by applying an
ordered rulebase, then enumerates the Cartesian product of candidate
techniques and keeps the combinations that pass the plausibility checks.

Everything here is pure given immutable catalog/graph/rulebase inputs;
per-incident extrapolation is safe to run concurrently.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from ._jsonio import read_json
from .corpus import IncidentRecord, ObservedStep
from .errors import (
    CapExceededError,
    ChainError,
    InconsistentHintError,
    MissingHintError,
    PhaseOrderError,
    RulebaseError,
    RuleCoverageError,
    RuleCycleError,
    UnknownIdError,
    UnreachableNodeError,
)
from .sysmodel import SegmentGraph, through_phase_count
from .taxonomy import (
    ActivityCategory,
    Phase,
    TaxonomyCatalog,
    activity_category_of,
    techniques_for_tactic,
)

DEFAULT_CAP = 100_000
RULE_DEPTH_LIMIT = 16


class Provenance(str, Enum):
    OBSERVED = "observed"
    EXTRAPOLATED = "extrapolated"


@dataclass(frozen=True)
class AttackStep:
    phase: Phase
    activity: ActivityCategory
    tactic: str
    technique: str
    provenance: Provenance
    origin_index: tuple[int, int] | None = None
    continuation: bool = False

    def signature(self) -> tuple[str, str, str, str]:
        return (self.phase.value, self.activity.value, self.tactic, self.technique)


@dataclass(frozen=True)
class USCKC:
    incident_id: str
    steps: tuple[AttackStep, ...]

    def signature(self) -> tuple[tuple[str, str, str, str], ...]:
        return tuple(step.signature() for step in self.steps)


@dataclass(frozen=True)
class PhaseSegment:
    phase: Phase
    steps: tuple[AttackStep, ...]


@dataclass(frozen=True)
class RuleTrigger:
    kind: str  # "technique" | "tactic" | "tag"
    value: str


@dataclass(frozen=True)
class RuleEmission:
    """A prior step to prepend; phase None means "same as the triggering step"."""

    activity: ActivityCategory
    tactic: str
    candidate_techniques: tuple[str, ...]
    phase: Phase | None = None
    prerequisites: tuple[str, ...] = ()
    continuation: bool = False


@dataclass(frozen=True)
class ExtrapolationRule:
    rule_id: str
    trigger: RuleTrigger
    emits: RuleEmission | None
    terminal: bool
    elidable: bool = False


@dataclass(frozen=True)
class PlausibilityResult:
    passed: bool
    violations: tuple[str, ...]


@dataclass(frozen=True)
class ChainSet:
    incident_id: str
    chains: tuple[USCKC, ...]
    branch_profile: tuple[int, ...]
    observed_count: int
    total_steps: int
    pruned_count: int


# ---------------------------------------------------------------------------
# rulebase loading


def rule_from_dict(raw: Mapping, catalog: TaxonomyCatalog, *, what: str) -> ExtrapolationRule:
    rule_id = raw.get("rule_id")
    if not rule_id:
        raise RulebaseError(f"{what}: rule has no rule_id")
    what = f"{what} [{rule_id}]"

    trigger_raw = raw.get("trigger", {})
    kinds = [k for k in ("technique", "tactic", "tag") if k in trigger_raw]
    if len(kinds) != 1:
        raise RulebaseError(f"{what}: trigger must name exactly one of technique/tactic/tag")
    kind = kinds[0]
    value = str(trigger_raw[kind])
    if kind == "tactic":
        value = catalog.resolve_tactic(value).id
    elif kind == "technique" and value not in catalog.techniques:
        raise RulebaseError(f"{what}: trigger technique {value!r} does not resolve")
    trigger = RuleTrigger(kind=kind, value=value)

    emits_raw = raw.get("emits")
    terminal = bool(raw.get("terminal", False))
    emits = None
    if emits_raw is not None:
        tactic = catalog.resolve_tactic(emits_raw.get("tactic", "")).id
        derived = catalog.activity_of[tactic]
        if "activity" in emits_raw:
            try:
                activity = ActivityCategory(emits_raw["activity"])
            except ValueError:
                raise RulebaseError(
                    f"{what}: unknown activity {emits_raw['activity']!r}"
                ) from None
            if activity is not derived:
                raise RulebaseError(
                    f"{what}: emitted activity {activity.value}"
                    f" contradicts tactic category {derived.value}"
                )
        else:
            activity = derived
        candidates = tuple(emits_raw.get("candidate_techniques", []))
        if not candidates:
            raise RulebaseError(f"{what}: candidate_techniques must be nonempty")
        allowed = techniques_for_tactic(catalog, tactic)
        for teid in candidates:
            if teid not in allowed:
                raise RulebaseError(
                    f"{what}: candidate {teid!r} is not a technique of the emitted tactic"
                )
        phase_raw = emits_raw.get("phase", "same")
        if phase_raw == "same":
            phase = None
        else:
            try:
                phase = Phase(phase_raw)
            except ValueError:
                raise RulebaseError(f"{what}: unknown phase {phase_raw!r}") from None
        emits = RuleEmission(
            activity=activity,
            tactic=tactic,
            candidate_techniques=candidates,
            phase=phase,
            prerequisites=tuple(emits_raw.get("prerequisites", [])),
            continuation=bool(emits_raw.get("continuation", False)),
        )
    elif not terminal:
        raise RulebaseError(f"{what}: a rule that emits nothing must be terminal")

    return ExtrapolationRule(
        rule_id=str(rule_id),
        trigger=trigger,
        emits=emits,
        terminal=terminal,
        elidable=bool(raw.get("elidable", False)),
    )


def rules_from_list(data: Sequence, catalog: TaxonomyCatalog, *, origin: str = "<rules>"):
    rules = []
    seen: set[str] = set()
    for i, raw in enumerate(data, start=1):
        rule = rule_from_dict(raw, catalog, what=f"{origin} rule {i}")
        if rule.rule_id in seen:
            raise RulebaseError(f"{origin}: duplicate rule_id {rule.rule_id!r}")
        seen.add(rule.rule_id)
        rules.append(rule)
    return rules


def load_rules(path: str | Path, catalog: TaxonomyCatalog) -> list[ExtrapolationRule]:
    data = read_json(path, kind="rulebase")
    if isinstance(data, Mapping):
        data = data.get("rules", [])
    return rules_from_list(data, catalog, origin=str(path))


# ---------------------------------------------------------------------------
# observed-step resolution


@dataclass(frozen=True)
class _Resolved:
    index: int
    technique: str
    tactic: str
    activity: ActivityCategory
    phase: Phase
    prerequisites: tuple[str, ...]
    continuation: bool


def _resolve_tactic(step: ObservedStep, catalog: TaxonomyCatalog, *, what: str) -> str:
    tactic_ids = catalog.resolve_technique(step.technique).tactic_ids
    if step.tactic_hint is not None:
        tactic = catalog.resolve_tactic(step.tactic_hint)
        if tactic.id not in tactic_ids:
            raise InconsistentHintError(
                f"{what}: technique {step.technique} is not a {tactic.name} technique"
            )
        return tactic.id
    if len(tactic_ids) == 1:
        return next(iter(tactic_ids))
    raise InconsistentHintError(
        f"{what}: technique {step.technique} maps to several tactics "
        f"({', '.join(sorted(tactic_ids))}); a tactic hint is required"
    )


def resolve_observed_steps(
    record: IncidentRecord, catalog: TaxonomyCatalog
) -> list[_Resolved]:
    """Fix tactic/activity for each observed step and fill missing phases.

    Phases are inherited right-to-left: an objective-activity step anchors
    an out phase, and an unhinted step takes the phase of the step after it
    (the tail of an attack narrative is better attested than its middle).
    """
    partial = []
    for step in record.observed_steps:
        what = f"{record.incident_id} step {step.index}"
        tactic = _resolve_tactic(step, catalog, what=what)
        activity = activity_category_of(catalog, tactic)
        if step.activity_hint is not None and step.activity_hint is not activity:
            raise InconsistentHintError(
                f"{what}: activity hint {step.activity_hint.value!r} contradicts "
                f"tactic category {activity.value!r}"
            )
        phase = step.phase_hint
        if phase is None and activity is ActivityCategory.OBJECTIVE:
            phase = Phase.OUT
        partial.append((step, tactic, activity, phase))

    resolved: list[_Resolved] = []
    carry = Phase.OUT
    for step, tactic, activity, phase in reversed(partial):
        if phase is None:
            phase = carry
        carry = phase
        resolved.append(
            _Resolved(
                index=step.index,
                technique=step.technique,
                tactic=tactic,
                activity=activity,
                phase=phase,
                prerequisites=step.prerequisites,
                continuation=step.continuation,
            )
        )
    resolved.reverse()
    return resolved


# ---------------------------------------------------------------------------
# phase segmentation and plausibility


def _closes_segment(step: AttackStep) -> bool:
    if step.phase in (Phase.IN, Phase.THROUGH):
        return step.activity is ActivityCategory.MILESTONE
    return step.activity is ActivityCategory.OBJECTIVE


def segment_phases(steps: Sequence[AttackStep]) -> list[PhaseSegment]:
    """Split a chain into phase segments.

    A segment ends when the phase value changes or when the segment's
    closing activity fires: a milestone closes an in/through phase, an
    objective closes an out phase. Two adjacent segments may share a phase
    value (e.g. two consecutive through phases of a deep pivot).
    """
    segments: list[PhaseSegment] = []
    current: list[AttackStep] = []
    for step in steps:
        if current and (step.phase is not current[-1].phase or _closes_segment(current[-1])):
            segments.append(PhaseSegment(phase=current[0].phase, steps=tuple(current)))
            current = []
        current.append(step)
    if current:
        segments.append(PhaseSegment(phase=current[0].phase, steps=tuple(current)))
    return segments


def _phase_order_violations(steps: Sequence[AttackStep]) -> list[str]:
    violations = []
    for i, (prev, cur) in enumerate(zip(steps, steps[1:]), start=2):
        if cur.phase.rank < prev.phase.rank:
            violations.append(
                f"phase order violation: step {i} moves {prev.phase.value} -> {cur.phase.value}"
            )
    out_seen = False
    for segment in segment_phases(steps):
        if segment.phase is Phase.OUT:
            if out_seen and not segment.steps[0].continuation:
                violations.append(
                    "repeated out phase without a continuation flag on its opening step"
                )
            out_seen = True
    return violations


def _placement_violations(steps: Sequence[AttackStep]) -> list[str]:
    violations = []
    for segment in segment_phases(steps):
        if segment.phase is Phase.OUT:
            for step in segment.steps:
                if step.activity is ActivityCategory.MILESTONE:
                    violations.append(
                        f"milestone activity ({step.technique}) inside an out phase"
                    )
        else:
            for step in segment.steps:
                if step.activity is ActivityCategory.OBJECTIVE:
                    violations.append(
                        f"objective activity ({step.technique}) inside "
                        f"a{'n' if segment.phase is Phase.IN else ''} {segment.phase.value} phase"
                    )
            for step in segment.steps[:-1]:
                if step.activity is ActivityCategory.MILESTONE:
                    violations.append(
                        f"milestone activity ({step.technique}) is not last in its phase"
                    )
    return violations


def plausibility_check(
    chain: USCKC,
    graph: SegmentGraph,
    catalog: TaxonomyCatalog,
    *,
    entry: str | None = None,
    objective: str | None = None,
) -> PlausibilityResult:
    """Judge whether a chain makes structural sense.

    Checks, in order: (a) phases never regress (out may repeat only behind
    a continuation flag); (b) milestone/objective activities sit only at
    the end of their phase; (c) the chain ends with an objective step;
    (d) when entry/objective nodes are declared, the number of through
    phases matches the graph's pivot count; (e) no two identical adjacent
    steps. Failures are reported as data, never raised.
    """
    steps = chain.steps
    if not steps:
        return PlausibilityResult(False, ("chain has no steps",))
    violations: list[str] = []
    violations.extend(_phase_order_violations(steps))
    violations.extend(_placement_violations(steps))
    if steps[-1].activity is not ActivityCategory.OBJECTIVE:
        violations.append(
            f"chain does not end with an objective step "
            f"(final activity is {steps[-1].activity.value})"
        )
    if entry is not None and objective is not None:
        through_segments = sum(
            1 for seg in segment_phases(steps) if seg.phase is Phase.THROUGH
        )
        try:
            expected = through_phase_count(graph, entry, objective)
        except UnreachableNodeError:
            violations.append(f"objective node {objective!r} unreachable from {entry!r}")
        else:
            if through_segments != expected:
                violations.append(
                    f"chain has {through_segments} through phase(s) but the pivot "
                    f"distance from {entry!r} to {objective!r} is {expected}"
                )
    for i, (prev, cur) in enumerate(zip(steps, steps[1:]), start=2):
        if prev.signature() == cur.signature():
            violations.append(f"duplicate adjacent steps at positions {i - 1} and {i}")
    return PlausibilityResult(passed=not violations, violations=tuple(violations))


# ---------------------------------------------------------------------------
# full-information construction


def _prerequisite_violations(
    steps: Sequence[AttackStep], prereq_counts: Mapping[int, int]
) -> list[str]:
    # Without a rulebase, tag semantics reduce to "enough prior steps in the
    # same phase segment to have provided each declared prerequisite".
    violations = []
    for segment in segment_phases(steps):
        for pos, step in enumerate(segment.steps):
            if step.activity not in (ActivityCategory.MILESTONE, ActivityCategory.OBJECTIVE):
                continue
            needed = prereq_counts.get(id(step), 0)
            if pos < needed:
                violations.append(
                    f"step {step.technique} declares {needed} prerequisite(s) but only "
                    f"{pos} step(s) precede it in its phase"
                )
    return violations


def construct_usckc(
    record: IncidentRecord, graph: SegmentGraph, catalog: TaxonomyCatalog
) -> USCKC:
    """Build the single chain of a fully annotated record.

    Every observed step must carry phase, activity, and tactic hints;
    records with missing annotations belong to extrapolate_chains.
    """
    if not record.observed_steps:
        raise ChainError(f"{record.incident_id}: record has no observed steps")
    for step in record.observed_steps:
        missing = [
            name
            for name, value in (
                ("phase", step.phase_hint),
                ("activity", step.activity_hint),
                ("tactic", step.tactic_hint),
            )
            if value is None
        ]
        if missing:
            raise MissingHintError(
                f"{record.incident_id} step {step.index} is missing "
                f"{', '.join(missing)} hint(s); use extrapolate_chains for "
                f"records with missing data"
            )
    for key in (record.entry_node, record.objective_node):
        if key is not None and key not in graph.nodes:
            raise UnknownIdError(f"{record.incident_id}: unknown node {key!r}")

    resolved = resolve_observed_steps(record, catalog)
    steps = tuple(
        AttackStep(
            phase=res.phase,
            activity=res.activity,
            tactic=res.tactic,
            technique=res.technique,
            provenance=Provenance.OBSERVED,
            origin_index=(res.index, 1),
            continuation=res.continuation,
        )
        for res in resolved
    )

    order = _phase_order_violations(steps)
    if order:
        raise PhaseOrderError(f"{record.incident_id}: " + "; ".join(order))
    placement = _placement_violations(steps)
    if placement:
        raise InconsistentHintError(f"{record.incident_id}: " + "; ".join(placement))
    if steps[-1].activity is not ActivityCategory.OBJECTIVE:
        raise ChainError(
            f"{record.incident_id}: chain must end with an objective step, "
            f"found {steps[-1].activity.value}"
        )
    prereq_counts = {
        id(step): len(res.prerequisites) for step, res in zip(steps, resolved)
    }
    prereq = _prerequisite_violations(steps, prereq_counts)
    if prereq:
        raise ChainError(f"{record.incident_id}: " + "; ".join(prereq))
    return USCKC(incident_id=record.incident_id, steps=steps)


# ---------------------------------------------------------------------------
# extrapolation


@dataclass(frozen=True)
class _Slot:
    phase: Phase
    activity: ActivityCategory
    tactic: str
    candidates: tuple[str, ...]
    provenance: Provenance
    origin: tuple[int, int]
    continuation: bool
    rule: ExtrapolationRule | None


@dataclass(frozen=True)
class _Probe:
    technique: str | None
    tactic: str
    tags: tuple[str, ...]


def _first_match(rules: Sequence[ExtrapolationRule], probe: _Probe):
    for rule in rules:
        trig = rule.trigger
        if trig.kind == "technique" and probe.technique == trig.value:
            return rule
        if trig.kind == "tactic" and probe.tactic == trig.value:
            return rule
        if trig.kind == "tag" and trig.value in probe.tags:
            return rule
    return None


def _backfill_slots(
    anchor: _Resolved, rules: Sequence[ExtrapolationRule], *, incident_id: str
) -> list[_Slot]:
    slots = [
        _Slot(
            phase=anchor.phase,
            activity=anchor.activity,
            tactic=anchor.tactic,
            candidates=(anchor.technique,),
            provenance=Provenance.OBSERVED,
            origin=(anchor.index, 1),
            continuation=anchor.continuation,
            rule=None,
        )
    ]
    probe = _Probe(technique=anchor.technique, tactic=anchor.tactic, tags=anchor.prerequisites)
    phase = anchor.phase
    emitter: ExtrapolationRule | None = None
    depth = 0
    while True:
        rule = _first_match(rules, probe)
        if rule is None:
            break
        if rule is emitter:
            raise RuleCycleError(
                f"{incident_id} step {anchor.index}: rule {rule.rule_id!r} "
                f"re-fired on its own emission",
                incident_id=incident_id,
            )
        if rule.emits is None:
            break
        depth += 1
        if depth > RULE_DEPTH_LIMIT:
            raise RuleCycleError(
                f"{incident_id} step {anchor.index}: extrapolation exceeded "
                f"the depth limit of {RULE_DEPTH_LIMIT} prior steps",
                incident_id=incident_id,
            )
        emission = rule.emits
        phase = emission.phase or phase
        slots.insert(
            0,
            _Slot(
                phase=phase,
                activity=emission.activity,
                tactic=emission.tactic,
                candidates=emission.candidate_techniques,
                provenance=Provenance.EXTRAPOLATED,
                origin=(anchor.index, 1 - depth),
                continuation=emission.continuation,
                rule=rule,
            ),
        )
        if rule.terminal:
            break
        probe = _Probe(
            technique=emission.candidate_techniques[0]
            if len(emission.candidate_techniques) == 1
            else None,
            tactic=emission.tactic,
            tags=emission.prerequisites,
        )
        emitter = rule
    return slots


def _elide(pairs: list[tuple[AttackStep, _Slot]]) -> tuple[AttackStep, ...]:
    kept: list[tuple[AttackStep, _Slot]] = []
    for step, slot in pairs:
        if slot.rule is not None and slot.rule.elidable:
            satisfied = any(
                prev.phase is step.phase
                and prev.tactic == step.tactic
                and prev.technique in slot.candidates
                for prev, _ in kept
            )
            if satisfied:
                continue
        kept.append((step, slot))
    return tuple(step for step, _ in kept)


def extrapolate_chains(
    record: IncidentRecord,
    graph: SegmentGraph,
    catalog: TaxonomyCatalog,
    rules: Sequence[ExtrapolationRule],
    cap: int = DEFAULT_CAP,
    *,
    plausibility: Callable[[USCKC], PlausibilityResult] | None = None,
) -> ChainSet:
    """Extrapolate the set of probable chains for a record with missing data.

    For each observed step the first matching rule prepends a prior step,
    repeatedly, until a terminal rule fires or nothing matches. Candidate
    techniques of the extrapolated steps are then combined as a Cartesian
    product (in lexicographic candidate-index order), each combination is
    checked for plausibility, and failures are dropped but counted.
    """
    if not record.observed_steps:
        raise ChainError(
            f"{record.incident_id}: record has no observed steps",
            incident_id=record.incident_id,
        )
    for key in (record.entry_node, record.objective_node):
        if key is not None and key not in graph.nodes:
            raise UnknownIdError(
                f"{record.incident_id}: unknown node {key!r}",
                incident_id=record.incident_id,
            )

    covered = {rule.trigger.value for rule in rules if rule.trigger.kind == "tag"}
    missing_tags = sorted(
        {
            tag
            for step in record.observed_steps
            for tag in step.prerequisites
            if tag not in covered
        }
    )
    if missing_tags:
        raise RuleCoverageError(
            f"{record.incident_id}: no rule covers prerequisite tag(s) "
            f"{', '.join(missing_tags)}",
            incident_id=record.incident_id,
        )

    resolved = resolve_observed_steps(record, catalog)
    slots: list[_Slot] = []
    for anchor in resolved:
        slots.extend(_backfill_slots(anchor, rules, incident_id=record.incident_id))

    branch_profile = tuple(
        len(slot.candidates) for slot in slots if slot.provenance is Provenance.EXTRAPOLATED
    )
    total = math.prod(branch_profile)
    if total > cap:
        raise CapExceededError(
            f"{record.incident_id}: {total} candidate chains exceed the cap of {cap}; "
            f"branch profile {list(branch_profile)}",
            would_be=total,
            branch_profile=branch_profile,
            incident_id=record.incident_id,
        )

    if plausibility is None:
        def plausibility(chain: USCKC) -> PlausibilityResult:
            return plausibility_check(
                chain,
                graph,
                catalog,
                entry=record.entry_node,
                objective=record.objective_node,
            )

    branch_positions = [
        i for i, slot in enumerate(slots) if slot.provenance is Provenance.EXTRAPOLATED
    ]
    chains: list[USCKC] = []
    pruned = 0
    for combo in itertools.product(*(range(len(slots[i].candidates)) for i in branch_positions)):
        choice = dict(zip(branch_positions, combo))
        pairs = []
        for i, slot in enumerate(slots):
            technique = slot.candidates[choice.get(i, 0)]
            pairs.append(
                (
                    AttackStep(
                        phase=slot.phase,
                        activity=slot.activity,
                        tactic=slot.tactic,
                        technique=technique,
                        provenance=slot.provenance,
                        origin_index=slot.origin,
                        continuation=slot.continuation,
                    ),
                    slot,
                )
            )
        chain = USCKC(incident_id=record.incident_id, steps=_elide(pairs))
        verdict = plausibility(chain)
        if verdict.passed:
            chains.append(chain)
        else:
            pruned += 1

    return ChainSet(
        incident_id=record.incident_id,
        chains=tuple(chains),
        branch_profile=branch_profile,
        observed_count=len(record.observed_steps),
        total_steps=len(slots),
        pruned_count=pruned,
    )


def dedupe_chains(chains: Iterable[USCKC]) -> list[USCKC]:
    """Drop chains with identical step sequences, keeping first occurrences."""
    seen: set = set()
    out: list[USCKC] = []
    for chain in chains:
        key = chain.signature()
        if key in seen:
            continue
        seen.add(key)
        out.append(chain)
    return out
