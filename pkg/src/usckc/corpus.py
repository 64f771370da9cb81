"""Ingestion and validation of preprocessed incident records.

A corpus is a line-delimited file, one incident per line. Each record
carries the preprocessing attribute schema (identifier, attack type,
date, locations, description, attribution, sources) plus the ordered
observed attack steps an analyst extracted from the incident's free-text
description. Step partitioning is an input, not a computation: records
arrive already partitioned and annotated.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from ._jsonio import compact_json, read_json, read_json_lines
from .errors import CorpusError
from .metrics import ConsequenceVector, consequence_from_dict, consequence_to_dict
from .taxonomy import ActivityCategory, Phase, TaxonomyCatalog


class AttackType(str, Enum):
    """Closed attack-type taxonomy; unknown strings are rejected at parse."""

    HIGH_POWERED_LASER = "HighPoweredLaser"
    HIGH_POWERED_MICROWAVES = "HighPoweredMicrowaves"
    RF_INTERFERENCE = "RFInterference"
    EAVESDROPPING = "Eavesdropping"
    SPOOFING = "Spoofing"
    ULTRAWIDEBAND_WEAPON = "UltrawidebandWeapon"
    EMP_WEAPON = "EMPWeapon"
    JAMMING = "Jamming"
    SIGNAL_HIJACKING = "SignalHijacking"
    SEIZURE_OF_CONTROL = "SeizureOfControl"
    DATA_CORRUPTION_INTERCEPTION = "DataCorruptionInterception"
    DENIAL_OF_SERVICE = "DenialOfService"
    SSA_DECEPTION = "SSADeception"


_DATE_RE = re.compile(r"^(\d{4})(?:-(\d{2})(?:-(\d{2}))?)?$")


@dataclass(frozen=True)
class IncidentDate:
    """Calendar date with explicit precision; several incidents are year-only."""

    year: int
    month: int | None = None
    day: int | None = None

    @property
    def precision(self) -> str:
        if self.day is not None:
            return "day"
        if self.month is not None:
            return "month"
        return "year"

    def __str__(self) -> str:
        if self.day is not None:
            return f"{self.year:04d}-{self.month:02d}-{self.day:02d}"
        if self.month is not None:
            return f"{self.year:04d}-{self.month:02d}"
        return f"{self.year:04d}"

    @classmethod
    def parse(cls, raw: str, *, what: str = "date") -> "IncidentDate":
        match = _DATE_RE.match(str(raw))
        if not match:
            raise CorpusError(f"{what}: {raw!r} is not YYYY[-MM[-DD]]")
        year = int(match.group(1))
        month = int(match.group(2)) if match.group(2) else None
        day = int(match.group(3)) if match.group(3) else None
        if month is not None and not 1 <= month <= 12:
            raise CorpusError(f"{what}: month {month} out of range")
        if day is not None:
            import calendar

            if not 1 <= day <= calendar.monthrange(year, month)[1]:
                raise CorpusError(f"{what}: day {day} out of range")
        return cls(year=year, month=month, day=day)


@dataclass(frozen=True)
class Location:
    facility: str | None = None
    city: str | None = None
    state: str | None = None
    country: str | None = None


@dataclass(frozen=True)
class Attacker:
    name: str | None = None
    alias: str | None = None
    country: str | None = None


@dataclass(frozen=True)
class Victim:
    name: str | None = None
    industry: str | None = None


@dataclass(frozen=True)
class ObservedStep:
    """One analyst-extracted attack step; hints are optional annotations."""

    index: int
    technique: str
    phase_hint: Phase | None = None
    activity_hint: ActivityCategory | None = None
    tactic_hint: str | None = None
    prerequisites: tuple[str, ...] = ()
    note: str = ""
    continuation: bool = False


@dataclass(frozen=True)
class IncidentRecord:
    incident_id: str
    attack_type: AttackType
    date: IncidentDate
    description: str
    sources: tuple[str, ...]
    observed_steps: tuple[ObservedStep, ...]
    locations: tuple[Location, ...] = ()
    attacker: Attacker | None = None
    victim: Victim | None = None
    consequence: ConsequenceVector | None = None
    entry_node: str | None = None
    objective_node: str | None = None

    @property
    def year(self) -> int:
        return self.date.year


def _opt(data: Mapping, key: str) -> str | None:
    value = data.get(key)
    return str(value) if value is not None else None


def _parse_step(raw: Mapping, catalog: TaxonomyCatalog, *, what: str) -> ObservedStep:
    technique = raw.get("technique")
    if not technique:
        raise CorpusError(f"{what}: step has no technique")
    if technique not in catalog.techniques:
        raise CorpusError(f"{what}: technique {technique!r} does not resolve in the catalog")

    phase_hint = None
    if raw.get("phase") is not None:
        try:
            phase_hint = Phase(raw["phase"])
        except ValueError:
            raise CorpusError(f"{what}: unknown phase {raw['phase']!r}") from None
    activity_hint = None
    if raw.get("activity") is not None:
        try:
            activity_hint = ActivityCategory(raw["activity"])
        except ValueError:
            raise CorpusError(f"{what}: unknown activity {raw['activity']!r}") from None
    tactic_hint = raw.get("tactic")
    if tactic_hint is not None:
        tactic_ref = catalog.resolve_tactic(tactic_hint)
        tactic_hint = tactic_ref.id
        if tactic_ref.id not in catalog.techniques[technique].tactic_ids:
            raise CorpusError(
                f"{what}: technique {technique} is not a {tactic_ref.name} technique"
            )
        if activity_hint is not None and catalog.activity_of[tactic_ref.id] is not activity_hint:
            raise CorpusError(
                f"{what}: activity hint {activity_hint.value!r} contradicts "
                f"tactic {tactic_ref.name} ({catalog.activity_of[tactic_ref.id].value})"
            )
    return ObservedStep(
        index=int(raw.get("index", 0)),
        technique=technique,
        phase_hint=phase_hint,
        activity_hint=activity_hint,
        tactic_hint=tactic_hint,
        prerequisites=tuple(raw.get("prerequisites", [])),
        note=str(raw.get("note", "")),
        continuation=bool(raw.get("continuation", False)),
    )


def record_from_dict(
    data: Mapping, catalog: TaxonomyCatalog, *, origin: str = "<record>"
) -> IncidentRecord:
    incident_id = data.get("incident_id")
    if not incident_id:
        raise CorpusError(f"{origin}: record has no incident_id")
    what = f"{origin} [{incident_id}]"

    try:
        attack_type = AttackType(data.get("attack_type", ""))
    except ValueError:
        raise CorpusError(
            f"{what}: unknown attack_type {data.get('attack_type')!r}"
        ) from None

    sources = tuple(str(s) for s in data.get("sources", []))
    if not sources:
        raise CorpusError(f"{what}: sources must be nonempty")

    steps = tuple(
        _parse_step(raw, catalog, what=f"{what} step {i}")
        for i, raw in enumerate(data.get("observed_steps", []), start=1)
    )
    for expected, step in enumerate(steps, start=1):
        if step.index != expected:
            raise CorpusError(
                f"{what}: step indices must run 1..{len(steps)}, "
                f"found {step.index} at position {expected}"
            )

    attacker_raw = data.get("attacker")
    victim_raw = data.get("victim")
    consequence_raw = data.get("consequence")
    return IncidentRecord(
        incident_id=str(incident_id),
        attack_type=attack_type,
        date=IncidentDate.parse(data.get("date", ""), what=f"{what} date"),
        description=str(data.get("description", "")),
        sources=sources,
        observed_steps=steps,
        locations=tuple(
            Location(
                facility=_opt(loc, "facility"),
                city=_opt(loc, "city"),
                state=_opt(loc, "state"),
                country=_opt(loc, "country"),
            )
            for loc in data.get("locations", [])
        ),
        attacker=Attacker(
            name=_opt(attacker_raw, "name"),
            alias=_opt(attacker_raw, "alias"),
            country=_opt(attacker_raw, "country"),
        )
        if attacker_raw
        else None,
        victim=Victim(name=_opt(victim_raw, "name"), industry=_opt(victim_raw, "industry"))
        if victim_raw
        else None,
        consequence=consequence_from_dict(consequence_raw, origin=what)
        if consequence_raw
        else None,
        entry_node=_opt(data, "entry_node"),
        objective_node=_opt(data, "objective_node"),
    )


def load_corpus(path: str | Path, catalog: TaxonomyCatalog) -> list[IncidentRecord]:
    """Load and validate a line-delimited corpus, preserving file order."""
    records: list[IncidentRecord] = []
    seen: set[str] = set()
    for lineno, raw in read_json_lines(path, kind="corpus"):
        record = record_from_dict(raw, catalog, origin=f"{path}:{lineno}")
        if record.incident_id in seen:
            raise CorpusError(f"{path}:{lineno}: duplicate incident_id {record.incident_id!r}")
        seen.add(record.incident_id)
        records.append(record)
    return records


def record_to_dict(record: IncidentRecord) -> dict:
    data: dict = {
        "incident_id": record.incident_id,
        "attack_type": record.attack_type.value,
        "date": str(record.date),
        "description": record.description,
        "sources": list(record.sources),
        "observed_steps": [],
    }
    for step in record.observed_steps:
        raw: dict = {"index": step.index, "technique": step.technique}
        if step.phase_hint is not None:
            raw["phase"] = step.phase_hint.value
        if step.activity_hint is not None:
            raw["activity"] = step.activity_hint.value
        if step.tactic_hint is not None:
            raw["tactic"] = step.tactic_hint
        if step.prerequisites:
            raw["prerequisites"] = list(step.prerequisites)
        if step.note:
            raw["note"] = step.note
        if step.continuation:
            raw["continuation"] = True
        data["observed_steps"].append(raw)
    if record.locations:
        data["locations"] = [
            {k: v for k, v in vars(loc).items() if v is not None} for loc in record.locations
        ]
    if record.attacker:
        data["attacker"] = {k: v for k, v in vars(record.attacker).items() if v is not None}
    if record.victim:
        data["victim"] = {k: v for k, v in vars(record.victim).items() if v is not None}
    if record.consequence:
        data["consequence"] = consequence_to_dict(record.consequence)
    if record.entry_node:
        data["entry_node"] = record.entry_node
    if record.objective_node:
        data["objective_node"] = record.objective_node
    return data


def dump_corpus(records: Iterable[IncidentRecord], path: str | Path) -> None:
    lines = [compact_json(record_to_dict(record)) for record in records]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def summarize_by_type(records: Iterable[IncidentRecord]) -> dict[AttackType, int]:
    """Incident counts per attack type; absent types map to 0."""
    counts = {attack_type: 0 for attack_type in AttackType}
    for record in records:
        counts[record.attack_type] += 1
    return counts


@dataclass(frozen=True)
class CorpusManifest:
    """Expected shape of a corpus, written alongside the sample assets."""

    record_count: int
    by_type: dict[AttackType, int]
    total_chains: int


def load_manifest(path: str | Path) -> CorpusManifest:
    data = read_json(path, kind="manifest")
    by_type = {}
    for key, count in data.get("by_type", {}).items():
        try:
            by_type[AttackType(key)] = int(count)
        except ValueError:
            raise CorpusError(f"{path}: manifest names unknown attack_type {key!r}") from None
    return CorpusManifest(
        record_count=int(data.get("record_count", 0)),
        by_type=by_type,
        total_chains=int(data.get("total_chains", 0)),
    )
