"""Joint SPARTA/ATT&CK tactic-technique catalog and step vocabulary.

The catalog is the closed vocabulary the rest of the package validates
against: tactic and technique identifiers, the four-way partition of
tactics into activity categories, and the in/through/out phase names
used to order kill-chain steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping

from ._jsonio import read_json, write_json
from .errors import CatalogError, UnknownIdError


class Phase(str, Enum):
    """Position of an attack step within a kill chain."""

    IN = "in"
    THROUGH = "through"
    OUT = "out"

    @property
    def rank(self) -> int:
        return _PHASE_RANK[self]


_PHASE_RANK = {Phase.IN: 0, Phase.THROUGH: 1, Phase.OUT: 2}


class ActivityCategory(str, Enum):
    """What a step contributes to its phase."""

    OBJECTIVE = "objective"
    MILESTONE = "milestone"
    ENABLING = "enabling"
    INFO_DISCOVERY = "info_discovery"


class Source(str, Enum):
    """Which upstream taxonomy defines an entry; BOTH marks shared tactics."""

    SPARTA = "SPARTA"
    ATTACK = "ATTACK"
    BOTH = "BOTH"


@dataclass(frozen=True)
class TacticRef:
    id: str
    name: str
    source: Source


@dataclass(frozen=True)
class TechniqueRef:
    id: str
    name: str
    source: Source
    tactic_ids: frozenset[str]


@dataclass(frozen=True)
class TaxonomyCatalog:
    """Immutable after load; safe for concurrent reads."""

    tactics: dict[str, TacticRef]
    techniques: dict[str, TechniqueRef]
    activity_of: dict[str, ActivityCategory]
    version: str = "unpinned"
    _names: dict[str, str] = field(default_factory=dict, compare=False, repr=False)

    def resolve_tactic(self, key: str) -> TacticRef:
        """Look a tactic up by id, falling back to its (unique) display name."""
        if key in self.tactics:
            return self.tactics[key]
        tid = self._names.get(key)
        if tid is not None:
            return self.tactics[tid]
        raise UnknownIdError(f"unknown tactic {key!r}")

    def resolve_technique(self, key: str) -> TechniqueRef:
        if key in self.techniques:
            return self.techniques[key]
        raise UnknownIdError(f"unknown technique {key!r}")


def _parse_enum(enum_cls, raw, *, what: str):
    try:
        return enum_cls(raw)
    except ValueError:
        allowed = ", ".join(member.value for member in enum_cls)
        raise CatalogError(f"{what}: {raw!r} is not one of [{allowed}]") from None


def catalog_from_dict(data: Mapping, *, origin: str = "<catalog>") -> TaxonomyCatalog:
    """Validate a parsed catalog document and build the lookup structure."""
    if not isinstance(data, Mapping):
        raise CatalogError(f"{origin}: catalog document must be an object")

    tactics: dict[str, TacticRef] = {}
    for entry in data.get("tactics", []):
        tid = entry.get("id")
        if not tid or not isinstance(tid, str):
            raise CatalogError(f"{origin}: tactic entry {entry!r} has no id")
        if tid in tactics:
            raise CatalogError(f"{origin}: duplicate tactic id {tid!r}")
        tactics[tid] = TacticRef(
            id=tid,
            name=entry.get("name", tid),
            source=_parse_enum(Source, entry.get("source", "ATTACK"), what=f"tactic {tid}"),
        )

    techniques: dict[str, TechniqueRef] = {}
    for entry in data.get("techniques", []):
        teid = entry.get("id")
        if not teid or not isinstance(teid, str):
            raise CatalogError(f"{origin}: technique entry {entry!r} has no id")
        if teid in techniques:
            raise CatalogError(f"{origin}: duplicate technique id {teid!r}")
        tactic_ids = entry.get("tactics", [])
        if not tactic_ids:
            raise CatalogError(f"{origin}: technique {teid} lists no tactics")
        for tid in tactic_ids:
            if tid not in tactics:
                raise CatalogError(
                    f"{origin}: technique {teid} references unknown tactic {tid!r}"
                )
        techniques[teid] = TechniqueRef(
            id=teid,
            name=entry.get("name", teid),
            source=_parse_enum(Source, entry.get("source", "ATTACK"), what=f"technique {teid}"),
            tactic_ids=frozenset(tactic_ids),
        )

    activity_map = data.get("activity_map", {})
    activity_of: dict[str, ActivityCategory] = {}
    for tid, raw in activity_map.items():
        if tid not in tactics:
            raise CatalogError(f"{origin}: activity_map names unknown tactic {tid!r}")
        activity_of[tid] = _parse_enum(ActivityCategory, raw, what=f"activity for {tid}")
    missing = sorted(set(tactics) - set(activity_of))
    if missing:
        raise CatalogError(
            f"{origin}: partition violation, tactics without an activity category: {missing}"
        )

    names: dict[str, str] = {}
    for ref in tactics.values():
        # Names shadowed by a duplicate stay id-only resolvable.
        names[ref.name] = "" if ref.name in names else ref.id
    names = {name: tid for name, tid in names.items() if tid}

    return TaxonomyCatalog(
        tactics=tactics,
        techniques=techniques,
        activity_of=activity_of,
        version=str(data.get("version", "unpinned")),
        _names=names,
    )


def load_catalog(path: str | Path) -> TaxonomyCatalog:
    """Load and validate a catalog file (see README for the schema)."""
    return catalog_from_dict(read_json(path, kind="catalog"), origin=str(path))


def catalog_to_dict(catalog: TaxonomyCatalog) -> dict:
    return {
        "version": catalog.version,
        "tactics": [
            {"id": t.id, "name": t.name, "source": t.source.value}
            for t in catalog.tactics.values()
        ],
        "techniques": [
            {
                "id": te.id,
                "name": te.name,
                "source": te.source.value,
                "tactics": sorted(te.tactic_ids),
            }
            for te in catalog.techniques.values()
        ],
        "activity_map": {tid: cat.value for tid, cat in catalog.activity_of.items()},
    }


def dump_catalog(catalog: TaxonomyCatalog, path: str | Path) -> None:
    write_json(path, catalog_to_dict(catalog))


def activity_category_of(catalog: TaxonomyCatalog, tactic: str) -> ActivityCategory:
    """Category of a tactic under the catalog's partition."""
    ref = catalog.resolve_tactic(tactic)
    return catalog.activity_of[ref.id]


def techniques_for_tactic(catalog: TaxonomyCatalog, tactic: str) -> set[str]:
    """All technique ids that list the tactic; possibly empty."""
    ref = catalog.resolve_tactic(tactic)
    return {te.id for te in catalog.techniques.values() if ref.id in te.tactic_ids}


def partition_sizes(catalog: TaxonomyCatalog) -> dict[ActivityCategory, int]:
    sizes = {category: 0 for category in ActivityCategory}
    for category in catalog.activity_of.values():
        sizes[category] += 1
    return sizes
