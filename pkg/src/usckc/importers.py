"""Converters from upstream taxonomy exports to the native catalog schema.

Two upstream formats are supported: an ATT&CK STIX 2.1 bundle (the
``enterprise-attack`` JSON published with each release) and a SPARTA
export (a JSON document with ``tactics`` and ``techniques`` lists, see
README). Both convert to native catalog dictionaries that can be merged:
tactics shared by both taxonomies collapse into one entry with source
BOTH, keeping the ATT&CK identifier, so the joint tactic set equals the
ATT&CK tactic set.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

from ._jsonio import read_json
from .errors import CatalogError
from .taxonomy import ActivityCategory, TaxonomyCatalog, catalog_from_dict

# Canonical partition of tactic names into activity categories.
ACTIVITY_BY_TACTIC_NAME = {
    "Exfiltration": ActivityCategory.OBJECTIVE,
    "Impact": ActivityCategory.OBJECTIVE,
    "Initial Access": ActivityCategory.MILESTONE,
    "Lateral Movement": ActivityCategory.MILESTONE,
    "Credential Access": ActivityCategory.MILESTONE,
    "Resource Development": ActivityCategory.ENABLING,
    "Execution": ActivityCategory.ENABLING,
    "Privilege Escalation": ActivityCategory.ENABLING,
    "Persistence": ActivityCategory.ENABLING,
    "Command & Control": ActivityCategory.ENABLING,
    "Command and Control": ActivityCategory.ENABLING,
    "Defense Evasion": ActivityCategory.ENABLING,
    "Reconnaissance": ActivityCategory.INFO_DISCOVERY,
    "Discovery": ActivityCategory.INFO_DISCOVERY,
    "Collection": ActivityCategory.INFO_DISCOVERY,
}


def _activity_for(name: str, overrides: Mapping[str, str] | None) -> ActivityCategory:
    if overrides and name in overrides:
        return ActivityCategory(overrides[name])
    if name in ACTIVITY_BY_TACTIC_NAME:
        return ACTIVITY_BY_TACTIC_NAME[name]
    raise CatalogError(
        f"no activity category known for tactic {name!r}; "
        f"supply one via the activity overrides"
    )


def _attack_external_id(obj: Mapping) -> str | None:
    for ref in obj.get("external_references", []):
        if ref.get("source_name") == "mitre-attack" and ref.get("external_id"):
            return ref["external_id"]
    return None


def catalog_dict_from_stix(
    bundle: Mapping,
    *,
    version: str | None = None,
    activity_overrides: Mapping[str, str] | None = None,
) -> dict:
    """Convert an ATT&CK STIX 2.1 bundle to a native catalog dictionary."""
    objects = bundle.get("objects", [])
    tactics: dict[str, dict] = {}
    shortname_to_id: dict[str, str] = {}
    for obj in objects:
        if obj.get("type") != "x-mitre-tactic" or obj.get("revoked"):
            continue
        external_id = _attack_external_id(obj)
        if not external_id:
            raise CatalogError(f"STIX tactic {obj.get('name')!r} has no ATT&CK external_id")
        tactics[external_id] = {
            "id": external_id,
            "name": obj.get("name", external_id),
            "source": "ATTACK",
        }
        shortname_to_id[obj.get("x_mitre_shortname", "")] = external_id

    techniques = []
    for obj in objects:
        if obj.get("type") != "attack-pattern":
            continue
        if obj.get("revoked") or obj.get("x_mitre_deprecated"):
            continue
        external_id = _attack_external_id(obj)
        if not external_id:
            continue
        tactic_ids = sorted(
            {
                shortname_to_id[phase.get("phase_name", "")]
                for phase in obj.get("kill_chain_phases", [])
                if phase.get("kill_chain_name") == "mitre-attack"
                and phase.get("phase_name", "") in shortname_to_id
            }
        )
        if not tactic_ids:
            continue
        techniques.append(
            {
                "id": external_id,
                "name": obj.get("name", external_id),
                "source": "ATTACK",
                "tactics": tactic_ids,
            }
        )

    return {
        "version": version or str(bundle.get("spec_version", "unpinned")),
        "tactics": sorted(tactics.values(), key=lambda t: t["id"]),
        "techniques": sorted(techniques, key=lambda t: t["id"]),
        "activity_map": {
            tid: _activity_for(entry["name"], activity_overrides).value
            for tid, entry in sorted(tactics.items())
        },
    }


def catalog_dict_from_sparta(
    export: Mapping,
    *,
    version: str | None = None,
    activity_overrides: Mapping[str, str] | None = None,
) -> dict:
    """Convert a SPARTA export document to a native catalog dictionary."""
    tactics: dict[str, dict] = {}
    name_to_id: dict[str, str] = {}
    for entry in export.get("tactics", []):
        tid = entry.get("id")
        name = entry.get("name", tid)
        if not tid:
            raise CatalogError(f"SPARTA tactic entry {entry!r} has no id")
        tactics[tid] = {"id": tid, "name": name, "source": "SPARTA"}
        name_to_id[name] = tid

    techniques = []
    for entry in export.get("techniques", []):
        teid = entry.get("id")
        if not teid:
            raise CatalogError(f"SPARTA technique entry {entry!r} has no id")
        tactic_ids = []
        for key in entry.get("tactics", []):
            if key in tactics:
                tactic_ids.append(key)
            elif key in name_to_id:
                tactic_ids.append(name_to_id[key])
            else:
                raise CatalogError(
                    f"SPARTA technique {teid} references unknown tactic {key!r}"
                )
        if not tactic_ids:
            raise CatalogError(f"SPARTA technique {teid} lists no tactics")
        techniques.append(
            {
                "id": teid,
                "name": entry.get("name", teid),
                "source": "SPARTA",
                "tactics": sorted(set(tactic_ids)),
            }
        )

    return {
        "version": version or str(export.get("version", "unpinned")),
        "tactics": sorted(tactics.values(), key=lambda t: t["id"]),
        "techniques": sorted(techniques, key=lambda t: t["id"]),
        "activity_map": {
            tid: _activity_for(entry["name"], activity_overrides).value
            for tid, entry in sorted(tactics.items())
        },
    }


def merge_catalog_dicts(*parts: Mapping, version: str | None = None) -> dict:
    """Join catalog dictionaries into one joint catalog.

    Tactics are unified by display name: a tactic appearing in several
    parts keeps the first (ATT&CK-style) identifier and is marked BOTH
    when its sources differ. Technique identifiers must be globally
    unique across parts unless the entries agree exactly.
    """
    tactics_by_name: dict[str, dict] = {}
    id_remap: dict[str, str] = {}
    for part in parts:
        for entry in part.get("tactics", []):
            name = entry["name"]
            if name in tactics_by_name:
                kept = tactics_by_name[name]
                if kept["source"] != entry["source"]:
                    kept["source"] = "BOTH"
                id_remap[entry["id"]] = kept["id"]
            else:
                tactics_by_name[name] = dict(entry)
                id_remap[entry["id"]] = entry["id"]

    activity_map: dict[str, str] = {}
    for part in parts:
        for tid, category in part.get("activity_map", {}).items():
            canonical = id_remap.get(tid, tid)
            if canonical in activity_map and activity_map[canonical] != category:
                raise CatalogError(
                    f"merge conflict: tactic {canonical} categorized as both "
                    f"{activity_map[canonical]} and {category}"
                )
            activity_map[canonical] = category

    techniques: dict[str, dict] = {}
    for part in parts:
        for entry in part.get("techniques", []):
            remapped = dict(entry)
            remapped["tactics"] = sorted(
                {id_remap.get(tid, tid) for tid in entry.get("tactics", [])}
            )
            teid = remapped["id"]
            if teid in techniques and techniques[teid] != remapped:
                raise CatalogError(f"merge conflict: technique {teid} defined differently")
            techniques[teid] = remapped

    return {
        "version": version or "unpinned",
        "tactics": sorted(tactics_by_name.values(), key=lambda t: t["id"]),
        "techniques": sorted(techniques.values(), key=lambda t: t["id"]),
        "activity_map": dict(sorted(activity_map.items())),
    }


def import_taxonomies(
    stix_path: str | Path | None = None,
    sparta_path: str | Path | None = None,
    *,
    version: str | None = None,
) -> TaxonomyCatalog:
    """Load upstream exports, convert, merge, and validate."""
    parts = []
    if stix_path is not None:
        parts.append(catalog_dict_from_stix(read_json(stix_path, kind="STIX bundle")))
    if sparta_path is not None:
        parts.append(catalog_dict_from_sparta(read_json(sparta_path, kind="SPARTA export")))
    if not parts:
        raise CatalogError("import requires at least one of a STIX bundle or SPARTA export")
    merged = merge_catalog_dicts(*parts, version=version)
    return catalog_from_dict(merged, origin="<imported>")
