"""Shared fixtures: bundled assets plus small record/catalog builders."""

from __future__ import annotations

import pytest

from usckc.config import load_assets, resolve_asset_paths
from usckc.corpus import AttackType, IncidentDate, IncidentRecord, ObservedStep
from usckc.killchain import AttackStep, Provenance, USCKC
from usckc.taxonomy import ActivityCategory, Phase, catalog_from_dict


@pytest.fixture(scope="session")
def asset_paths():
    return resolve_asset_paths()


@pytest.fixture(scope="session")
def assets(asset_paths):
    return load_assets(asset_paths, with_manifest=True)


@pytest.fixture(scope="session")
def catalog(assets):
    return assets.catalog


@pytest.fixture(scope="session")
def graph(assets):
    return assets.graph


@pytest.fixture(scope="session")
def corpus(assets):
    return assets.corpus


@pytest.fixture(scope="session")
def rules(assets):
    return assets.rules


@pytest.fixture(scope="session")
def scores(assets):
    return assets.scores


@pytest.fixture(scope="session")
def manifest(assets):
    return assets.manifest


@pytest.fixture(scope="session")
def rosat(corpus):
    return next(r for r in corpus if r.incident_id == "rosat-1998")


@pytest.fixture(scope="session")
def nasa(corpus):
    return next(r for r in corpus if r.incident_id == "nasa-2019")


def obs(
    index,
    technique,
    phase=None,
    activity=None,
    tactic=None,
    prerequisites=(),
    continuation=False,
):
    return ObservedStep(
        index=index,
        technique=technique,
        phase_hint=Phase(phase) if phase else None,
        activity_hint=ActivityCategory(activity) if activity else None,
        tactic_hint=tactic,
        prerequisites=tuple(prerequisites),
        continuation=continuation,
    )


def make_record(incident_id, steps, **kwargs):
    defaults = dict(
        attack_type=AttackType.JAMMING,
        date=IncidentDate(year=2020),
        description="test record",
        sources=("test-source",),
    )
    defaults.update(kwargs)
    return IncidentRecord(incident_id=incident_id, observed_steps=tuple(steps), **defaults)


def make_step(phase, activity, tactic, technique, provenance="observed", **kwargs):
    return AttackStep(
        phase=Phase(phase),
        activity=ActivityCategory(activity),
        tactic=tactic,
        technique=technique,
        provenance=Provenance(provenance),
        **kwargs,
    )


def make_chain(incident_id, steps):
    return USCKC(incident_id=incident_id, steps=tuple(steps))


def tiny_catalog(**overrides):
    """One-tactic catalog used by examples that do not need the default."""
    data = {
        "version": "test",
        "tactics": [{"id": "TA0040", "name": "Impact", "source": "BOTH"}],
        "techniques": [
            {"id": "IMP-0002", "name": "Disruption", "source": "SPARTA", "tactics": ["TA0040"]}
        ],
        "activity_map": {"TA0040": "objective"},
    }
    data.update(overrides)
    return catalog_from_dict(data)
