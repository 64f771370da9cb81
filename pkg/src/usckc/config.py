"""Asset location and loading.

Resolution order for each asset: an explicit per-asset override, then an
entry in the ``--config`` file (paths relative to that file), then the
directory named by ``USCKC_ASSET_DIR``, then the assets packaged with
this distribution.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from ._jsonio import read_json
from .corpus import CorpusManifest, IncidentRecord, load_corpus, load_manifest
from .killchain import ExtrapolationRule, load_rules
from .metrics import ScoreTable, load_scores
from .sysmodel import SegmentGraph, load_graph
from .taxonomy import TaxonomyCatalog, load_catalog

ASSET_DIR_ENV = "USCKC_ASSET_DIR"

ASSET_FILENAMES = {
    "catalog": "catalog.json",
    "graph": "graph.json",
    "corpus": "corpus.jsonl",
    "rules": "rules.json",
    "scores": "scores.json",
    "manifest": "manifest.json",
}


def packaged_asset_dir() -> Path:
    return Path(__file__).resolve().parent / "assets"


def resolve_asset_paths(
    config_path: str | Path | None = None,
    overrides: Mapping[str, str | None] | None = None,
    env: Mapping[str, str] | None = None,
) -> dict[str, Path]:
    env = os.environ if env is None else env
    base = Path(env[ASSET_DIR_ENV]) if env.get(ASSET_DIR_ENV) else packaged_asset_dir()

    named: dict[str, Path] = {}
    if config_path is not None:
        config_dir = Path(config_path).resolve().parent
        data = read_json(config_path, kind="config")
        if data.get("asset_dir"):
            base = (config_dir / data["asset_dir"]).resolve()
        for key in ASSET_FILENAMES:
            if data.get(key):
                named[key] = (config_dir / data[key]).resolve()

    paths: dict[str, Path] = {}
    for key, filename in ASSET_FILENAMES.items():
        override = (overrides or {}).get(key)
        if override:
            paths[key] = Path(override)
        elif key in named:
            paths[key] = named[key]
        else:
            paths[key] = base / filename
    return paths


@dataclass(frozen=True)
class LoadedAssets:
    catalog: TaxonomyCatalog
    graph: SegmentGraph
    corpus: list[IncidentRecord]
    rules: list[ExtrapolationRule]
    scores: ScoreTable
    manifest: CorpusManifest | None


def load_assets(paths: Mapping[str, Path], *, with_manifest: bool = False) -> LoadedAssets:
    catalog = load_catalog(paths["catalog"])
    manifest = None
    if with_manifest and Path(paths["manifest"]).exists():
        manifest = load_manifest(paths["manifest"])
    return LoadedAssets(
        catalog=catalog,
        graph=load_graph(paths["graph"]),
        corpus=load_corpus(paths["corpus"], catalog),
        rules=load_rules(paths["rules"], catalog),
        scores=load_scores(paths["scores"]),
        manifest=manifest,
    )
