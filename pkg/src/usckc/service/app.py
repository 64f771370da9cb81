"""FastAPI service wrapping the core package.

The service computes over asset files it reads from its own filesystem
and returns results in the response body; it never writes output files.
Clients (the bundled CLI included) are responsible for persisting
exports where they want them.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..config import load_assets, resolve_asset_paths
from ..corpus import summarize_by_type
from ..errors import AssetError, UsckcError, ValidationError
from ..importers import import_taxonomies
from ..killchain import DEFAULT_CAP, extrapolate_chains
from ..metrics import load_scores
from ..report import (
    PipelineConfig,
    export_chain_set,
    render_score_rows,
    render_scorecards,
    run_pipeline,
    score_chain_export,
)
from ..taxonomy import catalog_to_dict
from . import schemas


def _asset_paths(selector: schemas.AssetSelector):
    return resolve_asset_paths(
        config_path=selector.config,
        overrides={
            "catalog": selector.catalog,
            "graph": selector.graph,
            "corpus": selector.corpus,
            "rules": selector.rules,
            "scores": selector.scores,
            "manifest": selector.manifest,
        },
    )


def create_app() -> FastAPI:
    app = FastAPI(title="usckc", version=__version__)

    @app.exception_handler(UsckcError)
    async def _usckc_error(request: Request, exc: UsckcError):
        body = schemas.ErrorBody(
            code=exc.code, message=str(exc), incident_id=exc.incident_id
        )
        return JSONResponse(status_code=400, content={"error": body.model_dump()})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "version": __version__}

    @app.post("/ingest", response_model=schemas.IngestResponse)
    def ingest(request: schemas.IngestRequest):
        assets = load_assets(_asset_paths(request))
        counts = summarize_by_type(assets.corpus)
        return schemas.IngestResponse(
            record_count=len(assets.corpus),
            by_type={key.value: count for key, count in counts.items()},
        )

    @app.post("/extrapolate", response_model=schemas.ExtrapolateResponse)
    def extrapolate(request: schemas.ExtrapolateRequest):
        assets = load_assets(_asset_paths(request))
        matches = [r for r in assets.corpus if r.incident_id == request.record]
        if not matches:
            raise ValidationError(f"no record with incident_id {request.record!r}")
        chains = extrapolate_chains(
            matches[0],
            assets.graph,
            assets.catalog,
            assets.rules,
            cap=request.cap or DEFAULT_CAP,
        )
        return schemas.ExtrapolateResponse(
            incident_id=chains.incident_id,
            observed_count=chains.observed_count,
            total_steps=chains.total_steps,
            branch_profile=list(chains.branch_profile),
            chain_count=len(chains.chains),
            pruned_count=chains.pruned_count,
            export_lines=export_chain_set(chains),
        )

    @app.post("/score", response_model=schemas.ScoreResponse)
    def score(request: schemas.ScoreRequest):
        paths = _asset_paths(request)
        scores = load_scores(paths["scores"])
        chains_path = Path(request.chains)
        try:
            lines = chains_path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise AssetError(f"cannot read chain export {chains_path}: {exc}") from exc
        rows = score_chain_export(lines, scores)
        return schemas.ScoreResponse(
            rows=[schemas.ScoreRowModel(**vars(row)) for row in rows],
            text=render_score_rows(rows),
        )

    @app.post("/summarize", response_model=schemas.SummarizeResponse)
    def summarize(request: schemas.SummarizeRequest):
        assets = load_assets(_asset_paths(request), with_manifest=True)
        counts = summarize_by_type(assets.corpus)
        by_type = {key.value: count for key, count in counts.items() if count}
        discrepancies = []
        manifest_by_type = None
        manifest_total = None
        if assets.manifest is not None:
            manifest_by_type = {
                key.value: count for key, count in assets.manifest.by_type.items()
            }
            manifest_total = assets.manifest.total_chains
            if assets.manifest.record_count != len(assets.corpus):
                discrepancies.append(
                    f"record count {len(assets.corpus)} != manifest "
                    f"{assets.manifest.record_count}"
                )
            for key in sorted(set(by_type) | set(manifest_by_type)):
                got = by_type.get(key, 0)
                expected = manifest_by_type.get(key, 0)
                if got != expected:
                    discrepancies.append(f"{key}: corpus has {got}, manifest says {expected}")
        return schemas.SummarizeResponse(
            record_count=len(assets.corpus),
            by_type=by_type,
            manifest_by_type=manifest_by_type,
            manifest_total_chains=manifest_total,
            discrepancies=discrepancies,
        )

    @app.post("/pipeline", response_model=schemas.PipelineResponse)
    def pipeline(request: schemas.PipelineRequest):
        assets = load_assets(_asset_paths(request))
        result = run_pipeline(
            assets.corpus,
            assets.catalog,
            assets.graph,
            assets.rules,
            assets.scores,
            PipelineConfig(cap=request.cap or DEFAULT_CAP),
        )
        return schemas.PipelineResponse(
            scorecards=[
                schemas.ScorecardModel(
                    incident_id=card.incident_id,
                    attack_type=card.attack_type,
                    year=card.year,
                    chain_count=card.chain_count,
                    branch_profile=list(card.branch_profile),
                    alpha_ta_plus=card.alpha_ta_plus,
                    alpha_te_plus=card.alpha_te_plus,
                    alpha_ta_minus=card.alpha_ta_minus,
                    alpha_te_minus=card.alpha_te_minus,
                    likelihood=card.likelihood,
                    consequence=card.consequence,
                    bands={key: band.value for key, band in card.bands.items()},
                )
                for card in result.scorecards
            ],
            scorecard_text=render_scorecards(result.scorecards),
            chain_export_lines=list(result.chain_export_lines),
            total_chains=result.total_chains,
        )

    @app.post("/import-taxonomy", response_model=schemas.ImportTaxonomyResponse)
    def import_taxonomy(request: schemas.ImportTaxonomyRequest):
        catalog = import_taxonomies(
            stix_path=request.stix,
            sparta_path=request.sparta,
            version=request.version,
        )
        return schemas.ImportTaxonomyResponse(
            catalog_text=json.dumps(catalog_to_dict(catalog), indent=2) + "\n",
            tactic_count=len(catalog.tactics),
            technique_count=len(catalog.techniques),
        )

    return app
