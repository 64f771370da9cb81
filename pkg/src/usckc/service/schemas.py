"""Request/response models for the analysis service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class AssetSelector(BaseModel):
    """Names the asset files a request should run against.

    Every field is optional; unset assets resolve through the config file,
    the USCKC_ASSET_DIR environment variable, then the packaged defaults.
    """

    config: str | None = None
    catalog: str | None = None
    graph: str | None = None
    corpus: str | None = None
    rules: str | None = None
    scores: str | None = None
    manifest: str | None = None


class IngestRequest(AssetSelector):
    pass


class IngestResponse(BaseModel):
    record_count: int
    by_type: dict[str, int]


class ExtrapolateRequest(AssetSelector):
    record: str = Field(description="incident_id of the record to extrapolate")
    cap: int | None = Field(default=None, ge=1)


class ExtrapolateResponse(BaseModel):
    incident_id: str
    observed_count: int
    total_steps: int
    branch_profile: list[int]
    chain_count: int
    pruned_count: int
    export_lines: list[str]


class ScoreRequest(AssetSelector):
    chains: str = Field(description="path to a chain export file")


class ScoreRowModel(BaseModel):
    incident_id: str
    alpha_ta_plus: float
    alpha_te_plus: float
    alpha_ta_minus: float
    alpha_te_minus: float
    likelihood: float


class ScoreResponse(BaseModel):
    rows: list[ScoreRowModel]
    text: str


class SummarizeRequest(AssetSelector):
    pass


class SummarizeResponse(BaseModel):
    record_count: int
    by_type: dict[str, int]
    manifest_by_type: dict[str, int] | None
    manifest_total_chains: int | None
    discrepancies: list[str]


class PipelineRequest(AssetSelector):
    cap: int | None = Field(default=None, ge=1)


class ScorecardModel(BaseModel):
    incident_id: str
    attack_type: str
    year: int
    chain_count: int
    branch_profile: list[int]
    alpha_ta_plus: float
    alpha_te_plus: float
    alpha_ta_minus: float
    alpha_te_minus: float
    likelihood: float
    consequence: dict[str, float]
    bands: dict[str, str]


class PipelineResponse(BaseModel):
    scorecards: list[ScorecardModel]
    scorecard_text: str
    chain_export_lines: list[str]
    total_chains: int


class ImportTaxonomyRequest(BaseModel):
    stix: str | None = None
    sparta: str | None = None
    version: str | None = None


class ImportTaxonomyResponse(BaseModel):
    catalog_text: str
    tactic_count: int
    technique_count: int


class ErrorBody(BaseModel):
    code: str
    message: str
    incident_id: str | None = None
