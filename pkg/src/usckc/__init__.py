"""Reconstruct, extrapolate, and score unified space cyber kill chains."""

from .corpus import (
    AttackType,
    IncidentDate,
    IncidentRecord,
    ObservedStep,
    load_corpus,
    load_manifest,
    summarize_by_type,
)
from .errors import (
    AssetError,
    CapExceededError,
    ChainError,
    UsckcError,
    ValidationError,
)
from .killchain import (
    AttackStep,
    ChainSet,
    ExtrapolationRule,
    PlausibilityResult,
    Provenance,
    USCKC,
    construct_usckc,
    dedupe_chains,
    extrapolate_chains,
    load_rules,
    plausibility_check,
    segment_phases,
)
from .metrics import (
    ConsequenceBand,
    ConsequenceVector,
    ScoreTable,
    aggregate_consequence,
    attack_likelihood,
    attack_sophistication,
    chain_likelihood,
    chain_sophistication,
    classify_consequence_band,
    load_scores,
)
from .report import (
    PipelineConfig,
    PipelineResult,
    Scorecard,
    run_pipeline,
    yearly_series,
)
from .sysmodel import InfraNode, Segment, SegmentGraph, load_graph, through_phase_count
from .taxonomy import (
    ActivityCategory,
    Phase,
    Source,
    TacticRef,
    TaxonomyCatalog,
    TechniqueRef,
    activity_category_of,
    load_catalog,
    techniques_for_tactic,
)

__version__ = "0.1.0"
