"""End-to-end orchestration: ensemble -> clusters -> features -> score.

``analyze_protein`` composes the per-protein stages with one config;
``rank_proteins`` runs a whole screen, collecting per-protein failures
instead of aborting, and sorts candidates by predicted probability.
Everything here is deterministic for a fixed config, and per-protein
work is independent, so batches parallelize without changing output.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .ensembles import (
    ClusterResult,
    cluster_ensemble,
    detect_variable_region,
    filter_by_plddt,
)
from .errors import DataError
from .features import FeatureVector, extract_features
from .forest import ForestModel, predict_proba
from .geometry import contact_map_stats
from .structure_io import Ensemble


@dataclass(frozen=True)
class PipelineConfig:
    """Thresholds steering representative extraction."""

    plddt_min: float = 70.0
    tm_cut: float = 0.6
    min_cluster_frac: float = 0.01


@dataclass(frozen=True)
class RankingEntry:
    """One screened protein: its score and headline features."""

    protein_id: str
    probability: float
    n_clusters: int
    min_tm: float
    top_plddt: Optional[float]


@dataclass(frozen=True)
class RankingFailure:
    protein_id: str
    error: str


def analyze_protein(
    ensemble: Ensemble, config: PipelineConfig = PipelineConfig()
) -> tuple[ClusterResult, FeatureVector]:
    """Run representative extraction and feature assembly for one ensemble.

    Confidence filtering, contact-variance region detection, clustering
    on variable-region similarity, then the nine-feature summary.

    Raises:
        DataError: from any stage, annotated with the protein id.
    """
    try:
        kept = filter_by_plddt(ensemble, config.plddt_min)
        stats = contact_map_stats(ensemble, subset=kept) if len(kept) >= 2 else contact_map_stats(ensemble)
        region = detect_variable_region(stats)
        result = cluster_ensemble(
            ensemble,
            kept,
            region,
            tm_threshold=config.tm_cut,
            min_cluster_frac=config.min_cluster_frac,
        )
        return result, extract_features(result, ensemble)
    except DataError as exc:
        raise type(exc)(f"{ensemble.protein_id}: {exc}") from exc


def score_protein(
    model: ForestModel, ensemble: Ensemble, config: PipelineConfig = PipelineConfig()
) -> tuple[RankingEntry, FeatureVector]:
    """Analyze one protein and score it with the trained model."""
    _, features = analyze_protein(ensemble, config)
    probability = predict_proba(model, features)
    entry = RankingEntry(
        protein_id=ensemble.protein_id,
        probability=probability,
        n_clusters=features.n_clusters,
        min_tm=features.min_tm,
        top_plddt=features.plddt1,
    )
    return entry, features


def rank_proteins(
    model: ForestModel,
    ensembles: Sequence[Ensemble],
    config: PipelineConfig = PipelineConfig(),
    jobs: int = 1,
) -> tuple[list[RankingEntry], list[RankingFailure]]:
    """Score a batch and rank by probability (descending, ties by id).

    A failing protein contributes a failure record and never affects the
    entries of the others.
    """
    entries: list[RankingEntry] = []
    failures: list[RankingFailure] = []
    if jobs > 1 and len(ensembles) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_score_or_fail, [(model, e, config) for e in ensembles]))
    else:
        outcomes = [_score_or_fail((model, e, config)) for e in ensembles]
    for outcome in outcomes:
        if isinstance(outcome, RankingFailure):
            failures.append(outcome)
        else:
            entries.append(outcome)
    entries.sort(key=lambda e: (-e.probability, e.protein_id))
    failures.sort(key=lambda f: f.protein_id)
    return entries, failures


def _score_or_fail(args):
    model, ensemble, config = args
    try:
        entry, _ = score_protein(model, ensemble, config)
        return entry
    except (DataError, ValueError) as exc:
        return RankingFailure(protein_id=ensemble.protein_id, error=str(exc))


def ranking_csv(entries: Sequence[RankingEntry]) -> str:
    lines = ["id,probability,K,min_tm,top_plddt"]
    for e in entries:
        top = "NA" if e.top_plddt is None else repr(float(e.top_plddt))
        lines.append(f"{e.protein_id},{e.probability!r},{e.n_clusters},{e.min_tm!r},{top}")
    return "\n".join(lines) + "\n"


def failures_csv(failures: Sequence[RankingFailure]) -> str:
    lines = ["id,error"]
    for f in failures:
        lines.append(f"{f.protein_id},{f.error.replace(',', ';')}")
    return "\n".join(lines) + "\n"


def cluster_table(result: ClusterResult, protein_id: str) -> str:
    """ClusterResult as a versioned plain-text table.

    One row per kept member: member index, cluster id (1-based; 0 for
    outliers), representative flag, outlier flag. The variable region
    rides in the header.
    """
    lines = [
        "# metamorph-clusters v1",
        f"# protein {protein_id}",
        f"# region {result.region.start} {result.region.end}",
        "member\tcluster\trepresentative\toutlier",
    ]
    assignment = {}
    for cluster_id, members in enumerate(result.clusters, start=1):
        for m in members:
            assignment[m] = cluster_id
    representatives = set(result.representatives)
    for member in result.kept:
        cluster_id = assignment.get(member, 0)
        lines.append(
            f"{member}\t{cluster_id}\t{int(member in representatives)}\t{int(cluster_id == 0)}"
        )
    return "\n".join(lines) + "\n"
