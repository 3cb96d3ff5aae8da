"""Dataset-construction filters labeling proteins from local files.

Each filter applies one curation criterion with strict inequalities:
trajectory stability (average RMSF strictly below threshold),
experimental stability (maximum pairwise RMSD strictly below
threshold), metamorphic candidacy (a conformation pair strictly above
4 Angstroms RMSD), and alignment depth (at least 20 homologs). All
geometry is C-alpha based.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .geometry import rmsd, rmsf
from .structure_io import AlignmentDepthRecord, Ensemble, Structure

# depth_ok marks proteins surviving the alignment-depth gate, whose class
# is decided by a separate filter.
VERDICTS = ("single_fold_atlas", "single_fold_codnas", "metamorphic_candidate", "excluded", "depth_ok")

ATLAS_RMSF_THRESHOLD = 0.83
CODNAS_RMSD_THRESHOLD = 0.80
METAMORPHIC_RMSD_THRESHOLD = 4.0
MIN_ALIGNMENT_DEPTH = 20


@dataclass(frozen=True)
class CurationRecord:
    """Outcome of curation for one protein: metrics, verdict, reason."""

    protein_id: str
    avg_rmsf: Optional[float]
    max_pair_rmsd: Optional[float]
    msa_depth: Optional[int]
    verdict: str
    reason: str

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")


def atlas_filter(ensemble: Ensemble, threshold: float = ATLAS_RMSF_THRESHOLD) -> tuple[bool, float]:
    """Trajectory stability: passes when average RMSF is strictly below threshold."""
    average = float(rmsf(ensemble).mean())
    return average < threshold, average


def codnas_filter(
    structures: Sequence[Structure], threshold: float = CODNAS_RMSD_THRESHOLD
) -> tuple[bool, float]:
    """Experimental stability: passes when every pair sits strictly below the RMSD threshold."""
    if len(structures) < 2:
        raise ValueError("need at least 2 structures to compare")
    worst = 0.0
    for i in range(len(structures)):
        for j in range(i + 1, len(structures)):
            worst = max(worst, rmsd(structures[i].ca_coords, structures[j].ca_coords))
    return worst < threshold, worst


def metamorphic_check(
    a: Structure, b: Structure, threshold: float = METAMORPHIC_RMSD_THRESHOLD
) -> tuple[bool, float]:
    """Fold-switch evidence: passes when the pair RMSD is strictly above 4 Angstroms."""
    value = rmsd(a.ca_coords, b.ca_coords)
    return value > threshold, value


def depth_filter(record: AlignmentDepthRecord, min_depth: int = MIN_ALIGNMENT_DEPTH) -> bool:
    """Alignment informativeness: passes with at least ``min_depth`` homologs."""
    return record.depth >= min_depth


def curate_atlas(ensemble: Ensemble, threshold: float = ATLAS_RMSF_THRESHOLD) -> CurationRecord:
    passed, average = atlas_filter(ensemble, threshold)
    return CurationRecord(
        protein_id=ensemble.protein_id,
        avg_rmsf=average,
        max_pair_rmsd=None,
        msa_depth=None,
        verdict="single_fold_atlas" if passed else "excluded",
        reason=f"avg RMSF {average:.4f} {'<' if passed else '>='} {threshold}",
    )


def curate_codnas(
    protein_id: str,
    structures: Sequence[Structure],
    threshold: float = CODNAS_RMSD_THRESHOLD,
) -> CurationRecord:
    passed, worst = codnas_filter(structures, threshold)
    return CurationRecord(
        protein_id=protein_id,
        avg_rmsf=None,
        max_pair_rmsd=worst,
        msa_depth=None,
        verdict="single_fold_codnas" if passed else "excluded",
        reason=f"max pairwise RMSD {worst:.4f} {'<' if passed else '>='} {threshold}",
    )


def curate_metamorphic(
    protein_id: str,
    structures: Sequence[Structure],
    threshold: float = METAMORPHIC_RMSD_THRESHOLD,
) -> CurationRecord:
    """Metamorphic candidacy from the most dissimilar conformation pair."""
    if len(structures) < 2:
        raise ValueError("need at least 2 structures to compare")
    worst = 0.0
    for i in range(len(structures)):
        for j in range(i + 1, len(structures)):
            worst = max(worst, rmsd(structures[i].ca_coords, structures[j].ca_coords))
    passed = worst > threshold
    return CurationRecord(
        protein_id=protein_id,
        avg_rmsf=None,
        max_pair_rmsd=worst,
        msa_depth=None,
        verdict="metamorphic_candidate" if passed else "excluded",
        reason=f"max pairwise RMSD {worst:.4f} {'>' if passed else '<='} {threshold}",
    )


def curate_depth(record: AlignmentDepthRecord, min_depth: int = MIN_ALIGNMENT_DEPTH) -> CurationRecord:
    passed = depth_filter(record, min_depth)
    return CurationRecord(
        protein_id=record.protein_id,
        avg_rmsf=None,
        max_pair_rmsd=None,
        msa_depth=record.depth,
        verdict="depth_ok" if passed else "excluded",
        reason=f"MSA depth {record.depth} {'>=' if passed else '<'} {min_depth}",
    )


def curation_csv(records: Sequence[CurationRecord]) -> str:
    """Curation report as CSV with NA for unavailable metrics."""
    lines = ["id,avg_rmsf,max_pair_rmsd,msa_depth,verdict,reason"]
    for r in records:
        fields = [
            r.protein_id,
            "NA" if r.avg_rmsf is None else repr(float(r.avg_rmsf)),
            "NA" if r.max_pair_rmsd is None else repr(float(r.max_pair_rmsd)),
            "NA" if r.msa_depth is None else str(int(r.msa_depth)),
            r.verdict,
            r.reason.replace(",", ";"),
        ]
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"
