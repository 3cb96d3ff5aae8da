"""Statistical features summarizing an ensemble's conformational modality.

Nine predictors per protein: the cluster count, three cluster-size
decay rates, the minimum and average pairwise TMscore among cluster
representatives, and the three highest representative confidence
values. Proteins with fewer than three representatives leave the
trailing confidence slots missing (``None`` in memory, the literal
token ``NA`` on disk).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .ensembles import ClusterResult
from .geometry import pairwise_tmscore_matrix
from .structure_io import Ensemble

FEATURE_NAMES = ("K", "R1", "R2", "R3", "min_tm", "avg_tm", "plddt1", "plddt2", "plddt3")
CSV_HEADER = "id," + ",".join(FEATURE_NAMES)
NA_TOKEN = "NA"


@dataclass(frozen=True)
class FeatureVector:
    """The nine predictors extracted for one protein."""

    protein_id: str
    n_clusters: int
    r1: float
    r2: float
    r3: float
    min_tm: float
    avg_tm: float
    plddt1: Optional[float]
    plddt2: Optional[float]
    plddt3: Optional[float]

    def __post_init__(self):
        if self.n_clusters < 1:
            raise ValueError("cluster count must be at least 1")
        for name in ("r1", "r2", "r3"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if not 0.0 < self.min_tm <= 1.0 or not 0.0 < self.avg_tm <= 1.0:
            raise ValueError("TMscore features must lie in (0, 1]")
        if self.min_tm > self.avg_tm + 1e-12:
            raise ValueError("min_tm cannot exceed avg_tm")
        present = [p for p in (self.plddt1, self.plddt2, self.plddt3) if p is not None]
        if any(not 0.0 <= p <= 100.0 for p in present):
            raise ValueError("pLDDT features must lie in [0, 100]")
        if present != sorted(present, reverse=True):
            raise ValueError("pLDDT features must be sorted descending")

    def values(self) -> tuple:
        """The nine feature values in canonical column order."""
        return (
            self.n_clusters,
            self.r1,
            self.r2,
            self.r3,
            self.min_tm,
            self.avg_tm,
            self.plddt1,
            self.plddt2,
            self.plddt3,
        )

    def as_array(self) -> np.ndarray:
        """Feature row as floats with missing values encoded as NaN."""
        return np.array(
            [float(v) if v is not None else np.nan for v in self.values()], dtype=float
        )


@dataclass(frozen=True)
class LabeledExample:
    """A feature vector paired with its binary class label (1 = metamorphic)."""

    features: FeatureVector
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError("label must be 0 (single-fold) or 1 (metamorphic)")


def extract_features(result: ClusterResult, ensemble: Ensemble) -> FeatureVector:
    """Build the feature vector from a clustering of the ensemble.

    Decay rate k is ``|C_{k+1}| / |C_k|`` (0 when cluster k+1 is
    absent). TMscore features come from the full-chain pairwise matrix
    over the cluster representatives; a lone representative yields 1.0
    for both (maximal self-similarity). Confidence features are the
    three largest representative mean pLDDTs, descending.
    """
    sizes = result.sizes()
    n_clusters = len(sizes)

    def decay(k: int) -> float:
        if k + 1 >= n_clusters:
            return 0.0
        return sizes[k + 1] / sizes[k]

    if n_clusters == 1:
        min_tm = avg_tm = 1.0
    else:
        reps = [ensemble.members[i] for i in result.representatives]
        matrix = pairwise_tmscore_matrix(reps)
        off_diag = matrix[np.triu_indices(n_clusters, k=1)]
        min_tm = float(off_diag.min())
        avg_tm = float(off_diag.mean())

    rep_plddt = sorted(
        (ensemble.members[i].mean_plddt for i in result.representatives), reverse=True
    )
    top3: list[Optional[float]] = (rep_plddt + [None, None, None])[:3]

    return FeatureVector(
        protein_id=ensemble.protein_id,
        n_clusters=n_clusters,
        r1=decay(0),
        r2=decay(1),
        r3=decay(2),
        min_tm=min_tm,
        avg_tm=avg_tm,
        plddt1=top3[0],
        plddt2=top3[1],
        plddt3=top3[2],
    )


def _format_value(value) -> str:
    if value is None:
        return NA_TOKEN
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def features_to_row(vector: FeatureVector) -> list[str]:
    """Render a feature vector as its ordered CSV fields (id first)."""
    return [vector.protein_id] + [_format_value(v) for v in vector.values()]


def row_to_features(fields: Sequence[str]) -> FeatureVector:
    """Parse CSV fields (id + 9 values) back into a feature vector."""
    if len(fields) != 10:
        raise ValueError(f"expected 10 fields (id + 9 features), got {len(fields)}")

    def parse(text: str) -> Optional[float]:
        return None if text == NA_TOKEN else float(text)

    return FeatureVector(
        protein_id=fields[0],
        n_clusters=int(fields[1]),
        r1=float(fields[2]),
        r2=float(fields[3]),
        r3=float(fields[4]),
        min_tm=float(fields[5]),
        avg_tm=float(fields[6]),
        plddt1=parse(fields[7]),
        plddt2=parse(fields[8]),
        plddt3=parse(fields[9]),
    )


def write_features_csv(vectors: Sequence[FeatureVector], labels=None) -> str:
    """Feature table as CSV text; optional labels add a final column."""
    header = CSV_HEADER + ("" if labels is None else ",label")
    lines = [header]
    for i, vector in enumerate(vectors):
        row = features_to_row(vector)
        if labels is not None:
            row.append(str(int(labels[i])))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def read_features_csv(text: str) -> tuple[list[FeatureVector], Optional[list[int]]]:
    """Parse a feature CSV, returning vectors and labels when present."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ValueError("empty feature table")
    header = lines[0].split(",")
    expected = CSV_HEADER.split(",")
    if header[: len(expected)] != expected:
        raise ValueError(f"unexpected feature header: {lines[0]!r}")
    with_label = header == expected + ["label"]
    if not with_label and header != expected:
        raise ValueError(f"unexpected feature header: {lines[0]!r}")

    vectors: list[FeatureVector] = []
    labels: list[int] = []
    for line in lines[1:]:
        fields = line.split(",")
        vectors.append(row_to_features(fields[:10]))
        if with_label:
            labels.append(int(fields[10]))
    return vectors, (labels if with_label else None)
