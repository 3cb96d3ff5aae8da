import numpy as np
import pytest

from metamorph.ensembles import (
    ClusterResult,
    VariableRegion,
    cluster_ensemble,
    detect_variable_region,
    filter_by_plddt,
    synthesize_ensemble,
)
from metamorph.features import (
    FeatureVector,
    LabeledExample,
    extract_features,
    features_to_row,
    read_features_csv,
    row_to_features,
    write_features_csv,
)
from metamorph.geometry import contact_map_stats, tmscore
from metamorph.structure_io import Ensemble

from conftest import helix_coords, make_structure, rotation_z


def manual_cluster_result(sizes, outlier_count, length=20):
    """A hand-assembled ClusterResult over identical-coordinate members."""
    total = sum(sizes) + outlier_count
    members = tuple(
        make_structure(helix_coords(length), plddt=np.full(length, 50.0 + (i % 47)), sid=f"m{i}")
        for i in range(total)
    )
    ensemble = Ensemble(protein_id="toy", members=members)
    clusters = []
    cursor = 0
    for size in sizes:
        clusters.append(tuple(range(cursor, cursor + size)))
        cursor += size
    outliers = tuple(range(cursor, total))
    reps = tuple(
        max(c, key=lambda i: (members[i].mean_plddt, -i)) for c in clusters
    )
    result = ClusterResult(
        clusters=tuple(clusters),
        representatives=reps,
        outliers=outliers,
        region=VariableRegion(start=1, end=length, score=0.0),
        kept=tuple(range(total)),
    )
    return result, ensemble


class TestExtraction:
    def test_decay_rates_from_sizes(self):
        result, ensemble = manual_cluster_result([100, 50, 25, 10], outlier_count=3)
        v = extract_features(result, ensemble)
        assert v.n_clusters == 4
        assert v.r1 == 0.5
        assert v.r2 == 0.5
        assert v.r3 == 0.4

    def test_single_cluster_conventions(self):
        result, ensemble = manual_cluster_result([7], outlier_count=0)
        v = extract_features(result, ensemble)
        assert (v.r1, v.r2, v.r3) == (0.0, 0.0, 0.0)
        assert v.min_tm == 1.0 and v.avg_tm == 1.0
        assert v.plddt1 is not None
        assert v.plddt2 is None and v.plddt3 is None

    def test_two_clusters_leave_third_plddt_missing(self):
        result, ensemble = manual_cluster_result([5, 3], outlier_count=0)
        v = extract_features(result, ensemble)
        assert v.plddt2 is not None and v.plddt3 is None

    def test_tm_features_match_per_pair_recomputation(self):
        ensemble, _ = synthesize_ensemble(3, [6, 5, 4], 28, 0.25, seed=21)
        kept = list(range(len(ensemble)))
        region = detect_variable_region(contact_map_stats(ensemble))
        result = cluster_ensemble(ensemble, kept, region)
        v = extract_features(result, ensemble)
        reps = [ensemble.members[i] for i in result.representatives]
        direct = [
            tmscore(reps[i], reps[j]) for i in range(len(reps)) for j in range(i + 1, len(reps))
        ]
        assert v.min_tm == pytest.approx(min(direct), abs=1e-9)
        assert v.avg_tm == pytest.approx(float(np.mean(direct)), abs=1e-9)
        assert v.min_tm <= v.avg_tm

    def test_representative_plddt_sorted_descending(self):
        ensemble, _ = synthesize_ensemble(3, 4, 26, 0.25, seed=33)
        kept = list(range(len(ensemble)))
        region = detect_variable_region(contact_map_stats(ensemble))
        v = extract_features(cluster_ensemble(ensemble, kept, region), ensemble)
        present = [p for p in (v.plddt1, v.plddt2, v.plddt3) if p is not None]
        assert present == sorted(present, reverse=True)

    def test_rigid_motion_invariance(self, rng):
        ensemble, _ = synthesize_ensemble(2, 5, 26, 0.25, seed=44)
        kept = filter_by_plddt(ensemble, 0.0)
        region = detect_variable_region(contact_map_stats(ensemble))
        base = extract_features(cluster_ensemble(ensemble, kept, region), ensemble)

        rotation = rotation_z(123.0)
        shift = np.array([4.0, -7.0, 11.0])
        moved = Ensemble(
            protein_id=ensemble.protein_id,
            members=tuple(
                make_structure(m.ca_coords @ rotation.T + shift, m.plddt, sid=m.id)
                for m in ensemble.members
            ),
        )
        region2 = detect_variable_region(contact_map_stats(moved))
        got = extract_features(cluster_ensemble(moved, kept, region2), moved)
        assert got.n_clusters == base.n_clusters
        assert (got.r1, got.r2, got.r3) == (base.r1, base.r2, base.r3)
        assert got.min_tm == pytest.approx(base.min_tm, abs=1e-9)
        assert got.avg_tm == pytest.approx(base.avg_tm, abs=1e-9)
        assert got.plddt1 == base.plddt1

    def test_duplicating_largest_cluster_halves_r1_exactly(self):
        ensemble, labels = synthesize_ensemble(2, [8, 4], 26, 0.2, seed=55)
        kept = list(range(len(ensemble)))
        region = VariableRegion(start=1, end=26, score=1.0)
        base = extract_features(cluster_ensemble(ensemble, kept, region), ensemble)
        assert base.n_clusters == 2 and base.r1 == 0.5

        largest = [i for i, m in enumerate(labels) if m == 0]
        extra = tuple(
            make_structure(ensemble.members[i].ca_coords, ensemble.members[i].plddt, sid=f"dup{i}")
            for i in largest
        )
        doubled = Ensemble(protein_id="p", members=ensemble.members + extra)
        grown = extract_features(
            cluster_ensemble(doubled, list(range(len(doubled))), region), doubled
        )
        assert grown.n_clusters == 2
        assert grown.r1 == base.r1 / 2.0


class TestRowsAndCsv:
    def test_row_renders_na_for_missing(self):
        result, ensemble = manual_cluster_result([4], outlier_count=0)
        row = features_to_row(extract_features(result, ensemble))
        assert row[0] == "toy"
        assert row[-2:] == ["NA", "NA"]

    def test_row_roundtrip_identity(self):
        vector = FeatureVector(
            protein_id="x",
            n_clusters=3,
            r1=0.625,
            r2=1.0 / 3.0,
            r3=0.0,
            min_tm=0.2847391,
            avg_tm=0.51,
            plddt1=91.25,
            plddt2=88.0,
            plddt3=None,
        )
        row = features_to_row(vector)
        assert features_to_row(row_to_features(row)) == row
        assert row_to_features(row) == vector

    def test_csv_roundtrip_with_labels(self):
        result, ensemble = manual_cluster_result([4, 2], outlier_count=1)
        vectors = [extract_features(result, ensemble)]
        text = write_features_csv(vectors, labels=[1])
        parsed, labels = read_features_csv(text)
        assert labels == [1]
        assert parsed[0] == vectors[0]
        assert write_features_csv(parsed, labels=labels) == text

    def test_csv_without_labels(self):
        result, ensemble = manual_cluster_result([4], outlier_count=0)
        text = write_features_csv([extract_features(result, ensemble)])
        parsed, labels = read_features_csv(text)
        assert labels is None and len(parsed) == 1

    def test_bad_header_rejected(self):
        with pytest.raises(ValueError):
            read_features_csv("id,wrong\nx,1\n")


class TestValidation:
    def test_feature_vector_bounds(self):
        good = dict(
            protein_id="x", n_clusters=1, r1=0.0, r2=0.0, r3=0.0,
            min_tm=1.0, avg_tm=1.0, plddt1=90.0, plddt2=None, plddt3=None,
        )
        FeatureVector(**good)
        with pytest.raises(ValueError):
            FeatureVector(**{**good, "r1": 1.5})
        with pytest.raises(ValueError):
            FeatureVector(**{**good, "n_clusters": 0})
        with pytest.raises(ValueError):
            FeatureVector(**{**good, "min_tm": 0.0})
        with pytest.raises(ValueError):
            FeatureVector(**{**good, "plddt1": 120.0})
        with pytest.raises(ValueError):
            FeatureVector(**{**good, "plddt1": 80.0, "plddt2": 85.0})

    def test_min_cannot_exceed_avg(self):
        with pytest.raises(ValueError):
            FeatureVector(
                protein_id="x", n_clusters=2, r1=0.5, r2=0.0, r3=0.0,
                min_tm=0.9, avg_tm=0.5, plddt1=90.0, plddt2=80.0, plddt3=None,
            )

    def test_labeled_example_binary(self):
        result, ensemble = manual_cluster_result([3], outlier_count=0)
        vector = extract_features(result, ensemble)
        LabeledExample(features=vector, label=0)
        with pytest.raises(ValueError):
            LabeledExample(features=vector, label=2)

    def test_as_array_encodes_missing_as_nan(self):
        result, ensemble = manual_cluster_result([3], outlier_count=0)
        arr = extract_features(result, ensemble).as_array()
        assert arr.shape == (9,)
        assert np.isnan(arr[7]) and np.isnan(arr[8])
        assert arr[0] == 1.0
