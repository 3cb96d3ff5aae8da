"""Classify proteins as metamorphic or single-fold from conformational ensembles."""

from .structure_io import (
    AlignmentDepthRecord,
    Ensemble,
    Structure,
    count_alignment_depth,
    load_ensemble,
    load_ensemble_dir,
    parse_structure_file,
    write_ensemble,
    write_structure,
)
from .geometry import (
    ContactMapStats,
    Superposition,
    average_rmsf,
    contact_map_stats,
    kabsch_superpose,
    pairwise_tmscore_matrix,
    rmsd,
    rmsf,
    tm_d0,
    tmscore,
)
from .ensembles import (
    ClusterResult,
    VariableRegion,
    cluster_ensemble,
    detect_variable_region,
    filter_by_plddt,
    synthesize_ensemble,
)
from .features import FeatureVector, LabeledExample, extract_features
from .forest import (
    CVReport,
    ForestModel,
    Hyperparams,
    balanced_accuracy,
    class_weights,
    grid_search_cv,
    predict_proba,
    roc_auc,
    stratified_kfold,
    train_forest,
    tune_threshold,
)
from .curation import CurationRecord, atlas_filter, codnas_filter, depth_filter, metamorphic_check
from .pipeline import PipelineConfig, RankingEntry, analyze_protein, rank_proteins

__version__ = "0.1.0"
