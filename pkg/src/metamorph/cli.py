"""Command-line interface.

One binary with subcommands covering the full workflow: synthesize test
ensembles, extract features, cluster, train/cross-validate the
classifier, score feature tables, rank ensemble batches, and run the
curation filters. Exit codes: 0 success, 1 usage error, 2 data error.
All randomness flows from a single --seed, so identical invocations
produce byte-identical outputs regardless of --jobs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .curation import (
    curate_atlas,
    curate_codnas,
    curate_depth,
    curate_metamorphic,
    curation_csv,
)
from .ensembles import cluster_ensemble, detect_variable_region, filter_by_plddt, synthesize_ensemble
from .errors import DataError
from .features import read_features_csv, write_features_csv
from .forest import (
    cv_report_csv,
    default_grid,
    expand_grid,
    grid_scores_csv,
    grid_search_cv,
    model_from_text,
    model_to_text,
    predict_proba,
    roc_csv,
)
from .geometry import contact_map_stats
from .pipeline import (
    PipelineConfig,
    analyze_protein,
    cluster_table,
    failures_csv,
    rank_proteins,
    ranking_csv,
)
from .structure_io import (
    count_alignment_depth,
    alignment_format_for,
    iter_ensemble_entries,
    load_ensemble_entry,
    parse_structure_path,
    write_structure,
)


class _Parser(argparse.ArgumentParser):
    """Argument parser that exits 1 on usage errors (2 is for data errors)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _pipeline_flags(sub):
    sub.add_argument("--plddt-min", type=float, default=70.0,
                     help="confidence filter: minimum mean pLDDT (default 70)")
    sub.add_argument("--tm-cut", type=float, default=0.6,
                     help="clustering cut: members merge while TMscore >= this (default 0.6)")
    sub.add_argument("--min-cluster-frac", type=float, default=0.01,
                     help="clusters below max(2, frac*kept) become outliers (default 0.01)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="metamorph",
                     description="Classify proteins as metamorphic or single-fold "
                                 "from conformational ensembles.")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("features", parents=[], help="extract feature vectors from ensembles")
    p.add_argument("inputs", nargs="+", metavar="ensemble",
                   help="one protein per path: a multi-model file or a directory of files")
    _pipeline_flags(p)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)

    p = commands.add_parser("cluster", help="emit the cluster table for one ensemble")
    p.add_argument("input", metavar="ensemble")
    _pipeline_flags(p)
    p.add_argument("--out", required=True)

    p = commands.add_parser("train", help="grid-search, refit and save the classifier")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", default=None, help="id,label CSV (or use a label column in --features)")
    p.add_argument("--grid", default="default", help="'default' or a JSON grid file")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)

    p = commands.add_parser("cv", help="cross-validated evaluation with grid search")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", default=None)
    p.add_argument("--grid", default="default")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--report", required=True, help="per-fold metrics CSV")
    p.add_argument("--roc", default=None, help="ROC point CSV")
    p.add_argument("--grid-scores", default=None, help="per-configuration audit CSV")

    p = commands.add_parser("predict", help="score a feature table with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)

    p = commands.add_parser("rank", help="analyze and rank a directory of ensembles")
    p.add_argument("--model", required=True)
    p.add_argument("--ensembles", required=True)
    _pipeline_flags(p)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--failures", default=None)

    p = commands.add_parser("curate", help="apply one curation filter to local files")
    p.add_argument("--mode", required=True, choices=["atlas", "codnas", "metamorphic", "depth"])
    p.add_argument("inputs", nargs="+")
    p.add_argument("--threshold", type=float, default=None,
                   help="override the mode's default threshold")
    p.add_argument("--out", required=True)

    p = commands.add_parser("synth", help="generate a synthetic ensemble with planted modes")
    p.add_argument("--modes", type=int, default=2)
    p.add_argument("--per-mode", type=int, default=50)
    p.add_argument("--length", type=int, default=60)
    p.add_argument("--sigma", type=float, default=0.3)
    p.add_argument("--plddt-low", type=float, default=80.0)
    p.add_argument("--plddt-high", type=float, default=95.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    return parser


def _config(args) -> PipelineConfig:
    return PipelineConfig(
        plddt_min=args.plddt_min,
        tm_cut=args.tm_cut,
        min_cluster_frac=args.min_cluster_frac,
    )


def _load_protein(path_text: str):
    path = Path(path_text)
    if not path.exists():
        raise DataError(f"no such input: {path}")
    return load_ensemble_entry(path, path.stem if path.is_file() else path.name)


def _read_labels(path_text: str) -> dict[str, int]:
    lines = [ln for ln in Path(path_text).read_text().splitlines() if ln.strip()]
    if not lines or lines[0].split(",")[:2] != ["id", "label"]:
        raise DataError(f"{path_text}: expected an 'id,label' CSV")
    labels = {}
    for ln in lines[1:]:
        fields = ln.split(",")
        labels[fields[0]] = int(fields[1])
    return labels


def _load_training(features_path: str, labels_path):
    from .features import LabeledExample

    vectors, inline = read_features_csv(Path(features_path).read_text())
    if labels_path is not None:
        table = _read_labels(labels_path)
        missing = [v.protein_id for v in vectors if v.protein_id not in table]
        if missing:
            raise DataError(f"no label for: {', '.join(missing[:5])}")
        labels = [table[v.protein_id] for v in vectors]
    elif inline is not None:
        labels = inline
    else:
        raise DataError("no labels: pass --labels or include a label column")
    return [LabeledExample(features=v, label=y) for v, y in zip(vectors, labels)]


def _load_grid(spec: str):
    if spec == "default":
        return default_grid()
    return expand_grid(json.loads(Path(spec).read_text()))


def _cmd_features(args) -> int:
    config = _config(args)
    vectors = []
    proteins = [_load_protein(p) for p in args.inputs]
    if args.jobs > 1 and len(proteins) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            analyzed = list(pool.map(analyze_protein, proteins, [config] * len(proteins)))
    else:
        analyzed = [analyze_protein(e, config) for e in proteins]
    vectors = [features for _, features in analyzed]
    Path(args.out).write_text(write_features_csv(vectors))
    return 0


def _cmd_cluster(args) -> int:
    ensemble = _load_protein(args.input)
    result, _ = analyze_protein(ensemble, _config(args))
    Path(args.out).write_text(cluster_table(result, ensemble.protein_id))
    return 0


def _cmd_train(args) -> int:
    examples = _load_training(args.features, args.labels)
    _, model = grid_search_cv(examples, grid=_load_grid(args.grid),
                              k=args.k, seed=args.seed, jobs=args.jobs)
    Path(args.out).write_text(model_to_text(model))
    return 0


def _cmd_cv(args) -> int:
    examples = _load_training(args.features, args.labels)
    report, _ = grid_search_cv(examples, grid=_load_grid(args.grid),
                               k=args.k, seed=args.seed, jobs=args.jobs)
    Path(args.report).write_text(cv_report_csv(report))
    if args.roc:
        Path(args.roc).write_text(roc_csv(report))
    if args.grid_scores:
        Path(args.grid_scores).write_text(grid_scores_csv(report))
    return 0


def _cmd_predict(args) -> int:
    model = model_from_text(Path(args.model).read_text())
    vectors, _ = read_features_csv(Path(args.features).read_text())
    lines = ["id,probability,predicted"]
    for v in vectors:
        prob = predict_proba(model, v)
        lines.append(f"{v.protein_id},{prob!r},{int(prob > model.tau)}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    return 0


def _cmd_rank(args) -> int:
    model = model_from_text(Path(args.model).read_text())
    root = Path(args.ensembles)
    if not root.is_dir():
        raise DataError(f"--ensembles must be a directory: {root}")
    ensembles = [load_ensemble_entry(path, pid) for pid, path in iter_ensemble_entries(root)]
    entries, failures = rank_proteins(model, ensembles, _config(args), jobs=args.jobs)
    Path(args.out).write_text(ranking_csv(entries))
    if args.failures:
        Path(args.failures).write_text(failures_csv(failures))
    return 0


def _cmd_curate(args) -> int:
    records = []
    for text in args.inputs:
        path = Path(text)
        if not path.exists():
            raise DataError(f"no such input: {path}")
        if args.mode == "depth":
            record = count_alignment_depth(
                path.read_text(), format=alignment_format_for(path), protein_id=path.stem
            )
            records.append(curate_depth(record) if args.threshold is None
                           else curate_depth(record, int(args.threshold)))
            continue
        ensemble = _load_protein(text)
        if args.mode == "atlas":
            records.append(curate_atlas(ensemble) if args.threshold is None
                           else curate_atlas(ensemble, args.threshold))
        elif args.mode == "codnas":
            records.append(curate_codnas(ensemble.protein_id, ensemble.members)
                           if args.threshold is None
                           else curate_codnas(ensemble.protein_id, ensemble.members, args.threshold))
        else:
            records.append(curate_metamorphic(ensemble.protein_id, ensemble.members)
                           if args.threshold is None
                           else curate_metamorphic(ensemble.protein_id, ensemble.members, args.threshold))
    Path(args.out).write_text(curation_csv(records))
    return 0


def _cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ensemble, labels = synthesize_ensemble(
        n_modes=args.modes,
        members_per_mode=args.per_mode,
        length=args.length,
        noise_sigma=args.sigma,
        plddt_profile=(args.plddt_low, args.plddt_high),
        seed=args.seed,
        protein_id=out.name,
    )
    width = len(str(len(ensemble.members) - 1))
    for i, member in enumerate(ensemble.members):
        (out / f"member_{i:0{width}d}.pdb").write_text(write_structure(member))
    label_lines = ["member,mode"] + [f"{i},{mode}" for i, mode in enumerate(labels)]
    (out / "labels.csv").write_text("\n".join(label_lines) + "\n")
    return 0


_COMMANDS = {
    "features": _cmd_features,
    "cluster": _cmd_cluster,
    "train": _cmd_train,
    "cv": _cmd_cv,
    "predict": _cmd_predict,
    "rank": _cmd_rank,
    "curate": _cmd_curate,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (DataError, ValueError, OSError) as exc:
        print(f"metamorph: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
