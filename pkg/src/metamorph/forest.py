"""Class-weighted random forest with missing-value-aware splits.

Trees grow by weighted-Gini CART on bootstrap samples. Missing feature
values are handled with the missing-incorporated-in-attributes scheme:
every threshold candidate is scored with the missing block routed left
and routed right, and the pure missing-versus-present partition is a
candidate of its own (encoded as threshold -inf, missing left). The
forest probability is the plain average of per-tree leaf probabilities,
and the decision threshold is tuned to maximize balanced accuracy on
out-of-bag predictions.

Determinism: all randomness flows from one integer seed through spawned
sub-streams (one per tree, one per grid-search cell), so training is
reproducible bit for bit regardless of evaluation order or parallelism.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import TrainingDataError
from .features import FEATURE_NAMES, FeatureVector, LabeledExample

MODEL_FORMAT_VERSION = 1
TAU_GRID = tuple(k / 100.0 for k in range(1, 100))


@dataclass(frozen=True)
class Hyperparams:
    """Forest configuration; defaults follow the tuned search space midpoints."""

    n_trees: int = 500
    max_depth: int = 10
    min_samples_leaf: int = 8
    min_impurity_decrease: float = 0.0
    alpha: float = 4.0
    features_per_split: int = 3
    seed: int = 0


@dataclass
class TreeNode:
    """Internal split node or leaf.

    Internal nodes route a sample left when its feature value is at most
    ``threshold`` (missing values follow ``missing_left``); the pure
    missing-versus-present split is threshold ``-inf`` with missing
    routed left. Leaves hold the weighted class fractions.
    """

    feature: Optional[int] = None
    threshold: float = 0.0
    missing_left: bool = True
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    prob: float = 0.0
    weight_single: float = 0.0
    weight_meta: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[TreeNode, ...]
    hyperparams: Hyperparams
    class_weights: tuple[float, float]
    tau: float
    feature_names: tuple[str, ...]
    importance: np.ndarray


@dataclass(frozen=True)
class FoldMetrics:
    auc: float
    tpr: float
    tnr: float
    balanced_accuracy: float
    tau: float


@dataclass(frozen=True)
class CVReport:
    """Cross-validation outcome for the selected configuration.

    ``grid_scores`` keeps the per-fold balanced accuracies of every
    configuration searched so the selection can be audited after the
    fact.
    """

    folds: tuple[FoldMetrics, ...]
    chosen: Hyperparams
    roc_points: tuple[tuple[tuple[float, float, float], ...], ...]
    grid_scores: tuple[tuple[Hyperparams, tuple[float, ...]], ...] = field(default=())

    def mean(self, metric: str) -> float:
        return float(np.mean([getattr(f, metric) for f in self.folds]))

    def std(self, metric: str) -> float:
        return float(np.std([getattr(f, metric) for f in self.folds]))


def class_weights(n_single: int, n_meta: int, alpha: float) -> tuple[float, float]:
    """Per-class sample weights balancing the two classes, biased by alpha.

    ``(n_total / (2 (1+alpha) n_single), alpha n_total / (2 (1+alpha) n_meta))``.
    """
    if n_single < 1 or n_meta < 1:
        raise ValueError("both classes need at least one example")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    n_total = n_single + n_meta
    return (
        n_total / (2 * (1 + alpha) * n_single),
        alpha * n_total / (2 * (1 + alpha) * n_meta),
    )


def _subseed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=tuple(key)).generate_state(1)[0])


def _gini_terms(w0, w1):
    """Weight-scaled Gini impurity W * g(w0, w1) = W - (w0^2 + w1^2) / W."""
    total = w0 + w1
    with np.errstate(divide="ignore", invalid="ignore"):
        out = total - (w0 * w0 + w1 * w1) / total
    return np.where(total > 0.0, out, 0.0)


def _best_feature_split(col, y, w, min_leaf, node_w0, node_w1):
    """Best (decrease_term, threshold, missing_left) for one feature.

    ``decrease_term`` is the unnormalized impurity decrease
    ``W_node * g_node - W_L * g_L - W_R * g_R``; the caller scales by the
    tree's total weight. Candidate thresholds are midpoints of
    consecutive distinct present values; with missing values present
    each threshold is scored for both missing routes and the pure
    missing-versus-present partition joins the candidate set.
    """
    missing = np.isnan(col)
    n_miss = int(missing.sum())
    present = ~missing
    values = col[present]
    n_present = values.size

    node_term = float(_gini_terms(node_w0, node_w1))
    best = None

    if n_present >= 2:
        order = np.argsort(values, kind="stable")
        sv = values[order]
        sy = y[present][order]
        sw = w[present][order]
        cum1 = np.cumsum(sw * sy)
        cum0 = np.cumsum(sw) - cum1
        boundaries = np.flatnonzero(sv[:-1] < sv[1:])
        if boundaries.size:
            thresholds = (sv[boundaries] + sv[boundaries + 1]) / 2.0
            left_n = boundaries + 1
            right_n = n_present - left_n
            lw0 = cum0[boundaries]
            lw1 = cum1[boundaries]
            rw0 = cum0[-1] - lw0
            rw1 = cum1[-1] - lw1
            miss_w1 = node_w1 - cum1[-1]
            miss_w0 = node_w0 - cum0[-1]
            routes = (True, False) if n_miss else (True,)
            for missing_left in routes:
                L0 = lw0 + (miss_w0 if missing_left else 0.0)
                L1 = lw1 + (miss_w1 if missing_left else 0.0)
                R0 = rw0 + (0.0 if missing_left else miss_w0)
                R1 = rw1 + (0.0 if missing_left else miss_w1)
                ln = left_n + (n_miss if missing_left else 0)
                rn = right_n + (0 if missing_left else n_miss)
                decrease = node_term - _gini_terms(L0, L1) - _gini_terms(R0, R1)
                decrease[(ln < min_leaf) | (rn < min_leaf)] = -np.inf
                k = int(np.argmax(decrease))
                if decrease[k] > -np.inf and (best is None or decrease[k] > best[0]):
                    best = (float(decrease[k]), float(thresholds[k]), missing_left)

    if n_miss >= min_leaf and n_present >= min_leaf:
        miss_w1 = float(w[missing] @ y[missing])
        miss_w0 = float(w[missing].sum()) - miss_w1
        pres_w0 = node_w0 - miss_w0
        pres_w1 = node_w1 - miss_w1
        decrease = node_term - float(_gini_terms(miss_w0, miss_w1)) - float(
            _gini_terms(pres_w0, pres_w1)
        )
        if best is None or decrease > best[0]:
            best = (decrease, -np.inf, True)

    return best


def fit_tree(
    X: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    hyperparams: Hyperparams,
    rng: np.random.Generator,
    importance: Optional[np.ndarray] = None,
) -> TreeNode:
    """Grow one CART tree on the given sample (no bootstrap).

    At each node a uniformly random subset of ``features_per_split``
    features is considered and the split maximizing the weighted Gini
    impurity decrease is taken, provided both children keep at least
    ``min_samples_leaf`` unweighted samples and the decrease reaches
    ``min_impurity_decrease``. ``importance`` (when given) accumulates
    each split's decrease by feature.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int8)
    weights = np.asarray(weights, dtype=float)
    total_weight = float(weights.sum())
    n_features = X.shape[1]
    hp = hyperparams

    def build(idx: np.ndarray, depth: int) -> TreeNode:
        w_node = weights[idx]
        y_node = y[idx]
        w1 = float(w_node @ y_node)
        w0 = float(w_node.sum()) - w1
        leaf = TreeNode(prob=w1 / (w0 + w1), weight_single=w0, weight_meta=w1)
        if depth >= hp.max_depth or w0 == 0.0 or w1 == 0.0 or idx.size < 2 * hp.min_samples_leaf:
            return leaf

        subset = rng.choice(n_features, size=min(hp.features_per_split, n_features), replace=False)
        best = None
        for f in subset:
            found = _best_feature_split(
                X[idx, f], y_node, w_node, hp.min_samples_leaf, w0, w1
            )
            if found is not None and (best is None or found[0] > best[0]):
                best = (found[0], int(f), found[1], found[2])
        if best is None:
            return leaf
        decrease = best[0] / total_weight
        if decrease < hp.min_impurity_decrease:
            return leaf

        _, f, threshold, missing_left = best
        col = X[idx, f]
        miss = np.isnan(col)
        go_left = np.where(miss, missing_left, col <= threshold)
        if importance is not None:
            importance[f] += decrease
        return TreeNode(
            feature=f,
            threshold=threshold,
            missing_left=missing_left,
            left=build(idx[go_left], depth + 1),
            right=build(idx[~go_left], depth + 1),
            prob=leaf.prob,
            weight_single=w0,
            weight_meta=w1,
        )

    return build(np.arange(X.shape[0]), 0)


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    hyperparams: Hyperparams,
    rng: np.random.Generator,
    importance: Optional[np.ndarray] = None,
) -> tuple[TreeNode, np.ndarray]:
    """Grow one tree on a bootstrap sample; returns (tree, sampled indices)."""
    n = X.shape[0]
    sample = rng.integers(0, n, size=n)
    tree = fit_tree(X[sample], y[sample], weights[sample], hyperparams, rng, importance)
    return tree, sample


def tree_prob(node: TreeNode, x: np.ndarray) -> float:
    """Leaf probability for one sample, routing missing values per node."""
    while not node.is_leaf:
        value = x[node.feature]
        if np.isnan(value):
            node = node.left if node.missing_left else node.right
        elif value <= node.threshold:
            node = node.left
        else:
            node = node.right
    return node.prob


def _forest_probs(trees: Sequence[TreeNode], X: np.ndarray) -> np.ndarray:
    out = np.zeros(X.shape[0])
    for tree in trees:
        out += [tree_prob(tree, row) for row in X]
    return out / len(trees)


def _as_matrix(data) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    if isinstance(data, tuple):
        X, y = data
        return np.asarray(X, float), np.asarray(y, int), tuple(
            f"f{i}" for i in range(np.asarray(X).shape[1])
        )
    X = np.stack([example.features.as_array() for example in data])
    y = np.array([example.label for example in data], dtype=int)
    return X, y, FEATURE_NAMES


def train_forest(data, hyperparams: Hyperparams = Hyperparams()) -> ForestModel:
    """Train the weighted forest; the threshold is tuned on out-of-bag votes.

    ``data`` is a sequence of LabeledExample or an ``(X, y)`` pair.
    Every sample carries its class weight from the alpha-adjusted
    balancing formula. Feature importance is the per-tree mean of
    weighted impurity decreases, normalized to sum to one.

    Raises:
        TrainingDataError: when only one class is present.
    """
    X, y, names = _as_matrix(data)
    n = X.shape[0]
    n_meta = int((y == 1).sum())
    n_single = n - n_meta
    if n_meta == 0 or n_single == 0:
        raise TrainingDataError("training data must contain both classes")

    hp = hyperparams
    w_single, w_meta = class_weights(n_single, n_meta, hp.alpha)
    weights = np.where(y == 1, w_meta, w_single)

    streams = np.random.SeedSequence(hp.seed).spawn(hp.n_trees)
    importance = np.zeros(X.shape[1])
    trees: list[TreeNode] = []
    oob_sum = np.zeros(n)
    oob_count = np.zeros(n, dtype=int)
    for stream in streams:
        tree, sample = grow_tree(X, y, weights, hp, np.random.default_rng(stream), importance)
        trees.append(tree)
        out_of_bag = np.ones(n, dtype=bool)
        out_of_bag[sample] = False
        for i in np.flatnonzero(out_of_bag):
            oob_sum[i] += tree_prob(tree, X[i])
            oob_count[i] += 1

    total = importance.sum()
    if total > 0.0:
        importance = importance / total
    else:
        # No split anywhere (degenerate data): no feature carries signal.
        importance = np.full(X.shape[1], 1.0 / X.shape[1])

    covered = oob_count > 0
    if covered.any() and len(set(y[covered].tolist())) == 2:
        tau = tune_threshold(y[covered], oob_sum[covered] / oob_count[covered])
    else:
        # Degenerate out-of-bag coverage (tiny data): fall back to in-sample votes.
        tau = tune_threshold(y, _forest_probs(trees, X))

    return ForestModel(
        trees=tuple(trees),
        hyperparams=hp,
        class_weights=(w_single, w_meta),
        tau=tau,
        feature_names=names,
        importance=importance,
    )


def predict_proba(model: ForestModel, features) -> float:
    """Probability of the metamorphic class: the mean of per-tree leaf probabilities."""
    if isinstance(features, FeatureVector):
        features = features.as_array()
    x = np.asarray(features, dtype=float)
    return float(sum(tree_prob(tree, x) for tree in model.trees) / len(model.trees))


def predict_proba_many(model: ForestModel, rows) -> np.ndarray:
    X = np.stack(
        [r.as_array() if isinstance(r, FeatureVector) else np.asarray(r, float) for r in rows]
    )
    return _forest_probs(model.trees, X)


def balanced_accuracy(labels, probs, tau: float) -> float:
    """Mean of the true-positive and true-negative rates at threshold tau.

    A sample is called positive exactly when its probability is
    strictly greater than tau.

    Raises:
        ValueError: when only one class is present (a rate is undefined).
    """
    labels = np.asarray(labels, dtype=int)
    probs = np.asarray(probs, dtype=float)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("balanced accuracy needs both classes")
    tpr = float(((labels == 1) & (probs > tau)).sum()) / n_pos
    tnr = float(((labels == 0) & (probs <= tau)).sum()) / n_neg
    return 0.5 * (tpr + tnr)


def _rates(labels, probs, tau):
    labels = np.asarray(labels, int)
    probs = np.asarray(probs, float)
    tpr = float(((labels == 1) & (probs > tau)).sum()) / max(1, int((labels == 1).sum()))
    tnr = float(((labels == 0) & (probs <= tau)).sum()) / max(1, int((labels == 0).sum()))
    return tpr, tnr


def tune_threshold(labels, probs) -> float:
    """Threshold from the grid {0.01, ..., 0.99} maximizing balanced accuracy.

    Ties prefer the smallest |TPR - TNR|, then the smallest threshold.
    """
    labels = np.asarray(labels, dtype=int)
    if int((labels == 1).sum()) == 0 or int((labels == 0).sum()) == 0:
        raise ValueError("threshold tuning needs both classes")
    best = None
    for tau in TAU_GRID:
        tpr, tnr = _rates(labels, probs, tau)
        key = (-(tpr + tnr) / 2.0, abs(tpr - tnr), tau)
        if best is None or key < best:
            best = key
    return best[2]


def stratified_kfold(labels, k: int, seed: int) -> list[np.ndarray]:
    """Disjoint folds preserving class proportions (counts differ by <= 1).

    Each class is shuffled under the seed and dealt round-robin.

    Raises:
        ValueError: when a class has fewer members than folds.
    """
    labels = np.asarray(labels, dtype=int)
    if k < 2:
        raise ValueError("need at least 2 folds")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in (0, 1):
        idx = np.flatnonzero(labels == cls)
        if idx.size < k:
            raise ValueError(f"class {cls} has {idx.size} members, fewer than {k} folds")
        for j, i in enumerate(rng.permutation(idx)):
            folds[j % k].append(int(i))
    return [np.array(sorted(f), dtype=int) for f in folds]


def roc_auc(labels, probs) -> tuple[float, list[tuple[float, float, float]]]:
    """AUC via the rank statistic (midranks on ties) plus ROC points.

    Points are (fpr, tpr, threshold) emitted at every distinct score,
    descending, preceded by the (0, 0) origin.

    Raises:
        ValueError: when only one class is present.
    """
    labels = np.asarray(labels, dtype=int)
    probs = np.asarray(probs, dtype=float)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes")

    order = np.argsort(probs, kind="stable")
    ranks = np.empty(len(probs))
    sorted_probs = probs[order]
    i = 0
    while i < len(probs):
        j = i
        while j + 1 < len(probs) and sorted_probs[j + 1] == sorted_probs[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    auc = (ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)

    points = [(0.0, 0.0, float("inf"))]
    tp = fp = 0
    for value in sorted(set(probs.tolist()), reverse=True):
        at = probs == value
        tp += int(((labels == 1) & at).sum())
        fp += int(((labels == 0) & at).sum())
        points.append((fp / n_neg, tp / n_pos, float(value)))
    return float(auc), points


def default_grid() -> list[Hyperparams]:
    """The tuned hyperparameter search space (144 configurations)."""
    return expand_grid(
        {
            "n_trees": 500,
            "max_depth": [5, 10, 15],
            "min_samples_leaf": [6, 8, 10, 12],
            "alpha": [1, 2, 4, 6, 8, 10],
            "min_impurity_decrease": [0.0, 0.01],
        }
    )


def expand_grid(mapping: dict) -> list[Hyperparams]:
    """Cartesian product of a {name: value-or-list} mapping, in stable order."""
    base = Hyperparams()
    names = list(mapping)
    unknown = set(names) - set(asdict(base))
    if unknown:
        raise ValueError(f"unknown hyperparameters: {sorted(unknown)}")
    lists = [mapping[n] if isinstance(mapping[n], (list, tuple)) else [mapping[n]] for n in names]
    configs: list[Hyperparams] = [base]
    for name, options in zip(names, lists):
        configs = [replace(c, **{name: option}) for c in configs for option in options]
    return configs


def _evaluate_cell(args):
    X, y, hp, train_idx, val_idx = args
    model = train_forest((X[train_idx], y[train_idx]), hp)
    probs = _forest_probs(model.trees, X[val_idx])
    y_val = y[val_idx]
    tpr, tnr = _rates(y_val, probs, model.tau)
    auc, points = roc_auc(y_val, probs)
    return FoldMetrics(
        auc=auc, tpr=tpr, tnr=tnr, balanced_accuracy=0.5 * (tpr + tnr), tau=model.tau
    ), tuple(points)


def grid_search_cv(
    data,
    grid: Optional[Sequence[Hyperparams]] = None,
    k: int = 5,
    seed: int = 0,
    jobs: int = 1,
) -> tuple[CVReport, ForestModel]:
    """Exhaustive grid search scored by k-fold cross-validation.

    Every configuration is trained and validated on the same stratified
    folds; the one with the highest mean validation balanced accuracy
    wins (ties go to the earliest configuration) and is refit on the
    full data. Per-cell training seeds derive from ``seed`` and the
    (configuration, fold) position, so results do not depend on ``jobs``.
    """
    X, y, _ = _as_matrix(data)
    configs = list(grid) if grid is not None else default_grid()
    if not configs:
        raise ValueError("empty hyperparameter grid")
    folds = stratified_kfold(y, k, seed)
    all_idx = np.arange(len(y))

    tasks = []
    for ci, hp in enumerate(configs):
        for fi, fold in enumerate(folds):
            train_idx = np.setdiff1d(all_idx, fold)
            tasks.append((X, y, replace(hp, seed=_subseed(seed, 1, ci, fi)), train_idx, fold))

    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_evaluate_cell, tasks, chunksize=4))
    else:
        outcomes = [_evaluate_cell(t) for t in tasks]

    per_config: list[tuple[Hyperparams, list[FoldMetrics], list[tuple]]] = []
    for ci, hp in enumerate(configs):
        cells = outcomes[ci * k : (ci + 1) * k]
        per_config.append((hp, [m for m, _ in cells], [p for _, p in cells]))

    mean_ba = [float(np.mean([m.balanced_accuracy for m in metrics])) for _, metrics, _ in per_config]
    best_ci = int(np.argmax(mean_ba))
    best_hp, best_metrics, best_roc = per_config[best_ci]

    report = CVReport(
        folds=tuple(best_metrics),
        chosen=best_hp,
        roc_points=tuple(best_roc),
        grid_scores=tuple(
            (hp, tuple(m.balanced_accuracy for m in metrics)) for hp, metrics, _ in per_config
        ),
    )
    model = train_forest((X, y), replace(best_hp, seed=_subseed(seed, 2)))
    return report, model


def cv_report_csv(report: CVReport) -> str:
    """Per-fold metrics plus mean/std rows as CSV text."""
    lines = ["fold,auc,tpr,tnr,balanced_accuracy,tau"]
    for i, m in enumerate(report.folds, start=1):
        lines.append(
            f"{i},{m.auc!r},{m.tpr!r},{m.tnr!r},{m.balanced_accuracy!r},{m.tau!r}"
        )
    for stat in ("mean", "std"):
        values = [getattr(report, stat)(name) for name in
                  ("auc", "tpr", "tnr", "balanced_accuracy", "tau")]
        lines.append(stat + "," + ",".join(repr(v) for v in values))
    return "\n".join(lines) + "\n"


def roc_csv(report: CVReport) -> str:
    """Per-fold ROC points as CSV text (fold, fpr, tpr, threshold)."""
    lines = ["fold,fpr,tpr,threshold"]
    for i, points in enumerate(report.roc_points, start=1):
        for fpr, tpr, threshold in points:
            lines.append(f"{i},{fpr!r},{tpr!r},{threshold!r}")
    return "\n".join(lines) + "\n"


def grid_scores_csv(report: CVReport) -> str:
    """Audit table: one row per configuration with its per-fold balanced accuracies."""
    k = len(report.folds)
    header = (
        "config,n_trees,max_depth,min_samples_leaf,alpha,min_impurity_decrease,"
        + ",".join(f"ba_fold{i + 1}" for i in range(k))
        + ",mean_ba,chosen"
    )
    lines = [header]
    for ci, (hp, scores) in enumerate(report.grid_scores):
        lines.append(
            ",".join(
                [
                    str(ci),
                    str(hp.n_trees),
                    str(hp.max_depth),
                    str(hp.min_samples_leaf),
                    repr(float(hp.alpha)),
                    repr(float(hp.min_impurity_decrease)),
                ]
                + [repr(s) for s in scores]
                + [repr(float(np.mean(scores))), str(int(hp == report.chosen))]
            )
        )
    return "\n".join(lines) + "\n"


def _node_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {
            "prob": node.prob,
            "w_single": node.weight_single,
            "w_meta": node.weight_meta,
        }
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "missing": "left" if node.missing_left else "right",
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(payload: dict) -> TreeNode:
    if "feature" not in payload:
        return TreeNode(
            prob=payload["prob"],
            weight_single=payload["w_single"],
            weight_meta=payload["w_meta"],
        )
    return TreeNode(
        feature=payload["feature"],
        threshold=payload["threshold"],
        missing_left=payload["missing"] == "left",
        left=_node_from_dict(payload["left"]),
        right=_node_from_dict(payload["right"]),
    )


def model_to_text(model: ForestModel) -> str:
    """Serialize a model as a versioned JSON document (deterministic bytes)."""
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "hyperparams": asdict(model.hyperparams),
        "class_weights": list(model.class_weights),
        "tau": model.tau,
        "feature_names": list(model.feature_names),
        "importance": model.importance.tolist(),
        "trees": [_node_to_dict(t) for t in model.trees],
    }
    return json.dumps(payload, indent=1, sort_keys=True) + "\n"


def model_from_text(text: str) -> ForestModel:
    payload = json.loads(text)
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version: {version!r}")
    return ForestModel(
        trees=tuple(_node_from_dict(t) for t in payload["trees"]),
        hyperparams=Hyperparams(**payload["hyperparams"]),
        class_weights=tuple(payload["class_weights"]),
        tau=payload["tau"],
        feature_names=tuple(payload["feature_names"]),
        importance=np.array(payload["importance"], dtype=float),
    )
