"""Structural comparison primitives.

Optimal rigid superposition, RMSD, TMscore, per-residue fluctuation and
contact-map statistics over C-alpha traces. All comparisons assume
positional residue correspondence (conformations of one protein), so no
sequence alignment is ever performed.

The TMscore search is vectorized: every candidate seed superposition of
a batch of structure pairs is refined in lockstep through a shrinking
distance-cutoff ladder, with duplicate residue selections collapsed
between iterations. Results are identical whether pairs are scored one
at a time or stacked, because every operation is row-independent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import SingularStructureError

# Refinement cutoffs in Angstroms, descending; d0 is appended per call.
_CUTOFF_LADDER = (8.0, 7.0, 6.0, 5.0, 4.5, 4.0, 3.5, 3.0)
_MAX_REFINE_ITER = 20
_MIN_SELECTED = 4
# Cap on cells (rows x residues) materialized per vectorized step.
_CELL_BUDGET = 2_000_000


@dataclass(frozen=True)
class Superposition:
    """Rigid transform mapping one coordinate set onto another.

    ``rotation`` is a proper orthonormal 3x3 matrix (no reflections) and
    ``rmsd`` the root-mean-square C-alpha deviation after applying
    ``rotation @ x + translation``.
    """

    rotation: np.ndarray
    translation: np.ndarray
    rmsd: float

    def apply(self, coords: np.ndarray) -> np.ndarray:
        return coords @ self.rotation.T + self.translation


@dataclass(frozen=True)
class ContactMapStats:
    """Per-residue-pair mean and variance of C-alpha distances across members."""

    residue_count: int
    mean_dist: np.ndarray
    var_dist: np.ndarray


def _as_coords(obj) -> np.ndarray:
    coords = np.asarray(getattr(obj, "ca_coords", obj), dtype=float)
    if coords.ndim != 2 or coords.shape[1] != 3:
        raise ValueError(f"expected (L, 3) coordinates, got shape {coords.shape}")
    return coords


def _check_not_degenerate(coords: np.ndarray, label: str) -> None:
    if coords.shape[0] < 3:
        raise SingularStructureError(f"{label}: need at least 3 points, got {coords.shape[0]}")
    centered = coords - coords.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    if s[1] <= 1e-8 * max(s[0], 1.0):
        raise SingularStructureError(f"{label}: points are collinear, rotation is ambiguous")


def _batch_rotations(H: np.ndarray) -> np.ndarray:
    """Optimal proper rotations from a batch of 3x3 cross-covariance matrices."""
    U, _, Vt = np.linalg.svd(H)
    sign = np.sign(np.linalg.det(U) * np.linalg.det(Vt))
    sign[sign == 0.0] = 1.0
    Vt = Vt.copy()
    Vt[:, 2, :] *= sign[:, None]
    return np.matmul(Vt.transpose(0, 2, 1), U.transpose(0, 2, 1))


def _masked_kabsch(
    P: np.ndarray, Q: np.ndarray, pair_id: np.ndarray, sel: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares transforms fitting selected residues of P[pair] onto Q[pair].

    P, Q: (m, n, 3) stacked pairs; pair_id: (r,) row-to-pair map;
    sel: (r, n) boolean residue selections. Returns rotations (r, 3, 3)
    and translations (r, 3).
    """
    r, n = sel.shape
    R = np.empty((r, 3, 3))
    t = np.empty((r, 3))
    step = max(1, _CELL_BUDGET // max(n, 1))
    for lo in range(0, r, step):
        rows = slice(lo, min(lo + step, r))
        w = sel[rows].astype(float)
        nw = w.sum(axis=1)[:, None]
        Pc = P[pair_id[rows]]
        Qc = Q[pair_id[rows]]
        cp = np.einsum("rn,rni->ri", w, Pc) / nw
        cq = np.einsum("rn,rni->ri", w, Qc) / nw
        H = np.einsum("rn,rni,rnj->rij", w, Pc - cp[:, None, :], Qc - cq[:, None, :])
        Rc = _batch_rotations(H)
        R[rows] = Rc
        t[rows] = cq - np.einsum("rij,rj->ri", Rc, cp)
    return R, t


def _transform_dsq(
    P: np.ndarray, Q: np.ndarray, pair_id: np.ndarray, R: np.ndarray, t: np.ndarray
) -> np.ndarray:
    """Squared residue distances after applying each row's transform to its pair."""
    r = R.shape[0]
    n = P.shape[1]
    dsq = np.empty((r, n))
    step = max(1, (4 * _CELL_BUDGET) // max(n, 1))
    for lo in range(0, r, step):
        rows = slice(lo, min(lo + step, r))
        moved = np.matmul(P[pair_id[rows]], R[rows].swapaxes(1, 2))
        moved += t[rows][:, None, :]
        moved -= Q[pair_id[rows]]
        np.square(moved, out=moved)
        dsq[rows] = moved.sum(axis=-1)
    return dsq


def tm_d0(length: int) -> float:
    """Length-dependent normalization distance, floored at 0.5 Angstroms."""
    return max(0.5, 1.24 * float(np.cbrt(length - 15.0)) - 1.8)


def _fragment_windows(n: int) -> list[tuple[int, int]]:
    """(start, length) seed windows: every contiguous fragment of >= 4 residues.

    Sparser seeding (full/half/quarter lengths) misses optima reachable
    from a single specific fragment, so the search seeds exhaustively;
    duplicate-selection collapse keeps the refinement cheap.
    """
    return [(s, ell) for ell in range(max(4, n), 3, -1) for s in range(n - ell + 1)]


def _window_mask(n: int, window: tuple[int, int]) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    mask[window[0] : window[0] + window[1]] = True
    return mask


def _select(dsq: np.ndarray, cutoff: float) -> np.ndarray:
    """Residues closer than the cutoff, padded to the 4 nearest per short row.

    Padding uses a stable sort so distance ties resolve by residue index.
    """
    sel = dsq < cutoff * cutoff
    short = sel.sum(axis=1) < _MIN_SELECTED
    if np.any(short):
        rows = np.flatnonzero(short)
        nearest = np.argsort(dsq[rows], axis=1, kind="stable")[:, :_MIN_SELECTED]
        sel[rows] = False
        sel[rows[:, None], nearest] = True
    return sel


def _group_keys(pair_id: np.ndarray, sel: np.ndarray) -> list[np.ndarray]:
    """(pair, selection) encoded as uint64 sort columns, most significant first."""
    packed = np.packbits(sel, axis=1)
    pad = (-packed.shape[1]) % 8
    if pad:
        packed = np.pad(packed, ((0, 0), (0, pad)))
    words = packed.view(">u8").astype(np.uint64)
    return [pair_id.astype(np.uint64)] + [words[:, i] for i in range(words.shape[1])]


def _dedupe_rows(pair_id: np.ndarray, sel: np.ndarray, fitted: np.ndarray) -> np.ndarray:
    """Row indices keeping one representative per (pair, selection) group.

    Rows sharing a pair and a target selection refine identically, so
    only one survives. A row whose transform is already fitted to the
    selection is preferred (its refit would be a no-op), then the lowest
    row index; both orders are deterministic.
    """
    r = len(pair_id)
    keys = _group_keys(pair_id, sel)
    needs_fit = (sel != fitted).any(axis=1).astype(np.uint8)
    # lexsort uses the last key as primary: group columns outrank fit state.
    order = np.lexsort([np.arange(r), needs_fit] + keys[::-1])
    stacked = np.column_stack([k[order] for k in keys])
    new_group = np.empty(r, dtype=bool)
    new_group[0] = True
    new_group[1:] = (stacked[1:] != stacked[:-1]).any(axis=1)
    return order[new_group]


def _seed_transforms(
    P: np.ndarray, Q: np.ndarray, windows: list[tuple[int, int]]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Kabsch transforms for every (pair, fragment window) seed.

    Window sums come from prefix sums, so cost is O(pairs * n) plus one
    batched SVD over all seeds.
    """
    m, n, _ = P.shape
    starts = np.array([s for s, _ in windows])
    lens = np.array([ell for _, ell in windows], dtype=float)
    ends = starts + np.array([ell for _, ell in windows])

    zeros = np.zeros((m, 1, 3))
    cumP = np.concatenate([zeros, np.cumsum(P, axis=1)], axis=1)
    cumQ = np.concatenate([zeros, np.cumsum(Q, axis=1)], axis=1)
    outer = np.einsum("mni,mnj->mnij", P, Q)
    cumPQ = np.concatenate([np.zeros((m, 1, 3, 3)), np.cumsum(outer, axis=1)], axis=1)

    sumP = cumP[:, ends] - cumP[:, starts]  # (m, S, 3)
    sumQ = cumQ[:, ends] - cumQ[:, starts]
    sumPQ = cumPQ[:, ends] - cumPQ[:, starts]  # (m, S, 3, 3)
    cp = sumP / lens[None, :, None]
    cq = sumQ / lens[None, :, None]
    H = sumPQ - np.einsum("msi,msj->msij", sumP, cq)
    S = len(windows)
    R = _batch_rotations(H.reshape(m * S, 3, 3))
    t = cq.reshape(m * S, 3) - np.einsum("rij,rj->ri", R, cp.reshape(m * S, 3))
    pair_id = np.repeat(np.arange(m), S)
    return pair_id, R, t


def _tm_batch(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Best TMscore per stacked pair (m, n, 3) under the iterative search."""
    m, n, _ = P.shape
    d0sq = tm_d0(n) ** 2
    windows = _fragment_windows(n)

    pair_id, R, t = _seed_transforms(P, Q, windows)
    dsq = _transform_dsq(P, Q, pair_id, R, t)
    best = np.zeros(m)
    np.maximum.at(best, pair_id, (1.0 / (1.0 + dsq / d0sq)).mean(axis=1))
    # The selection each row's current transform was fitted to; rows whose
    # cutoff selection matches it are already at that cutoff's fixed point.
    fitted = np.tile(np.stack([_window_mask(n, w) for w in windows]), (m, 1))

    for cutoff in _CUTOFF_LADDER + (tm_d0(n),):
        sel = _select(dsq, cutoff)
        keep = _dedupe_rows(pair_id, sel, fitted)
        pair_id, sel, dsq, fitted = pair_id[keep], sel[keep], dsq[keep], fitted[keep]
        active = (sel != fitted).any(axis=1)
        previous = np.zeros_like(sel)
        for _ in range(_MAX_REFINE_ITER):
            rows = np.flatnonzero(active)
            if rows.size == 0:
                break
            R, t = _masked_kabsch(P, Q, pair_id[rows], sel[rows])
            dsq[rows] = _transform_dsq(P, Q, pair_id[rows], R, t)
            np.maximum.at(best, pair_id[rows], (1.0 / (1.0 + dsq[rows] / d0sq)).mean(axis=1))
            fitted[rows] = sel[rows]
            new_sel = _select(dsq[rows], cutoff)
            # Stop on a fixed point, or on a period-2 cycle: alternating
            # selections only revisit states whose scores are already kept.
            converged = (new_sel == sel[rows]).all(axis=1) | (new_sel == previous[rows]).all(axis=1)
            previous[rows] = sel[rows]
            sel[rows] = new_sel
            active[rows] = ~converged
    return best


def kabsch_superpose(a, b) -> Superposition:
    """Least-squares rigid superposition of coordinates ``a`` onto ``b``.

    Reflections are excluded via the determinant correction, so the
    rotation is always proper.

    Raises:
        SingularStructureError: fewer than 3 points or a collinear
            configuration (the optimal rotation would be ambiguous).
    """
    P = _as_coords(a)
    Q = _as_coords(b)
    if P.shape[0] != Q.shape[0]:
        raise ValueError(f"length mismatch: {P.shape[0]} vs {Q.shape[0]}")
    if not (np.all(np.isfinite(P)) and np.all(np.isfinite(Q))):
        raise ValueError("coordinates must be finite")
    _check_not_degenerate(P, "first structure")
    _check_not_degenerate(Q, "second structure")

    cp = P.mean(axis=0)
    cq = Q.mean(axis=0)
    H = (P - cp).T @ (Q - cq)
    R = _batch_rotations(H[None])[0]
    t = cq - R @ cp
    deviation = P @ R.T + t - Q
    value = float(np.sqrt((deviation**2).sum() / P.shape[0]))
    return Superposition(rotation=R, translation=t, rmsd=value)


def rmsd(a, b) -> float:
    """Root-mean-square C-alpha deviation after optimal superposition, in Angstroms."""
    return kabsch_superpose(a, b).rmsd


def _region_indices(region, length: int) -> np.ndarray:
    idx = np.asarray(sorted(set(int(i) for i in region)), dtype=int)
    if idx.size < 5:
        raise ValueError(f"region needs at least 5 residues, got {idx.size}")
    if idx[0] < 1 or idx[-1] > length:
        raise ValueError(f"region indices must lie in 1..{length}")
    return idx - 1


def tmscore(a, b, region: Optional[Sequence[int]] = None) -> float:
    """Length-normalized structural similarity in (0, 1].

    Scores ``(1/L_n) * sum_i 1 / (1 + (d_i / d0(L_n))^2)`` maximized
    over superpositions found by the iterative protocol: seeds from
    contiguous fragments (full, half, quarter length; minimum 4
    residues) at every offset, each refined by re-superposing on the
    residues within a shrinking cutoff ladder, keeping the best score.

    ``region`` restricts both the search and the normalization to the
    given 1-based residue indices (at least 5).
    """
    P = _as_coords(a)
    Q = _as_coords(b)
    if P.shape[0] != Q.shape[0]:
        raise ValueError(f"length mismatch: {P.shape[0]} vs {Q.shape[0]}")
    if region is not None:
        idx = _region_indices(region, P.shape[0])
        P = P[idx]
        Q = Q[idx]
    if P.shape[0] < 4:
        raise ValueError("TMscore needs at least 4 residues")
    return float(_tm_batch(P[None], Q[None])[0])


def pairwise_tmscore_matrix(structs: Sequence, region: Optional[Sequence[int]] = None) -> np.ndarray:
    """Symmetric matrix of pairwise TMscores with unit diagonal.

    Off-diagonal cells are independent and are evaluated as one stacked
    batch; each cell equals the corresponding single ``tmscore`` call
    exactly.
    """
    coords = [_as_coords(s) for s in structs]
    if not coords:
        raise ValueError("need at least one structure")
    n = coords[0].shape[0]
    for c in coords[1:]:
        if c.shape[0] != n:
            raise ValueError("all structures must share one length")
    stack = np.stack(coords)
    if region is not None:
        stack = stack[:, _region_indices(region, n), :]
    if stack.shape[1] < 4:
        raise ValueError("TMscore needs at least 4 residues")

    m = len(coords)
    matrix = np.eye(m)
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    if not pairs:
        return matrix
    # Chunk so per-seed distance arrays stay within a fixed memory budget.
    seeds_per_pair = len(_fragment_windows(stack.shape[1]))
    chunk = max(1, 6_000_000 // (seeds_per_pair * stack.shape[1]))
    for lo in range(0, len(pairs), chunk):
        part = pairs[lo : lo + chunk]
        ii = [i for i, _ in part]
        jj = [j for _, j in part]
        scores = _tm_batch(stack[ii], stack[jj])
        matrix[ii, jj] = scores
        matrix[jj, ii] = scores
    return matrix


def rmsf(ensemble) -> np.ndarray:
    """Per-residue root-mean-square fluctuation about the mean structure.

    Members are iteratively superposed onto their running mean until the
    mean moves less than 1e-6 Angstroms (RMS), capped at 50 rounds.

    Raises:
        ValueError: fewer than 2 members (fluctuation undefined).
    """
    coords = ensemble.coords_array() if hasattr(ensemble, "coords_array") else np.asarray(ensemble, float)
    if coords.ndim != 3 or coords.shape[0] < 2:
        raise ValueError("RMSF needs an ensemble of at least 2 members")
    m, n, _ = coords.shape
    pair_id = np.arange(m)
    full = np.ones((m, n), dtype=bool)
    reference = coords[0]
    aligned = coords
    for _ in range(50):
        R, t = _masked_kabsch(coords, np.broadcast_to(reference, coords.shape), pair_id, full)
        aligned = np.einsum("mij,mnj->mni", R, coords) + t[:, None, :]
        new_reference = aligned.mean(axis=0)
        movement = float(np.sqrt(((new_reference - reference) ** 2).sum(axis=1).mean()))
        reference = new_reference
        if movement < 1e-6:
            break
    return np.sqrt(((aligned - reference) ** 2).sum(axis=2).mean(axis=0))


def average_rmsf(ensemble) -> float:
    """Scalar ensemble flexibility: the per-residue RMSF averaged over residues."""
    return float(rmsf(ensemble).mean())


def contact_map_stats(ensemble, subset: Optional[Sequence[int]] = None) -> ContactMapStats:
    """Mean and variance of every C-alpha pair distance across members.

    Distances are rotation-invariant, so no superposition is involved.
    Variances are population variances (two-pass, denominator = member
    count). ``subset`` selects member indices; at least 2 are required.
    """
    coords = ensemble.coords_array() if hasattr(ensemble, "coords_array") else np.asarray(ensemble, float)
    if subset is not None:
        coords = coords[np.asarray(sorted(set(subset)), dtype=int)]
    m = coords.shape[0]
    if m < 2:
        raise ValueError("contact statistics need at least 2 members")

    def distances(member: np.ndarray) -> np.ndarray:
        diff = member[:, None, :] - member[None, :, :]
        return np.sqrt((diff**2).sum(axis=-1))

    mean = np.zeros((coords.shape[1], coords.shape[1]))
    for member in coords:
        mean += distances(member)
    mean /= m
    var = np.zeros_like(mean)
    for member in coords:
        var += (distances(member) - mean) ** 2
    var /= m
    np.fill_diagonal(mean, 0.0)
    np.fill_diagonal(var, 0.0)
    return ContactMapStats(residue_count=coords.shape[1], mean_dist=mean, var_dist=np.maximum(var, 0.0))
