"""Per-class moments and per-pair decision-axis geometry.

All moment estimators are population-normalized (divide by n_c). Directional
variances use projected second moments and never materialize a d x d
covariance; only `variance_decomposition` forms the pooled covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import DatasetError, EmbeddingDataset

# Full symmetric eigensolve below this dimension; power iteration with
# deflation above it (only the top-k eigenvalues are ever needed).
_FULL_EIG_MAX_DIM = 512
_POWER_TOL = 1e-8
_POWER_MAX_ITER = 1000


class DegeneratePairError(ValueError):
    """Coincident class means: the pair has no decision axis."""


@dataclass(frozen=True)
class ClassStats:
    class_id: int
    n: int
    mu: np.ndarray
    v: float  # mean of ||z - mu||^2
    m4: float  # mean of ||z - mu||^4


@dataclass(frozen=True)
class PairGeometry:
    i: int
    j: int
    d: float  # gap ||mu_i - mu_j||
    u: np.ndarray  # unit axis (mu_j - mu_i) / d
    v_i: float
    v_j: float
    cdnv: float  # V_ij = (v_i + v_j) / d^2
    dir_cdnv: float  # class-i variance along u, over d^2
    theta: float  # (M4_i + M4_j) / d^4


@dataclass(frozen=True)
class CdnvAverages:
    avg_dir: float  # Avg over ordered pairs of dir_cdnv
    avg_cdnv: float  # Avg of cdnv
    avg_sqrt_cdnv: float  # Avg of sqrt(cdnv)


@dataclass(frozen=True)
class DecompositionReport:
    i: int
    j: int
    axis_variance: float
    ortho_cumulative: dict[int, float]  # k -> sum of top-k eigenvalues
    ortho_total: float


def _rows(ds: EmbeddingDataset, labeling: str, class_id: int, min_samples=1):
    z = ds.class_rows(labeling, class_id)
    if len(z) < min_samples:
        raise DatasetError(
            f"class {class_id} of labeling {labeling!r} has {len(z)} samples, "
            f"need >= {min_samples}"
        )
    return z


def class_stats(ds: EmbeddingDataset, labeling: str, class_id: int) -> ClassStats:
    z = _rows(ds, labeling, class_id)
    mu = z.mean(axis=0)
    r2 = ((z - mu) ** 2).sum(axis=1)
    return ClassStats(class_id, len(z), mu, float(r2.mean()), float((r2**2).mean()))


def pair_geometry(ds: EmbeddingDataset, labeling: str, i: int, j: int) -> PairGeometry:
    """Gap, axis, CDNV, directional CDNV (class-i covariance only) and
    fourth-moment ratio for the ordered class pair (i, j)."""
    si = class_stats(ds, labeling, i)
    sj = class_stats(ds, labeling, j)
    if si.n < 2:
        raise DatasetError(f"class {i} needs >= 2 samples for directional CDNV")
    gap_vec = sj.mu - si.mu
    gap = float(np.linalg.norm(gap_vec))
    if gap == 0.0:
        raise DegeneratePairError(f"degenerate pair ({i}, {j}): coincident class means")
    u = gap_vec / gap
    zi = ds.class_rows(labeling, i)
    dir_second = float((((zi - si.mu) @ u) ** 2).mean())
    return PairGeometry(
        i=i,
        j=j,
        d=gap,
        u=u,
        v_i=si.v,
        v_j=sj.v,
        cdnv=(si.v + sj.v) / gap**2,
        dir_cdnv=dir_second / gap**2,
        theta=(si.m4 + sj.m4) / gap**4,
    )


def directional_variance(
    ds: EmbeddingDataset, labeling: str, class_id: int, axis: np.ndarray
) -> float:
    """Within-class variance projected onto a unit axis, u' Sigma_c u."""
    axis = np.asarray(axis, dtype=np.float64)
    norm = np.linalg.norm(axis)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"axis must be unit-norm, got ||axis|| = {norm}")
    z = _rows(ds, labeling, class_id, min_samples=2)
    mu = z.mean(axis=0)
    return float((((z - mu) @ axis) ** 2).mean())


def _top_k_eigenvalues(mat: np.ndarray, k: int) -> np.ndarray:
    """Top-k eigenvalues of a symmetric PSD matrix by power iteration with
    deflation. Deterministic seeded start vectors."""
    rng = np.random.default_rng(0)
    mat = mat.copy()
    out = np.empty(k)
    for idx in range(k):
        v = rng.standard_normal(mat.shape[0])
        v /= np.linalg.norm(v)
        for _ in range(_POWER_MAX_ITER):
            w = mat @ v
            norm = np.linalg.norm(w)
            if norm == 0.0:  # exhausted the range: remaining eigenvalues are 0
                out[idx:] = 0.0
                return out
            w /= norm
            if abs(1.0 - abs(w @ v)) < _POWER_TOL:
                v = w
                break
            v = w
        lam = float(v @ mat @ v)
        out[idx] = lam
        mat -= lam * np.outer(v, v)
    return out


def variance_decomposition(
    ds: EmbeddingDataset, labeling: str, i: int, j: int, k_list: list[int]
) -> DecompositionReport:
    """Split the pooled within-class covariance of classes {i, j} into the
    decision-axis component and the spectrum of the axis-projected-out part.

    The pooled covariance centers each sample at its own class mean.
    """
    si = class_stats(ds, labeling, i)
    sj = class_stats(ds, labeling, j)
    gap_vec = sj.mu - si.mu
    gap = float(np.linalg.norm(gap_vec))
    if gap == 0.0:
        raise DegeneratePairError(f"degenerate pair ({i}, {j}): coincident class means")
    u = gap_vec / gap
    d = ds.d
    for k in k_list:
        if k > d - 1:
            raise ValueError(f"k={k} exceeds d-1={d - 1}")
    zi = ds.class_rows(labeling, i) - si.mu
    zj = ds.class_rows(labeling, j) - sj.mu
    centered = np.vstack([zi, zj])
    if len(centered) < 2:
        raise DatasetError("pooled sample count must be >= 2")
    sigma = centered.T @ centered / len(centered)
    axis_variance = float(u @ sigma @ u)
    ortho_total = float(np.trace(sigma)) - axis_variance
    proj = sigma - np.outer(u, sigma @ u)
    ortho = proj - np.outer(proj @ u, u)
    ortho = 0.5 * (ortho + ortho.T)
    max_k = max(k_list, default=0)
    if d <= _FULL_EIG_MAX_DIM:
        eigvals = np.linalg.eigvalsh(ortho)[::-1]
    elif max_k > 0:
        eigvals = _top_k_eigenvalues(ortho, max_k)
    else:
        eigvals = np.empty(0)
    cumulative = {k: float(eigvals[:k].sum()) for k in k_list}
    return DecompositionReport(
        i=i,
        j=j,
        axis_variance=axis_variance,
        ortho_cumulative=cumulative,
        ortho_total=ortho_total,
    )


def cdnv_averages(
    ds: EmbeddingDataset, labeling: str, class_subset: list[int] | None = None
) -> CdnvAverages:
    """Arithmetic means of dir-CDNV, CDNV, and sqrt-CDNV over all ordered
    class pairs i != j in the subset."""
    lab = ds.labeling(labeling)
    classes = list(range(lab.num_classes)) if class_subset is None else list(class_subset)
    if len(classes) < 2:
        raise ValueError("need at least 2 classes")
    dirs, cdnvs, sqrts = [], [], []
    for i in classes:
        for j in classes:
            if i == j:
                continue
            pg = pair_geometry(ds, labeling, i, j)
            dirs.append(pg.dir_cdnv)
            cdnvs.append(pg.cdnv)
            sqrts.append(np.sqrt(pg.cdnv))
    return CdnvAverages(
        avg_dir=float(np.mean(dirs)),
        avg_cdnv=float(np.mean(cdnvs)),
        avg_sqrt_cdnv=float(np.mean(sqrts)),
    )
