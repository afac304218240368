"""Parameterized synthetic distributions with analytic ground truth.

Three families:
  * Gaussian class pairs (isotropic / diagonal / full covariance), means at
    -(gap/2) e1 and +(gap/2) e1;
  * the orthonormal-factor model with M independent binary labelings,
    on-axis noise xi and off-axis nuisance eta;
  * the two-point Cantelli extremizer X in {t, -a} with a = sigma^2/t,
    p = sigma^2/(sigma^2 + t^2).

Samplers are pure functions of (spec, n, seed); per-class chunk seeds are
derived from the master seed so parallel generation cannot change results.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import EmbeddingDataset, Labeling
from .geometry import PairGeometry


def _cov_matrix(cov, dim: int) -> np.ndarray:
    """Normalize a covariance spec (scalar | diagonal vector | full matrix)
    to a dense symmetric PSD matrix."""
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim == 0:
        if cov < 0:
            raise ValueError("isotropic variance must be >= 0")
        return float(cov) * np.eye(dim)
    if cov.ndim == 1:
        if cov.shape != (dim,) or (cov < 0).any():
            raise ValueError("diagonal covariance must be length d and nonnegative")
        return np.diag(cov)
    if cov.shape != (dim, dim):
        raise ValueError(f"covariance must be {dim}x{dim}")
    sym = 0.5 * (cov + cov.T)
    eigvals = np.linalg.eigvalsh(sym)
    if eigvals.min() < -1e-10 * max(1.0, eigvals.max()):
        raise ValueError("covariance is not positive semidefinite")
    return sym


def _cov_factor(sigma: np.ndarray) -> np.ndarray:
    """Symmetric square root, robust to PSD-singular matrices."""
    eigvals, eigvecs = np.linalg.eigh(sigma)
    return eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))


def _gaussian_m4(sigma: np.ndarray) -> float:
    """E ||z - mu||^4 for Gaussian z: (tr Sigma)^2 + 2 tr(Sigma^2)."""
    return float(np.trace(sigma)) ** 2 + 2.0 * float((sigma * sigma).sum())


@dataclass(frozen=True)
class GaussianPairSpec:
    dim: int
    gap: float  # means at -(gap/2) e1 and +(gap/2) e1
    cov_a: object = 1.0  # scalar | diagonal vector | full matrix
    cov_b: object = 1.0

    def __post_init__(self):
        if self.gap <= 0:
            raise ValueError("gap must be positive")


class GaussianPairModel:
    """Two Gaussian classes with exact moments; usable as a few-shot source."""

    def __init__(self, spec: GaussianPairSpec):
        self.spec = spec
        self.covs = [_cov_matrix(spec.cov_a, spec.dim), _cov_matrix(spec.cov_b, spec.dim)]
        self._factors = [_cov_factor(c) for c in self.covs]
        self.means = [np.zeros(spec.dim), np.zeros(spec.dim)]
        self.means[0][0] = -spec.gap / 2.0
        self.means[1][0] = +spec.gap / 2.0
        self.classes = [0, 1]

    def mean(self, class_id: int) -> np.ndarray:
        return self.means[class_id]

    def sample(self, class_id: int, n: int, rng: np.random.Generator) -> np.ndarray:
        g = rng.standard_normal((n, self.spec.dim))
        return self.means[class_id] + g @ self._factors[class_id].T

    def pair_geometry(self, i: int, j: int) -> PairGeometry:
        gap_vec = self.means[j] - self.means[i]
        gap = float(np.linalg.norm(gap_vec))
        u = gap_vec / gap
        v_i = float(np.trace(self.covs[i]))
        v_j = float(np.trace(self.covs[j]))
        return PairGeometry(
            i=i,
            j=j,
            d=gap,
            u=u,
            v_i=v_i,
            v_j=v_j,
            cdnv=(v_i + v_j) / gap**2,
            dir_cdnv=float(u @ self.covs[i] @ u) / gap**2,
            theta=(_gaussian_m4(self.covs[i]) + _gaussian_m4(self.covs[j])) / gap**4,
        )


def sample_gaussian_pair(spec: GaussianPairSpec, n_per_class: int, seed: int) -> EmbeddingDataset:
    """Dataset with one binary labeling "class"; rows grouped class 0 then 1."""
    model = GaussianPairModel(spec)
    blocks, labels = [], []
    for c in model.classes:
        rng = np.random.default_rng(np.random.SeedSequence((seed, c)))
        blocks.append(model.sample(c, n_per_class, rng))
        labels.append(np.full(n_per_class, c, dtype=np.int64))
    return EmbeddingDataset(
        np.vstack(blocks),
        [Labeling("class", np.concatenate(labels), 2)],
        source=f"gaussian_pair(dim={spec.dim}, gap={spec.gap}, seed={seed})",
    )


@dataclass(frozen=True)
class FactorModelSpec:
    dim: int
    num_tasks: int  # M <= dim
    deltas: tuple[float, ...]  # per-task mean gap Delta_l > 0
    eta_variance: float  # per-dimension nuisance variance on the complement
    xi_covariance: object = 0.0  # isotropic scalar or full matrix
    frame_seed: int = 0

    def __post_init__(self):
        if self.num_tasks > self.dim:
            raise ValueError("num_tasks must be <= dim")
        deltas = tuple(float(x) for x in np.atleast_1d(np.asarray(self.deltas, dtype=float)))
        if len(deltas) == 1:
            deltas = deltas * self.num_tasks
        if len(deltas) != self.num_tasks or any(d <= 0 for d in deltas):
            raise ValueError("need num_tasks positive deltas")
        object.__setattr__(self, "deltas", deltas)
        if self.eta_variance < 0:
            raise ValueError("eta_variance must be >= 0")


class FactorModel:
    """z = sum_l (Delta_l / 2) t_l v_l + eta + xi with a seeded orthonormal
    frame {v_l}; eta is Gaussian in the orthogonal complement, xi Gaussian
    in the ambient space. Task labels map t = -1 -> class 0, t = +1 -> class 1,
    so the task-l decision axis u_{01} equals v_l exactly."""

    def __init__(self, spec: FactorModelSpec):
        self.spec = spec
        rng = np.random.default_rng(spec.frame_seed)
        q, r = np.linalg.qr(rng.standard_normal((spec.dim, spec.dim)))
        q = q * np.sign(np.diag(r))  # sign-fixed for determinism
        self.frame = q[:, : spec.num_tasks]  # v_1 .. v_M, columns
        self.complement = q[:, spec.num_tasks :]
        self.xi_cov = _cov_matrix(spec.xi_covariance, spec.dim)
        self._xi_factor = _cov_factor(self.xi_cov)

    def sample(self, n: int, rng: np.random.Generator):
        """Returns (embeddings (n, d), task_signs (n, M) in {-1, +1})."""
        spec = self.spec
        signs = rng.choice(np.array([-1.0, 1.0]), size=(n, spec.num_tasks))
        z = (signs * np.asarray(spec.deltas) / 2.0) @ self.frame.T
        if self.complement.shape[1] and spec.eta_variance > 0:
            eta = rng.standard_normal((n, self.complement.shape[1]))
            z = z + np.sqrt(spec.eta_variance) * eta @ self.complement.T
        z = z + rng.standard_normal((n, spec.dim)) @ self._xi_factor.T
        return z, signs.astype(np.int64)

    def analytics(self) -> dict:
        """Closed-form per-task directional CDNV, exact CDNV, and the
        off-axis lower bound 2 tr Cov(eta) / Delta^2."""
        spec = self.spec
        n_comp = self.complement.shape[1]
        eta_trace = n_comp * spec.eta_variance
        xi_trace = float(np.trace(self.xi_cov))
        gram = self.frame.T @ self.frame
        per_task = []
        for ell in range(spec.num_tasks):
            v = self.frame[:, ell]
            delta = spec.deltas[ell]
            on_axis = float(v @ self.xi_cov @ v)
            other = sum(
                spec.deltas[j] ** 2 / 4.0 for j in range(spec.num_tasks) if j != ell
            )
            class_variance = other + eta_trace + xi_trace
            per_task.append(
                {
                    "task": f"task{ell + 1}",
                    "delta": delta,
                    "dir_cdnv": on_axis / delta**2,
                    "cdnv": 2.0 * class_variance / delta**2,
                    "cdnv_lower_bound": 2.0 * eta_trace / delta**2,
                    "class_variance": class_variance,
                }
            )
        return {
            "per_task": per_task,
            "frame_gram_residual": float(
                np.abs(gram - np.eye(spec.num_tasks)).max()
            ),
        }


def sample_factor_model(spec: FactorModelSpec, n: int, seed: int) -> EmbeddingDataset:
    """Dataset with one binary labeling per task, named task1..taskM."""
    model = FactorModel(spec)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0)))
    z, signs = model.sample(n, rng)
    labelings = [
        Labeling(f"task{ell + 1}", ((signs[:, ell] + 1) // 2).astype(np.int64), 2)
        for ell in range(spec.num_tasks)
    ]
    return EmbeddingDataset(
        z,
        labelings,
        source=f"factor_model(dim={spec.dim}, M={spec.num_tasks}, seed={seed})",
    )


@dataclass(frozen=True)
class TwoPointSpec:
    sigma2: float
    t: float

    def __post_init__(self):
        if self.sigma2 <= 0 or self.t <= 0:
            raise ValueError("sigma2 and t must be positive")

    @property
    def a(self) -> float:
        return self.sigma2 / self.t

    @property
    def p(self) -> float:
        return self.sigma2 / (self.sigma2 + self.t**2)


@dataclass(frozen=True)
class TwoPointSample:
    values: np.ndarray  # n draws from {t, -a}
    a: float
    p: float
    sigma2: float
    t: float


def two_point_extremizer(spec: TwoPointSpec, n: int, seed: int) -> TwoPointSample:
    """Draws from the Cantelli-extremal two-point law: X = t with probability
    p = sigma^2/(sigma^2 + t^2), else X = -a with a = sigma^2/t. The law has
    mean 0, variance sigma^2, and Pr(X >= t) = p exactly."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0)))
    hits = rng.random(n) < spec.p
    values = np.where(hits, spec.t, -spec.a)
    return TwoPointSample(values=values, a=spec.a, p=spec.p, sigma2=spec.sigma2, t=spec.t)


def two_point_ncc_error(spec: TwoPointSpec, n: int, seed: int) -> float:
    """Known-centroid NCC error of the pair induced by the extremizer.

    The fluctuating class sits at the origin with 1-d noise X along the
    decision axis toward a reference centroid at distance 2t; the reference
    class has the smaller id, so midpoint ties resolve against the
    fluctuating class and Pr(error) = Pr(X >= t) = p exactly.
    """
    sample = two_point_extremizer(spec, n, seed)
    gap = 2.0 * spec.t
    # 1-d embedding: centroid of class 0 (reference) at `gap`, class 1 at 0.
    z = sample.values
    dist_own = z**2
    dist_ref = (z - gap) ** 2
    return float(np.mean(dist_ref <= dist_own))
