"""Seeded Monte Carlo estimation of few-shot NCC error.

Determinism contract: per-trial generators are derived from the master seed
and the trial index via numpy SeedSequence, and per-trial results are reduced
in trial-index order, so identical (source, config, seed) reproduce every
value bitwise regardless of worker count.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .bounds import baseline_bound_prior, multiclass_bound
from .dataset import DatasetError, EmbeddingDataset
from .geometry import CdnvAverages, pair_geometry

_CHUNK = 8192  # test points classified per distance-matrix block


@dataclass(frozen=True)
class FewShotConfig:
    m: int | None  # shots per class; None = known centroids ("infinite")
    trials: int
    seed: int
    classes: tuple[int, ...] | None = None  # default: all classes
    labeling: str | None = None  # required for dataset sources
    test_fraction: float = 0.5  # dataset sources: held-out split
    test_per_class: int = 50  # generator sources: fresh test draws per trial
    workers: int = 1

    def __post_init__(self):
        if self.m is not None and self.m < 1:
            raise ValueError("m must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass(frozen=True)
class FewShotEstimate:
    mean_error: float
    stderr: float | None  # None when trials == 1
    pair_errors: np.ndarray  # (K, K); row i sums over j != i to class-i error
    classes: tuple[int, ...]
    trials: int
    seed_provenance: dict


def ncc_classify(centroids: dict[int, np.ndarray], z: np.ndarray) -> int:
    """Nearest centroid by squared Euclidean distance; ties break to the
    smallest class id."""
    if not centroids:
        raise ValueError("empty centroid map")
    best, best_dist = None, np.inf
    for c in sorted(centroids):
        dist = float(((z - centroids[c]) ** 2).sum())
        if dist < best_dist:
            best, best_dist = c, dist
    return best


def _classify_batch(centroid_matrix: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Predicted centroid positions for a batch; argmin's first-occurrence
    rule matches the smallest-id tie-break when rows are id-ordered."""
    out = np.empty(len(points), dtype=np.intp)
    for start in range(0, len(points), _CHUNK):
        block = points[start : start + _CHUNK]
        diff = block[:, None, :] - centroid_matrix[None, :, :]
        out[start : start + _CHUNK] = np.argmin((diff**2).sum(axis=2), axis=1)
    return out


def _trial_seed(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, 1, trial)))


class _DatasetSource:
    def __init__(self, ds: EmbeddingDataset, cfg: FewShotConfig):
        if cfg.labeling is None:
            raise ValueError("dataset sources require cfg.labeling")
        lab = ds.labeling(cfg.labeling)
        self.ds = ds
        self.classes = tuple(cfg.classes) if cfg.classes else tuple(range(lab.num_classes))
        split_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0)))
        self.pools, self.test = {}, {}
        for c in self.classes:
            idx = np.flatnonzero(lab.labels == c)
            if idx.size == 0:
                raise DatasetError(f"class {c} has no samples")
            perm = split_rng.permutation(idx)
            n_test = max(1, int(round(cfg.test_fraction * idx.size)))
            if n_test >= idx.size and cfg.m is not None:
                raise DatasetError(f"class {c}: no support samples left after test split")
            self.test[c] = perm[:n_test]
            self.pools[c] = perm[n_test:]
            if cfg.m is not None and cfg.m > self.pools[c].size:
                raise DatasetError(
                    f"m={cfg.m} exceeds the {self.pools[c].size} support samples of class {c}"
                )
        self.full_means = {
            c: ds.embeddings[lab.labels == c].mean(axis=0) for c in self.classes
        }

    def centroids(self, m, rng):
        if m is None:
            return np.stack([self.full_means[c] for c in self.classes])
        rows = [
            self.ds.embeddings[rng.choice(self.pools[c], size=m, replace=False)].mean(axis=0)
            for c in self.classes
        ]
        return np.stack(rows)

    def test_points(self, rng):
        return [self.ds.embeddings[self.test[c]] for c in self.classes]

    deterministic_known_centroid = True


class _GeneratorSource:
    def __init__(self, model, cfg: FewShotConfig):
        self.model = model
        self.classes = tuple(cfg.classes) if cfg.classes else tuple(model.classes)
        self.test_per_class = cfg.test_per_class

    def centroids(self, m, rng):
        if m is None:
            return np.stack([self.model.mean(c) for c in self.classes])
        return np.stack(
            [self.model.sample(c, m, rng).mean(axis=0) for c in self.classes]
        )

    def test_points(self, rng):
        return [self.model.sample(c, self.test_per_class, rng) for c in self.classes]

    deterministic_known_centroid = False


def _wrap_source(source, cfg: FewShotConfig):
    if isinstance(source, EmbeddingDataset):
        return _DatasetSource(source, cfg)
    return _GeneratorSource(source, cfg)


def run_fewshot_estimate(source, cfg: FewShotConfig) -> FewShotEstimate:
    """Monte Carlo m-shot NCC error with per-pair error matrix p_{i->j}.

    Per trial: sample m support points per class (without replacement for
    datasets, fresh draws for generators), form empirical centroids, classify
    the held-out test points. m = None uses true class means instead.
    """
    wrapped = _wrap_source(source, cfg)
    classes = wrapped.classes
    k = len(classes)
    if k < 2:
        raise ValueError("need at least 2 classes")

    trials = cfg.trials
    if cfg.m is None and wrapped.deterministic_known_centroid:
        trials = 1  # fixed centroids + fixed test split: one evaluation suffices

    def one_trial(t: int):
        rng = _trial_seed(cfg.seed, t)
        centroid_matrix = wrapped.centroids(cfg.m, rng)
        counts = np.zeros((k, k), dtype=np.int64)
        totals = np.zeros(k, dtype=np.int64)
        for pos, points in enumerate(wrapped.test_points(rng)):
            pred = _classify_batch(centroid_matrix, points)
            counts[pos] += np.bincount(pred, minlength=k)
            totals[pos] += len(points)
        class_err = 1.0 - np.diag(counts) / totals
        return counts, totals, float(class_err.mean())

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(one_trial, range(trials)))
    else:
        results = [one_trial(t) for t in range(trials)]

    counts = np.zeros((k, k), dtype=np.int64)
    totals = np.zeros(k, dtype=np.int64)
    trial_errors = np.empty(trials)
    for t, (c, tot, err) in enumerate(results):
        counts += c
        totals += tot
        trial_errors[t] = err

    pair_errors = counts / totals[:, None]
    np.fill_diagonal(pair_errors, 0.0)
    mean_error = float(np.mean(trial_errors))
    if trials > 1:
        stderr = float(np.std(trial_errors, ddof=1) / np.sqrt(trials))
    else:
        stderr = None
        if cfg.trials == 1:
            warnings.warn("trials=1: standard error unavailable", stacklevel=2)
    return FewShotEstimate(
        mean_error=mean_error,
        stderr=stderr,
        pair_errors=pair_errors,
        classes=classes,
        trials=trials,
        seed_provenance={
            "master_seed": cfg.seed,
            "scheme": "SeedSequence((seed, 0)) split, SeedSequence((seed, 1, trial)) trials",
        },
    )


@dataclass(frozen=True)
class SweepRow:
    m: int
    mc_error: float
    mc_stderr: float | None
    bound_optimized: float
    bound_equal: float
    bound_cantelli: float
    bound_prior: float


@dataclass(frozen=True)
class SweepReport:
    rows: tuple[SweepRow, ...]
    classes: tuple[int, ...]
    trials: int
    seed: int


def _pair_geometries(source, classes, labeling):
    pgs = []
    for i in classes:
        for j in classes:
            if i != j:
                if isinstance(source, EmbeddingDataset):
                    pgs.append(pair_geometry(source, labeling, i, j))
                else:
                    pgs.append(source.pair_geometry(i, j))
    return pgs


def bound_vs_error_sweep(
    source,
    class_subset,
    m_values,
    trials: int,
    seed: int,
    labeling: str | None = None,
    test_fraction: float = 0.5,
    test_per_class: int = 50,
    workers: int = 1,
) -> SweepReport:
    """Monte Carlo error next to every certificate, one row per shot count."""
    classes = tuple(class_subset)
    pgs = _pair_geometries(source, classes, labeling)
    c_prime = len(classes)
    averages = CdnvAverages(
        avg_dir=float(np.mean([pg.dir_cdnv for pg in pgs])),
        avg_cdnv=float(np.mean([pg.cdnv for pg in pgs])),
        avg_sqrt_cdnv=float(np.mean([np.sqrt(pg.cdnv) for pg in pgs])),
    )
    cantelli = multiclass_bound(pgs, 1, "cantelli").total
    base_cfg = FewShotConfig(
        m=None,
        trials=trials,
        seed=seed,
        classes=classes,
        labeling=labeling,
        test_fraction=test_fraction,
        test_per_class=test_per_class,
        workers=workers,
    )
    rows = []
    for m in m_values:
        est = run_fewshot_estimate(source, replace(base_cfg, m=m))
        rows.append(
            SweepRow(
                m=m,
                mc_error=est.mean_error,
                mc_stderr=est.stderr,
                bound_optimized=multiclass_bound(pgs, m, "optimized").total,
                bound_equal=multiclass_bound(pgs, m, "equal").total,
                bound_cantelli=cantelli,
                bound_prior=baseline_bound_prior(averages, c_prime, m),
            )
        )
    return SweepReport(rows=tuple(rows), classes=classes, trials=trials, seed=seed)
