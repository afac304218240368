"""Cross-task decision-axis alignment and the near-orthogonality bound.

For two independent balanced labelings, small directional CDNV forces every
pairwise decision axis of one task to be nearly orthogonal to every pairwise
axis of the other; the bound is
min{(d1/d2) sqrt(2 K2 dirV1), (d2/d1) sqrt(2 K1 dirV2)}.

Independence and balance are checked preconditions: when they demonstrably
fail, the report says so instead of asserting the bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .dataset import DatasetError, EmbeddingDataset
from .geometry import DegeneratePairError, class_stats, directional_variance

# Statistical slack for empirical verification: the proposition is a
# population statement, so axis estimates carry O(1/sqrt(n)) noise.
DEFAULT_SLACK_COEFF = 5.0
DEFAULT_CHI2_ALPHA = 1e-3


@dataclass(frozen=True)
class PairAxis:
    a: int
    a_prime: int
    u: np.ndarray  # unit axis from class a toward a_prime
    d: float
    dir_cdnv_max: float  # max over all task classes c of u' Sigma_c u / d^2


@dataclass(frozen=True)
class DecisionAxisSet:
    labeling: str
    num_classes: int
    pairs: tuple[PairAxis, ...]  # unordered pairs a < a'; u_{a'a} = -u_{aa'}


@dataclass(frozen=True)
class OrthoEntry:
    pair_a: tuple[int, int]
    pair_b: tuple[int, int]
    abs_cos: float
    bound: float
    satisfied: bool | None  # None when hypotheses are violated


@dataclass(frozen=True)
class OrthoReport:
    labeling_a: str
    labeling_b: str
    entries: tuple[OrthoEntry, ...]
    median_abs_cos: float
    q25: float
    q75: float
    eps_stat: float
    status: str  # "ok" | "hypotheses_violated"
    hypothesis_notes: tuple[str, ...] = ()


def decision_axes(ds: EmbeddingDataset, labeling: str) -> DecisionAxisSet:
    """All pairwise decision axes of one labeling, each with the
    max-over-classes directional CDNV."""
    lab = ds.labeling(labeling)
    k = lab.num_classes
    stats_by_class = [class_stats(ds, labeling, c) for c in range(k)]
    pairs = []
    for a in range(k):
        for a_prime in range(a + 1, k):
            gap_vec = stats_by_class[a_prime].mu - stats_by_class[a].mu
            gap = float(np.linalg.norm(gap_vec))
            if gap == 0.0:
                raise DegeneratePairError(
                    f"degenerate pair ({a}, {a_prime}) in labeling {labeling!r}"
                )
            u = gap_vec / gap
            dir_max = max(
                directional_variance(ds, labeling, c, u) for c in range(k)
            ) / gap**2
            pairs.append(PairAxis(a=a, a_prime=a_prime, u=u, d=gap, dir_cdnv_max=dir_max))
    return DecisionAxisSet(labeling=labeling, num_classes=k, pairs=tuple(pairs))


def orthogonality_bound(
    d1: float, d2: float, k1: int, k2: int, dir_v1: float, dir_v2: float
) -> float:
    """min{(d1/d2) sqrt(2 K2 dirV1), (d2/d1) sqrt(2 K1 dirV2)}."""
    if d1 <= 0 or d2 <= 0:
        raise ValueError("gaps must be positive")
    if k1 < 2 or k2 < 2:
        raise ValueError("class counts must be >= 2")
    if dir_v1 < 0 or dir_v2 < 0:
        raise ValueError("directional CDNV must be >= 0")
    return min(
        (d1 / d2) * math.sqrt(2.0 * k2 * dir_v1),
        (d2 / d1) * math.sqrt(2.0 * k1 * dir_v2),
    )


def cross_task_cosines(
    axes_a: DecisionAxisSet,
    axes_b: DecisionAxisSet,
    eps_stat: float = 0.0,
    assert_bound: bool = True,
) -> OrthoReport:
    """|cos| between every pair of decision axes across two distinct
    labelings, each compared to its near-orthogonality bound."""
    if axes_a.labeling == axes_b.labeling:
        raise ValueError("distinct labelings required")
    entries = []
    for pa in axes_a.pairs:
        for pb in axes_b.pairs:
            abs_cos = float(abs(pa.u @ pb.u))
            bound = orthogonality_bound(
                pa.d, pb.d, axes_a.num_classes, axes_b.num_classes,
                pa.dir_cdnv_max, pb.dir_cdnv_max,
            )
            satisfied = (abs_cos <= bound + eps_stat) if assert_bound else None
            entries.append(
                OrthoEntry(
                    pair_a=(pa.a, pa.a_prime),
                    pair_b=(pb.a, pb.a_prime),
                    abs_cos=abs_cos,
                    bound=bound,
                    satisfied=satisfied,
                )
            )
    cosines = np.array([e.abs_cos for e in entries])
    return OrthoReport(
        labeling_a=axes_a.labeling,
        labeling_b=axes_b.labeling,
        entries=tuple(entries),
        median_abs_cos=float(np.median(cosines)),
        q25=float(np.percentile(cosines, 25)),
        q75=float(np.percentile(cosines, 75)),
        eps_stat=eps_stat,
        status="ok" if assert_bound else "hypotheses_violated",
    )


def _hypothesis_checks(
    ds: EmbeddingDataset, name_a: str, name_b: str, balance_tolerance: float, chi2_alpha: float
) -> list[str]:
    lab_a, lab_b = ds.labeling(name_a), ds.labeling(name_b)
    notes = []
    for lab in (lab_a, lab_b):
        freqs = np.bincount(lab.labels, minlength=lab.num_classes) / ds.n
        dev = float(np.abs(freqs - 1.0 / lab.num_classes).max())
        if dev > balance_tolerance:
            notes.append(
                f"labeling {lab.name!r} unbalanced: max frequency deviation "
                f"{dev:.4f} > {balance_tolerance}"
            )
    table = np.zeros((lab_a.num_classes, lab_b.num_classes))
    np.add.at(table, (lab_a.labels, lab_b.labels), 1.0)
    expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / table.sum()
    if (expected > 0).all():
        chi2 = float(((table - expected) ** 2 / expected).sum())
        dof = (lab_a.num_classes - 1) * (lab_b.num_classes - 1)
        threshold = float(stats.chi2.ppf(1.0 - chi2_alpha, dof))
        if chi2 > threshold:
            notes.append(
                f"labelings dependent: chi-square {chi2:.2f} exceeds the "
                f"{1 - chi2_alpha:.4f} quantile {threshold:.2f} (dof={dof})"
            )
    else:
        notes.append("labelings dependent: empty contingency cells")
    return notes


def verify_proposition(
    ds: EmbeddingDataset,
    labeling_a: str,
    labeling_b: str,
    balance_tolerance: float = 0.05,
    chi2_alpha: float = DEFAULT_CHI2_ALPHA,
    slack_coeff: float = DEFAULT_SLACK_COEFF,
) -> OrthoReport:
    """Check the near-orthogonality bound on data, with statistical slack
    eps_stat = slack_coeff / sqrt(min class size).

    If the balance or independence hypotheses demonstrably fail, the report
    is marked "hypotheses_violated" and no bound is asserted.
    """
    if labeling_a == labeling_b:
        raise ValueError("distinct labelings required")
    notes = _hypothesis_checks(ds, labeling_a, labeling_b, balance_tolerance, chi2_alpha)
    axes_a = decision_axes(ds, labeling_a)
    axes_b = decision_axes(ds, labeling_b)
    min_class = min(
        min(np.bincount(ds.labeling(name).labels)) for name in (labeling_a, labeling_b)
    )
    if min_class < 1:
        raise DatasetError("every class needs at least one sample")
    eps_stat = slack_coeff / math.sqrt(min_class)
    report = cross_task_cosines(
        axes_a, axes_b, eps_stat=eps_stat, assert_bound=not notes
    )
    if notes:
        report = OrthoReport(
            labeling_a=report.labeling_a,
            labeling_b=report.labeling_b,
            entries=report.entries,
            median_abs_cos=report.median_abs_cos,
            q25=report.q25,
            q75=report.q75,
            eps_stat=eps_stat,
            status="hypotheses_violated",
            hypothesis_notes=tuple(notes),
        )
    return report
