"""Finite-shot NCC error certificates from pair geometry.

Variants:
    generic    tunable positive weights (lambda_T, lambda_S, lambda_Q)
    equal      the generic bound at weights (1, 1, 1)
    optimized  Cauchy-Schwarz-optimal weights, correction (sqrt E1 + sqrt E2
               + sqrt E3)^2
    linear / cantelli   known-centroid asymptotes 4*dirV and 4*dirV/(1+4*dirV)
    prior      the earlier average-CDNV baseline

All bounds are dimensionless and invariant under global rescaling of the
embeddings. Values above 1 are reported unclipped with a vacuous flag.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

from .geometry import CdnvAverages, PairGeometry


class NonpositiveMarginError(ValueError):
    """Expected pairwise margin <= 0: the bound's standing assumption fails."""


@dataclass(frozen=True)
class ExpectedMargin:
    value: float  # d^2 + (v_j - v_i)/m
    positive: bool


@dataclass(frozen=True)
class BoundValue:
    i: int
    j: int
    m: int
    variant: str
    leading: float  # 4*dirV / denom
    correction: float  # finite-shot term / denom
    total: float
    e1: float
    e2: float
    e3: float
    denom: float  # (1 + (v_j - v_i)/(m d^2))^2
    vacuous: bool  # total >= 1: carries no information for the pair


@dataclass(frozen=True)
class MulticlassBound:
    classes: tuple[int, ...]
    m: int
    variant: str
    per_pair: tuple[BoundValue, ...]
    total: float  # (1/C') * sum over ordered pairs of per-pair totals
    vacuous: bool  # total >= chance level 1 - 1/C'


def expected_margin(pg: PairGeometry, m: int) -> ExpectedMargin:
    """E[Delta_{i->j}] = d^2 + (v_j - v_i)/m; flagged when <= 0."""
    if m < 1:
        raise ValueError("m must be >= 1")
    value = pg.d**2 + (pg.v_j - pg.v_i) / m
    return ExpectedMargin(value=value, positive=value > 0.0)


def _components(pg: PairGeometry, m: int):
    """E1, E2, E3 and the variance-imbalance denominator."""
    margin = expected_margin(pg, m)
    if not margin.positive:
        raise NonpositiveMarginError(
            f"pair ({pg.i}, {pg.j}): expected margin {margin.value} <= 0 at m={m}"
        )
    v, theta = pg.cdnv, pg.theta
    e1 = (4.0 / m) * (v**2 + v / 4.0)
    e2 = v / m
    e3 = (theta + 2.0 * (m - 1) * v**2) / m**3
    denom = (1.0 + (pg.v_j - pg.v_i) / (m * pg.d**2)) ** 2
    return e1, e2, e3, denom


def pairwise_bound_generic(
    pg: PairGeometry, m: int, lambdas: tuple[float, float, float]
) -> BoundValue:
    """Tunable-weight pairwise bound.

    Numerator 4*dirV + a_T V^2 + (a_T/4 + a_S) V + a_Q (Theta + 2(m-1) V^2)
    with a_T = 4k/(m lT), a_S = k/(m lS), a_Q = k/(m^3 lQ), k = lT + lS + lQ.
    """
    lt, ls, lq = lambdas
    if lt <= 0 or ls <= 0 or lq <= 0:
        raise ValueError("lambda weights must be positive")
    e1, e2, e3, denom = _components(pg, m)
    kappa = lt + ls + lq
    a_t = 4.0 * kappa / (m * lt)
    a_s = kappa / (m * ls)
    a_q = kappa / (m**3 * lq)
    v, theta = pg.cdnv, pg.theta
    correction = a_t * v**2 + (a_t / 4.0 + a_s) * v + a_q * (theta + 2.0 * (m - 1) * v**2)
    return _assemble(pg, m, "generic", correction, e1, e2, e3, denom)


def pairwise_bound_equal(pg: PairGeometry, m: int) -> BoundValue:
    """Equal-weight bound: coefficients 12/m, 6/m, 3/m^3. Identical to the
    generic bound at lambdas (1, 1, 1)."""
    return replace(pairwise_bound_generic(pg, m, (1.0, 1.0, 1.0)), variant="equal")


def pairwise_bound_optimized(pg: PairGeometry, m: int) -> BoundValue:
    """Weight-optimized bound: correction (sqrt E1 + sqrt E2 + sqrt E3)^2.

    Well-defined for any m >= 1; the theorem is stated for m >= 10, so
    smaller m only triggers a warning.
    """
    if m < 10:
        warnings.warn(
            f"optimized bound evaluated at m={m} < 10, outside the stated regime",
            stacklevel=2,
        )
    e1, e2, e3, denom = _components(pg, m)
    correction = (math.sqrt(e1) + math.sqrt(e2) + math.sqrt(e3)) ** 2
    return _assemble(pg, m, "optimized", correction, e1, e2, e3, denom)


def _assemble(pg, m, variant, correction, e1, e2, e3, denom) -> BoundValue:
    leading = 4.0 * pg.dir_cdnv / denom
    correction = correction / denom
    total = leading + correction
    return BoundValue(
        i=pg.i,
        j=pg.j,
        m=m,
        variant=variant,
        leading=leading,
        correction=correction,
        total=total,
        e1=e1,
        e2=e2,
        e3=e3,
        denom=denom,
        vacuous=total >= 1.0,
    )


def pairwise_bound_asymptotic(pg: PairGeometry, variant: str = "cantelli") -> float:
    """Known-centroid (m -> infinity) pairwise bound: 4*dirV, or the sharp
    Cantelli form 4*dirV / (1 + 4*dirV)."""
    four_v = 4.0 * pg.dir_cdnv
    if variant == "linear":
        return four_v
    if variant == "cantelli":
        return four_v / (1.0 + four_v)
    raise ValueError(f"unknown asymptotic variant {variant!r}")


def multiclass_bound(
    pgs: list[PairGeometry],
    m: int,
    variant: str = "optimized",
    lambdas: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> MulticlassBound:
    """Average the per-pair totals over all ordered pairs with the 1/C'
    prefactor. `pgs` must hold every ordered pair over the class subset."""
    classes = tuple(sorted({pg.i for pg in pgs} | {pg.j for pg in pgs}))
    c_prime = len(classes)
    if len(pgs) != c_prime * (c_prime - 1):
        raise ValueError(
            f"expected {c_prime * (c_prime - 1)} ordered pairs over {c_prime} "
            f"classes, got {len(pgs)}"
        )
    per_pair = []
    for pg in pgs:
        if variant == "generic":
            per_pair.append(pairwise_bound_generic(pg, m, lambdas))
        elif variant == "equal":
            per_pair.append(pairwise_bound_equal(pg, m))
        elif variant == "optimized":
            per_pair.append(pairwise_bound_optimized(pg, m))
        elif variant in ("linear", "cantelli"):
            value = pairwise_bound_asymptotic(pg, variant)
            per_pair.append(
                BoundValue(pg.i, pg.j, m, variant, value, 0.0, value, 0.0, 0.0, 0.0, 1.0, value >= 1.0)
            )
        else:
            raise ValueError(f"unknown variant {variant!r}")
    total = sum(b.total for b in per_pair) / c_prime
    return MulticlassBound(
        classes=classes,
        m=m,
        variant=variant,
        per_pair=tuple(per_pair),
        total=total,
        vacuous=total >= 1.0 - 1.0 / c_prime,
    )


def baseline_bound_prior(averages: CdnvAverages, c_prime: int, m: int) -> float:
    """Prior average-CDNV baseline:
    (C'-1) (8*avg_dir + (8/sqrt m) avg_sqrt_cdnv + (8/sqrt m + 4/m) avg_cdnv).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if c_prime < 2:
        raise ValueError("C' must be >= 2")
    root = 8.0 / math.sqrt(m)
    return (c_prime - 1) * (
        8.0 * averages.avg_dir
        + root * averages.avg_sqrt_cdnv
        + (root + 4.0 / m) * averages.avg_cdnv
    )
