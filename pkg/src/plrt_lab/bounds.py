"""Closed-form generalization machinery for constrained piecewise-linear trees.

Computes empirical data statistics, Rademacher-complexity upper bounds for
the l2, l1, and l1-with-variable-selection constraint classes, and the
resulting high-probability generalization-gap bound. Every quantity is
evaluated analytically from dataset statistics; nothing is sampled. All
logarithms are natural.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import (DegenerateData, DimensionOverflow, EmptyDataset,
                     InvalidDelta)
from .linalg import operator_norm

MAX_EXPLICIT_DIM = 4096


class NormType(Enum):
    L2 = "l2"
    L1 = "l1"


@dataclass
class EmpiricalStats:
    """Dataset statistics the bounds are built from.

    trace_cov and opnorm_cov describe the empirical second-moment matrix
    of the regression features; mean_maxnorm_sq is the average squared
    coordinatewise max; K_hat and R_hat are the largest feature norm and
    target magnitude seen.
    """

    n: int
    d: int
    D: int
    trace_cov: float
    opnorm_cov: float
    mean_maxnorm_sq: float
    K_hat: float
    R_hat: float


@dataclass
class BoundInputs:
    """User-chosen constants of the bound: norm-ball radius W, leaf count
    ell, confidence delta, and optional overrides for the predictor sup
    bound F (default W * K_hat) and target bound R (default R_hat)."""

    W: float
    ell: int
    delta: float
    norm_type: NormType = NormType.L2
    s: Optional[int] = None
    F: Optional[float] = None
    R: Optional[float] = None

    def __post_init__(self):
        if self.W < 0:
            raise ValueError(f"W={self.W} must be nonnegative")
        if self.ell < 1:
            raise ValueError(f"ell={self.ell} must be at least 1")


@dataclass
class BoundReport:
    stats: EmpiricalStats
    norm_type: str
    W: float
    ell: int
    delta: float
    s: Optional[int]
    F: float
    R: float
    rademacher_bound: float
    gap_bound: float
    trace_term: float
    opnorm_term: float
    selection_term: float
    confidence_term: float
    ratio_r_hat: Optional[float]
    l1_below_l2: bool


def empirical_stats(data):
    """Statistics of the regression features and targets.

    The second-moment matrix is formed explicitly, so the dimension is
    capped at MAX_EXPLICIT_DIM; its spectral norm comes from power
    iteration.
    """
    X = np.asarray(data.X, dtype=np.float64)
    Y = np.asarray(data.Y, dtype=np.float64)
    n = X.shape[0]
    if n == 0:
        raise EmptyDataset("statistics need at least one row")
    d = X.shape[1]
    D = np.asarray(data.Psi).shape[1]
    if d > MAX_EXPLICIT_DIM:
        raise DimensionOverflow(
            f"d={d} exceeds the explicit covariance cap {MAX_EXPLICIT_DIM}")
    cov = (X.T @ X) / n
    row_max = np.max(np.abs(X), axis=1)
    return EmpiricalStats(
        n=n, d=d, D=D,
        trace_cov=float(np.trace(cov)),
        opnorm_cov=float(operator_norm(cov)),
        mean_maxnorm_sq=float(np.mean(row_max * row_max)),
        K_hat=float(np.sqrt(np.max(np.einsum("ij,ij->i", X, X)))),
        R_hat=float(np.max(np.abs(Y))),
    )


def _log_end(stats):
    return math.log(math.e * stats.n * stats.D)


def rademacher_bound_l2(stats, inputs):
    """W sqrt(ell/n) (sqrt(2 trace) + 4 sqrt(opnorm) sqrt(log(e n D)))."""
    scale = inputs.W * math.sqrt(inputs.ell / stats.n)
    trace_term = scale * math.sqrt(2.0 * stats.trace_cov)
    opnorm_term = scale * 4.0 * math.sqrt(stats.opnorm_cov) * math.sqrt(_log_end(stats))
    return trace_term + opnorm_term


def rademacher_bound_l1(stats, inputs):
    """(W sqrt(ell) / sqrt(n)) (sqrt(2 mean_maxnorm_sq) (1 + 4 sqrt(log d))
    + 4 sqrt(opnorm) sqrt(log(e n D)))."""
    scale = inputs.W * math.sqrt(inputs.ell) / math.sqrt(stats.n)
    maxnorm_term = scale * math.sqrt(2.0 * stats.mean_maxnorm_sq) \
        * (1.0 + 4.0 * math.sqrt(math.log(stats.d)))
    opnorm_term = scale * 4.0 * math.sqrt(stats.opnorm_cov) * math.sqrt(_log_end(stats))
    return maxnorm_term + opnorm_term


def rademacher_bound_varsel(stats, inputs):
    """The l1 bound over s selected variables plus the selection price
    (16 sqrt(s) W / sqrt(n)) sqrt(opnorm) sqrt(log(d e / s))."""
    if inputs.s is None:
        raise ValueError("selection bound needs the selected-variable count s")
    s = int(inputs.s)
    if not 1 <= s <= stats.d:
        raise ValueError(f"s={s} outside [1, {stats.d}]")
    scale = math.sqrt(inputs.ell) * inputs.W / math.sqrt(stats.n)
    maxnorm_term = scale * math.sqrt(2.0 * stats.mean_maxnorm_sq) \
        * (1.0 + 4.0 * math.sqrt(math.log(s)))
    opnorm_term = scale * 4.0 * math.sqrt(stats.opnorm_cov) * math.sqrt(_log_end(stats))
    selection_term = (16.0 * math.sqrt(s) * inputs.W / math.sqrt(stats.n)) \
        * math.sqrt(stats.opnorm_cov) * math.sqrt(math.log(stats.d * math.e / s))
    return maxnorm_term + opnorm_term + selection_term


def ratio_r_hat(stats):
    """trace_cov / mean_maxnorm_sq, the diagnostic for when the l1 bound
    beats the l2 bound."""
    if stats.mean_maxnorm_sq == 0.0:
        raise DegenerateData("max-norm statistic is zero; the ratio is undefined")
    return stats.trace_cov / stats.mean_maxnorm_sq


def generalization_gap_bound(stats, inputs, rademacher_value, add_union_term=False):
    """High-probability bound on generalization gap:

        4 (R + F) (rad + [4 M sqrt(ell log(e n D) / n)]
                   + (R + 2F) sqrt(log(2/delta) / (2n)))

    with M = W sqrt(opnorm_cov). The bracketed union term is off by
    default because the closed-form Rademacher bounds above already
    include it; enable add_union_term only when rademacher_value is a raw
    single-structure complexity.
    """
    if not 0.0 < inputs.delta < 1.0:
        raise InvalidDelta(f"delta={inputs.delta} outside (0, 1)")
    F = inputs.F if inputs.F is not None else inputs.W * stats.K_hat
    R = inputs.R if inputs.R is not None else stats.R_hat
    inner = rademacher_value
    if add_union_term:
        m_cap = inputs.W * math.sqrt(stats.opnorm_cov)
        inner += 4.0 * m_cap * math.sqrt(inputs.ell * _log_end(stats) / stats.n)
    inner += (R + 2.0 * F) * math.sqrt(math.log(2.0 / inputs.delta) / (2.0 * stats.n))
    return 4.0 * (R + F) * inner


def l1_beats_l2(stats):
    """True when the l1 data-fit term is no larger than the l2 one, the
    computable form of the trace-versus-maxnorm ratio criterion."""
    lhs = math.sqrt(2.0 * stats.mean_maxnorm_sq) * (1.0 + 4.0 * math.sqrt(math.log(stats.d)))
    return lhs <= math.sqrt(2.0 * stats.trace_cov)


def bound_report(data, inputs):
    """Evaluate the bound selected by inputs.norm_type (and s, when given)
    on a dataset and break it into named components."""
    stats = empirical_stats(data)
    if inputs.norm_type == NormType.L2:
        if inputs.s is not None:
            raise ValueError("the selection bound applies to the l1 constraint")
        rad = rademacher_bound_l2(stats, inputs)
        scale = inputs.W * math.sqrt(inputs.ell / stats.n)
        trace_term = scale * math.sqrt(2.0 * stats.trace_cov)
        selection_term = 0.0
    elif inputs.s is None:
        rad = rademacher_bound_l1(stats, inputs)
        scale = inputs.W * math.sqrt(inputs.ell) / math.sqrt(stats.n)
        trace_term = scale * math.sqrt(2.0 * stats.mean_maxnorm_sq) \
            * (1.0 + 4.0 * math.sqrt(math.log(stats.d)))
        selection_term = 0.0
    else:
        rad = rademacher_bound_varsel(stats, inputs)
        s = int(inputs.s)
        scale = math.sqrt(inputs.ell) * inputs.W / math.sqrt(stats.n)
        trace_term = scale * math.sqrt(2.0 * stats.mean_maxnorm_sq) \
            * (1.0 + 4.0 * math.sqrt(math.log(s)))
        selection_term = (16.0 * math.sqrt(s) * inputs.W / math.sqrt(stats.n)) \
            * math.sqrt(stats.opnorm_cov) * math.sqrt(math.log(stats.d * math.e / s))
    opnorm_term = inputs.W * math.sqrt(inputs.ell / stats.n) * 4.0 \
        * math.sqrt(stats.opnorm_cov) * math.sqrt(_log_end(stats))
    F = inputs.F if inputs.F is not None else inputs.W * stats.K_hat
    R = inputs.R if inputs.R is not None else stats.R_hat
    confidence_term = (R + 2.0 * F) \
        * math.sqrt(math.log(2.0 / inputs.delta) / (2.0 * stats.n))
    gap = generalization_gap_bound(stats, inputs, rad)
    try:
        ratio = ratio_r_hat(stats)
    except DegenerateData:
        ratio = None
    return BoundReport(
        stats=stats, norm_type=inputs.norm_type.value,
        W=float(inputs.W), ell=int(inputs.ell), delta=float(inputs.delta),
        s=None if inputs.s is None else int(inputs.s), F=float(F), R=float(R),
        rademacher_bound=float(rad), gap_bound=float(gap),
        trace_term=float(trace_term), opnorm_term=float(opnorm_term),
        selection_term=float(selection_term),
        confidence_term=float(confidence_term),
        ratio_r_hat=ratio, l1_below_l2=l1_beats_l2(stats),
    )


def report_to_dict(report):
    """Flatten a BoundReport for JSON output."""
    s = report.stats
    return {
        "n": s.n, "d": s.d, "D": s.D,
        "trace_cov": s.trace_cov, "opnorm_cov": s.opnorm_cov,
        "mean_maxnorm_sq": s.mean_maxnorm_sq,
        "K_hat": s.K_hat, "R_hat": s.R_hat,
        "norm_type": report.norm_type,
        "W": report.W, "ell": report.ell, "delta": report.delta,
        "s": report.s, "F": report.F, "R": report.R,
        "rademacher_bound": report.rademacher_bound,
        "gap_bound": report.gap_bound,
        "trace_term": report.trace_term,
        "opnorm_term": report.opnorm_term,
        "selection_term": report.selection_term,
        "confidence_term": report.confidence_term,
        "ratio_r_hat": report.ratio_r_hat,
        "l1_below_l2": report.l1_below_l2,
    }
