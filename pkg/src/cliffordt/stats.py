"""Histograms, random-matrix targets, distances, moments and decay fits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class Histogram:
    """Equal-width histogram on [lo, hi] with underflow/overflow bins.

    Counts are accumulated as floats so that weighted fills and merges are
    exact sums; masses are counts divided by the total weight. ``v == hi``
    lands in the last bin, ``v < lo`` (including ``-inf``) in underflow and
    ``v > hi`` in overflow.
    """

    def __init__(self, lo: float, hi: float, bins: int):
        if not lo < hi:
            raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
        if bins < 2:
            raise ValueError(f"need at least 2 bins, got {bins}")
        self.lo = float(lo)
        self.hi = float(hi)
        self.bins = int(bins)
        self.counts = np.zeros(self.bins)
        self.underflow = 0.0
        self.overflow = 0.0
        self.total_count = 0.0

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.bins

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.bins + 1)

    def add(self, values, weight: float = 1.0) -> "Histogram":
        v = np.asarray(values, dtype=float).ravel()
        if np.isnan(v).any():
            raise ValueError("cannot bin NaN values")
        under = v < self.lo
        over = v > self.hi
        inside = v[~(under | over)]
        idx = np.floor((inside - self.lo) * self.bins / (self.hi - self.lo)).astype(np.int64)
        np.clip(idx, 0, self.bins - 1, out=idx)
        self.counts += weight * np.bincount(idx, minlength=self.bins)
        self.underflow += weight * np.count_nonzero(under)
        self.overflow += weight * np.count_nonzero(over)
        self.total_count += weight * v.size
        return self

    def merge(self, other: "Histogram") -> "Histogram":
        if (self.lo, self.hi, self.bins) != (other.lo, other.hi, other.bins):
            raise ValueError("cannot merge histograms with different binning")
        out = Histogram(self.lo, self.hi, self.bins)
        out.counts = self.counts + other.counts
        out.underflow = self.underflow + other.underflow
        out.overflow = self.overflow + other.overflow
        out.total_count = self.total_count + other.total_count
        return out

    __add__ = merge

    def _norm(self) -> float:
        if self.total_count <= 0:
            raise ValueError("histogram is empty")
        return self.total_count

    @property
    def masses(self) -> np.ndarray:
        return self.counts / self._norm()

    @property
    def underflow_mass(self) -> float:
        return self.underflow / self._norm()

    @property
    def overflow_mass(self) -> float:
        return self.overflow / self._norm()


def histogram_build(values, lo: float, hi: float, bins: int) -> Histogram:
    return Histogram(lo, hi, bins).add(values)


class TargetMasses(NamedTuple):
    masses: np.ndarray
    underflow: float = 0.0
    overflow: float = 0.0

    @property
    def total(self) -> float:
        return math.fsum(self.masses) + self.underflow + self.overflow


def target_uniform_mass(bins: int) -> TargetMasses:
    if bins < 2:
        raise ValueError(f"need at least 2 bins, got {bins}")
    return TargetMasses(np.full(bins, 1.0 / bins))


def cue_l_survival(l, N: int) -> np.ndarray:
    """``1 - F(l) = (1 - e^l / N)^(N-1)`` for the CUE element variable l."""
    l = np.asarray(l, dtype=float)
    x = np.minimum(np.exp(l) / N, 1.0)
    with np.errstate(divide="ignore"):
        return np.exp((N - 1) * np.log1p(-x))


def cue_l_cdf(l, N: int) -> np.ndarray:
    l = np.asarray(l, dtype=float)
    x = np.minimum(np.exp(l) / N, 1.0)
    with np.errstate(divide="ignore"):
        return -np.expm1((N - 1) * np.log1p(-x))


def cue_l_density(l, N: int) -> np.ndarray:
    """CUE density of ``l = ln(N |U_ij|^2)`` for Hilbert dimension N."""
    e = np.exp(np.asarray(l, dtype=float))
    return (N - 1) / N * e * np.clip(1 - e / N, 0.0, None) ** (N - 2)


def target_cue_l_mass(N: int, lo: float, hi: float, bins: int) -> TargetMasses:
    """Exact per-bin CUE probabilities for l on [lo, hi] plus the tails."""
    if N < 2:
        raise ValueError(f"need N >= 2, got {N}")
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    if hi > math.log(N) + 1e-12:
        raise ValueError(f"hi={hi} lies above the support edge ln N = {math.log(N)}")
    edges = np.linspace(lo, hi, bins + 1)
    surv = cue_l_survival(edges, N)
    masses = surv[:-1] - surv[1:]
    return TargetMasses(masses, float(cue_l_cdf(lo, N)), float(surv[-1]))


def distance(hist: Histogram, target: TargetMasses) -> float:
    """Sum of squared mass differences over all bins, tails included."""
    target_masses = np.asarray(target.masses, dtype=float)
    if target_masses.shape != (hist.bins,):
        raise ValueError(f"target has {target_masses.size} bins, histogram has {hist.bins}")
    d = np.sum((hist.masses - target_masses) ** 2)
    d += (hist.underflow_mass - target.underflow) ** 2
    d += (hist.overflow_mass - target.overflow) ** 2
    return float(d)


def moment_cue(k: int, N: int) -> float:
    """CUE moment ``k! N^k (N-1)! / (N+k-1)!`` evaluated in log space."""
    if k < 1 or N < 2:
        raise ValueError(f"need k >= 1 and N >= 2, got k={k}, N={N}")
    return math.exp(math.fsum(math.log((j + 1) * N / (N + j)) for j in range(k)))


def moment_empirical(k: int, abs2, N: int) -> float:
    """``N^k <|U_ij|^(2k)>`` over all supplied squared magnitudes."""
    a = np.asarray(abs2, dtype=float)
    if a.size == 0:
        raise ValueError("no matrix elements supplied")
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    return float(np.mean((N * a) ** k))


def moment_deviation(k: int, empirical: float, cue: float) -> float:
    if cue <= 0:
        raise ValueError("CUE moment must be positive")
    return abs(cue - empirical) / cue


@dataclass(frozen=True)
class MomentReport:
    k: int
    mu_empirical: float
    mu_cue: float
    deviation: float

    @classmethod
    def from_values(cls, k: int, empirical: float, cue: float) -> "MomentReport":
        return cls(k, empirical, cue, moment_deviation(k, empirical, cue))


class MomentAccumulator:
    """Streaming ``N^k <|U_ij|^(2k)>`` for several orders k.

    Each :meth:`add` call takes a (batch, N*N) array of l-values, one row per
    matrix; per-matrix means are kept so that standard errors can be
    estimated by batch means.
    """

    def __init__(self, N: int, orders=(1, 2, 4, 8)):
        self.N = N
        self.orders = tuple(orders)
        self.per_matrix: dict[int, list[np.ndarray]] = {k: [] for k in self.orders}

    def add(self, l: np.ndarray) -> None:
        l = np.atleast_2d(l)
        x = np.exp(l)  # N |U_ij|^2; -inf -> 0
        for k in self.orders:
            self.per_matrix[k].append(np.mean(x**k, axis=1))

    def values(self, k: int) -> np.ndarray:
        return np.concatenate(self.per_matrix[k])

    def empirical(self, k: int) -> float:
        return float(np.mean(self.values(k)))

    def report(self, k: int) -> MomentReport:
        return MomentReport.from_values(k, self.empirical(k), moment_cue(k, self.N))

    def standard_error(self, k: int, n_batches: int = 10) -> float:
        return batch_means_standard_error(self.values(k), n_batches)


def batch_means_standard_error(samples, n_batches: int = 10) -> float:
    """Standard error of the mean from ``n_batches`` contiguous batch means."""
    x = np.asarray(samples, dtype=float)
    n_batches = min(n_batches, x.size)
    if n_batches < 2:
        raise ValueError("need at least 2 samples for a batch-means error")
    usable = x[: x.size - x.size % n_batches]
    means = usable.reshape(n_batches, -1).mean(axis=1)
    return float(np.std(means, ddof=1) / math.sqrt(n_batches))


@dataclass
class DistanceSeries:
    label: str
    t: list[int] = field(default_factory=list)
    values: list[float] = field(default_factory=list)

    def append(self, t: int, value: float) -> None:
        if self.t and t <= self.t[-1]:
            raise ValueError(f"time steps must increase: {t} after {self.t[-1]}")
        if not value >= 0:
            raise ValueError(f"distance must be non-negative, got {value}")
        self.t.append(int(t))
        self.values.append(float(value))

    def value_at(self, t: int) -> float:
        return self.values[self.t.index(t)]

    def __len__(self) -> int:
        return len(self.t)


MODELS = ("exponential", "gaussian")


@dataclass(frozen=True)
class FitResult:
    """``ln D = a - rate * t`` (exponential) or ``ln D = a - rate * t^2`` (gaussian)."""

    model: str
    a: float
    rate: float
    window: tuple[int, int]
    residual_sum_squares: float
    n_points: int

    def predict(self, t) -> np.ndarray:
        x = np.asarray(t, dtype=float)
        if self.model == "gaussian":
            x = x**2
        return np.exp(self.a - self.rate * x)


def fit_convergence(series: DistanceSeries, model: str = "exponential", window=None) -> FitResult:
    """Least-squares fit of ln D against t or t^2 inside an inclusive window."""
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; choose from {MODELS}")
    t = np.asarray(series.t, dtype=float)
    d = np.asarray(series.values, dtype=float)
    if window is None:
        window = (int(t.min()), int(t.max()))
    t0, t1 = window
    keep = (t >= t0) & (t <= t1) & (d > 0)
    if np.count_nonzero(keep) < 3:
        raise ValueError(f"need >= 3 positive points in window {window}, got {np.count_nonzero(keep)}")
    x = t[keep] if model == "exponential" else t[keep] ** 2
    y = np.log(d[keep])
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return FitResult(
        model=model,
        a=float(coef[0]),
        rate=float(-coef[1]),
        window=(int(t0), int(t1)),
        residual_sum_squares=float(resid @ resid),
        n_points=int(np.count_nonzero(keep)),
    )
