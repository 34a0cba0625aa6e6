"""Estimators and derived quantities: parity/P0 values, phase uncertainty,
1/e resolution, and the peak-height model fit.

The phase uncertainty follows the propagation-of-error rule

    dphi = spread(observable) / |d<observable>/dphi|

with spread sqrt(1 - v^2) for parity and sqrt(v(1-v)) for the zero-photon
probability.  At the dark fringe the slope vanishes; with a perfect
interferometer the spread vanishes there too and the ratio stays finite
(1/sqrt(n)), but any residual background leaves a nonzero spread over a zero
slope and the uncertainty genuinely diverges.  Divergent points are flagged,
not averaged away.

Peak heights h(n) of repeated scans at increasing photon number decay as

    h(n) = exp(-beta * (n_d + (1 - V) * n / 2))

which is exactly log-linear in n, so the (V, n_d) fit is an ordinary linear
least-squares problem in the log domain.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import ObservableKind, poisson_pmf

# Divergence marking floors for the uncertainty ratio.
SLOPE_FLOOR = 1e-12
SPREAD_FLOOR = 1e-9


class BoundarySlopeWarning(UserWarning):
    """curve_slope was asked for a boundary point; a one-sided difference was used."""


class ResolutionWindowError(ValueError):
    """The 1/e crossing of a peak lies outside the scanned window."""


@dataclass(frozen=True)
class CountHistogram:
    """Per-phase-point tally of fired-element counts with an overflow bin.

    ``counts[n]`` holds the number of shots with n fired elements for
    n < overflow_cutoff; the last bin, ``counts[overflow_cutoff]``, tallies
    every shot at or above the cutoff (a saturating readout reports them as
    the cutoff value).
    """

    counts: np.ndarray
    total_shots: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if counts.ndim != 1 or counts.size < 2:
            raise ValueError("counts must be a 1-d array with at least two bins")
        if np.any(counts < 0):
            raise ValueError("histogram counts must be >= 0")
        if self.total_shots < 1:
            raise ValueError("total_shots must be >= 1 (empty histogram rejected)")
        if int(counts.sum()) != self.total_shots:
            raise ValueError(
                f"histogram counts sum to {int(counts.sum())}, expected {self.total_shots}"
            )

    @property
    def overflow_cutoff(self) -> int:
        return self.counts.size - 1

    @classmethod
    def from_outcomes(cls, fired, overflow_cutoff: int) -> "CountHistogram":
        """Tally fired-element counts, clipping to the overflow bin."""
        fired = np.asarray(fired, dtype=np.int64)
        clipped = np.minimum(fired, overflow_cutoff)
        counts = np.bincount(clipped, minlength=overflow_cutoff + 1)
        return cls(counts=counts, total_shots=int(fired.size))

    def __add__(self, other: "CountHistogram") -> "CountHistogram":
        if self.overflow_cutoff != other.overflow_cutoff:
            raise ValueError("cannot merge histograms with different cutoffs")
        return CountHistogram(
            counts=self.counts + other.counts,
            total_shots=self.total_shots + other.total_shots,
        )


@dataclass(frozen=True)
class ObservableEstimate:
    """A measured observable value with its standard error."""

    value: float
    std_error: float
    kind: ObservableKind

    def __post_init__(self):
        lo = -1.0 if self.kind is ObservableKind.PARITY else 0.0
        if not (lo <= self.value <= 1.0):
            raise ValueError(f"{self.kind.value} estimate out of range: {self.value!r}")
        if not (0.0 <= self.std_error <= 1.0):
            raise ValueError(f"std_error out of range: {self.std_error!r}")


@dataclass(frozen=True)
class UncertaintyResult:
    """Phase uncertainty at one scan point; ``divergent`` marks a zero-slope
    point with nonzero spread (infinite uncertainty)."""

    delta_phi: float
    divergent: bool
    phi: float = math.nan


@dataclass(frozen=True)
class PeakHeightSeries:
    """Peak heights vs photon number for one observable."""

    mean_photons: np.ndarray
    heights: np.ndarray
    kind: ObservableKind

    def __post_init__(self):
        n = np.asarray(self.mean_photons, dtype=float)
        h = np.asarray(self.heights, dtype=float)
        object.__setattr__(self, "mean_photons", n)
        object.__setattr__(self, "heights", h)
        if n.shape != h.shape or n.ndim != 1:
            raise ValueError("mean_photons and heights must be matching 1-d arrays")
        if np.any(np.diff(n) <= 0):
            raise ValueError("mean_photons must be strictly increasing")
        if np.any(h <= 0) or np.any(h > 1):
            raise ValueError("heights must lie in (0, 1]")


@dataclass(frozen=True)
class PeakHeightFit:
    """Result of the log-linear peak-height fit."""

    visibility: float
    dark_mean: float
    residual_norm: float
    kind: ObservableKind


def parity_estimate(hist: CountHistogram) -> ObservableEstimate:
    """Parity estimate sum_n (-1)^n counts[n] / total from a clipped histogram.

    The overflow bin contributes with sign (-1)^overflow_cutoff.  The standard
    error is the single-shot spread sqrt(1 - v^2) over sqrt(total_shots).
    """
    signs = np.where(np.arange(hist.counts.size) % 2 == 0, 1.0, -1.0)
    value = float(signs @ hist.counts) / hist.total_shots
    spread = ObservableKind.PARITY.spread(value)
    return ObservableEstimate(
        value=value,
        std_error=spread / math.sqrt(hist.total_shots),
        kind=ObservableKind.PARITY,
    )


def p0_estimate(hist: CountHistogram) -> ObservableEstimate:
    """Zero-photon probability estimate counts[0] / total (binomial error)."""
    value = float(hist.counts[0]) / hist.total_shots
    spread = ObservableKind.ZERO_PHOTON.spread(value)
    return ObservableEstimate(
        value=value,
        std_error=spread / math.sqrt(hist.total_shots),
        kind=ObservableKind.ZERO_PHOTON,
    )


def truncated_parity(mean: float, overflow_cutoff: int) -> float:
    """Expected parity of the clipped readout min(N, cutoff), N ~ Poisson(mean).

    This is what :func:`parity_estimate` converges to when the detector
    histogram lumps every count >= cutoff into the overflow bin.
    """
    n = np.arange(overflow_cutoff)
    pmf = np.asarray(poisson_pmf(mean, n))
    signs = np.where(n % 2 == 0, 1.0, -1.0)
    tail = max(0.0, 1.0 - float(pmf.sum()))
    return float(signs @ pmf) + (-1.0) ** overflow_cutoff * tail


def curve_slope(phis, values, at: float) -> float:
    """Finite-difference slope of a uniformly sampled curve at grid point ``at``.

    Central difference (v[i+1] - v[i-1]) / (2 dphi) at interior points; at a
    boundary point a one-sided difference is returned and a
    :class:`BoundarySlopeWarning` is emitted.
    """
    phis = np.asarray(phis, dtype=float)
    values = np.asarray(values, dtype=float)
    if phis.size < 3:
        raise ValueError("need at least 3 grid points")
    steps = np.diff(phis)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
        raise ValueError("phi grid must be uniform")
    idx = int(np.argmin(np.abs(phis - at)))
    if not math.isclose(phis[idx], at, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f"{at!r} is not a grid point")
    h = float(steps[0])
    if idx == 0:
        warnings.warn("slope at scan boundary uses a one-sided difference",
                      BoundarySlopeWarning, stacklevel=2)
        return float(values[1] - values[0]) / h
    if idx == phis.size - 1:
        warnings.warn("slope at scan boundary uses a one-sided difference",
                      BoundarySlopeWarning, stacklevel=2)
        return float(values[-1] - values[-2]) / h
    return float(values[idx + 1] - values[idx - 1]) / (2.0 * h)


def phase_uncertainty(
    est: ObservableEstimate,
    slope: float,
    phi: float = math.nan,
    zero_limit: float = math.nan,
) -> UncertaintyResult:
    """Single-shot phase uncertainty spread(est) / |slope| at one scan point.

    When the slope vanishes (below :data:`SLOPE_FLOOR`) with nonzero spread
    the result is flagged divergent.  When spread and slope vanish together
    (perfect visibility at the exact peak) the 0/0 limit is finite;
    ``zero_limit`` supplies that value (1/sqrt(n) for both observables).
    """
    spread = est.kind.spread(est.value)
    if abs(slope) < SLOPE_FLOOR:
        if spread > SPREAD_FLOOR:
            return UncertaintyResult(delta_phi=math.inf, divergent=True, phi=phi)
        return UncertaintyResult(delta_phi=zero_limit, divergent=False, phi=phi)
    return UncertaintyResult(delta_phi=spread / abs(slope), divergent=False, phi=phi)


def uncertainty_asymptote(kind: ObservableKind, mean_photons: float, phi: float) -> float:
    """Small-offset expansion of the phase uncertainty near the dark fringe.

    (1/sqrt(n)) * (1 + (2n+1) (phi-pi)^2 / 8) for parity and
    (1/sqrt(n)) * (1 + (n/2+1) (phi-pi)^2 / 8) for the zero-photon observable.
    """
    if mean_photons <= 0:
        raise ValueError("mean_photons must be > 0")
    delta2 = (phi - math.pi) ** 2
    if kind is ObservableKind.PARITY:
        factor = 1.0 + (2.0 * mean_photons + 1.0) * delta2 / 8.0
    else:
        factor = 1.0 + (mean_photons / 2.0 + 1.0) * delta2 / 8.0
    return factor / math.sqrt(mean_photons)


def uncertainty_curve(phis, values, kind: ObservableKind, zero_limit: float = math.nan):
    """Vectorized phase uncertainty along a sampled curve.

    Slopes come from central differences (one-sided at the two boundary
    points).  Returns ``(delta_phi, divergent)`` arrays; divergent entries
    hold inf.
    """
    phis = np.asarray(phis, dtype=float)
    values = np.asarray(values, dtype=float)
    slopes = np.gradient(values, phis)
    spread = kind.spread(values)
    delta = np.full(values.shape, math.nan)
    divergent = np.zeros(values.shape, dtype=bool)
    flat = np.abs(slopes) < SLOPE_FLOOR
    divergent[flat & (spread > SPREAD_FLOOR)] = True
    delta[divergent] = math.inf
    limit = flat & ~divergent
    delta[limit] = zero_limit
    ok = ~flat
    delta[ok] = spread[ok] / np.abs(slopes[ok])
    return delta, divergent


def resolution_1e(phis, values) -> float:
    """Half width of a peaked curve at 1/e of its maximum.

    Linear interpolation between the bracketing grid points on each side of
    the peak, averaged over both sides.  Raises
    :class:`ResolutionWindowError` when either crossing lies outside the
    scanned window.
    """
    phis = np.asarray(phis, dtype=float)
    values = np.asarray(values, dtype=float)
    if phis.size < 3:
        raise ValueError("need at least 3 grid points")
    peak = int(np.argmax(values))
    threshold = values[peak] / math.e

    def crossing(indices) -> float:
        run = values[indices]
        below = np.nonzero(run < threshold)[0]
        if below.size == 0:
            raise ResolutionWindowError(
                "1/e crossing lies outside the scanned phase window"
            )
        b = below[0]
        if b == 0:
            raise ResolutionWindowError("peak sits at the scan boundary")
        i_hi, i_lo = indices[b - 1], indices[b]
        # linear interpolation between the bracketing points
        frac = (values[i_hi] - threshold) / (values[i_hi] - values[i_lo])
        return abs(phis[i_hi] - phis[peak]) + frac * abs(phis[i_lo] - phis[i_hi])

    right = crossing(np.arange(peak, phis.size))
    left = crossing(np.arange(peak, -1, -1))
    return 0.5 * (left + right)


def fit_peak_heights(series: PeakHeightSeries) -> PeakHeightFit:
    """Recover (visibility, dark_mean) from peak heights vs photon number.

    Ordinary least squares on ln h vs n: the model is exactly log-linear with
    slope -beta (1-V)/2 and intercept -beta n_d, where beta = 2 for parity
    and 1 for the zero-photon observable.

    Args:
        series: strictly increasing photon numbers with peak heights in (0, 1].

    Returns:
        PeakHeightFit with the recovered parameters and the 2-norm of the
        log-domain residuals.
    """
    n = series.mean_photons
    if n.size < 2:
        raise ValueError("need at least 2 points to fit")
    log_h = np.log(series.heights)
    slope, intercept = np.polyfit(n, log_h, 1)
    beta = series.kind.beta
    residual = float(np.linalg.norm(log_h - (slope * n + intercept)))
    return PeakHeightFit(
        visibility=1.0 + 2.0 * slope / beta,
        dark_mean=-intercept / beta,
        residual_norm=residual,
        kind=series.kind,
    )
