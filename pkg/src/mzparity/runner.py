"""Phase scans and photon-number sweeps.

A scan runs ``shots_per_point`` detector shots at every grid phase and
reduces each point's histogram to parity and zero-photon estimates.  Every
grid point draws from its own random stream, ``rng_stream(seed, point
index)``, and whole points are the unit of parallel work, so results are
bitwise identical for a fixed seed regardless of worker count or
scheduling.  A sweep repeats the scan for a list of photon numbers at fixed
visibility, auto-refining the grid around the dark fringe, and extracts the
peak heights, 1/e resolutions, and smallest finite phase uncertainties that
summarize each scan.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    InterferometerSpec,
    ObservableKind,
    SourceSpec,
    detected_mean,
    observable_curve,
)
from .detector import DetectorSpec, detect, rng_stream
from .estimation import (
    SPREAD_FLOOR,
    CountHistogram,
    p0_estimate,
    parity_estimate,
    resolution_1e,
    uncertainty_curve,
)

# Auto-refined sweep grids: half-window in units of the expected parity
# width sqrt(2/n), and the minimum number of grid points (kept odd so the
# dark fringe itself is a grid point).
SWEEP_WINDOW_WIDTHS = 5.0
SWEEP_MIN_POINTS = 201


@dataclass(frozen=True)
class ScanSpec:
    """Full description of one phase scan."""

    phi_start: float
    phi_end: float
    num_points: int
    shots_per_point: int
    source: SourceSpec
    ifm: InterferometerSpec
    detector: DetectorSpec
    seed: int

    def __post_init__(self):
        if self.num_points < 3:
            raise ValueError(f"num_points must be >= 3, got {self.num_points!r}")
        if not self.phi_start < self.phi_end:
            raise ValueError("phi_start must be < phi_end")
        if self.shots_per_point < 1:
            raise ValueError(f"shots_per_point must be >= 1, got {self.shots_per_point!r}")

    @property
    def phis(self) -> np.ndarray:
        return np.linspace(self.phi_start, self.phi_end, self.num_points)


@dataclass(frozen=True)
class ScanResult:
    """Per-phase-point estimates of one scan, column oriented."""

    spec: ScanSpec
    phis: np.ndarray
    mean_detected: np.ndarray
    histograms: list[CountHistogram]
    parity_value: np.ndarray
    parity_err: np.ndarray
    p0_value: np.ndarray
    p0_err: np.ndarray
    parity_analytic: np.ndarray
    p0_analytic: np.ndarray


@dataclass(frozen=True)
class SweepResult:
    """Per-photon-number summary of repeated scans, column oriented."""

    photon_numbers: np.ndarray
    parity_height: np.ndarray
    parity_height_err: np.ndarray
    p0_height: np.ndarray
    p0_height_err: np.ndarray
    parity_width: np.ndarray
    p0_width: np.ndarray
    parity_min_dphi: np.ndarray
    p0_min_dphi: np.ndarray
    snl_dphi: np.ndarray
    scans: list[ScanResult]


def snl_reference(mean_photons: float) -> float:
    """Shot-noise-limited phase uncertainty 1/sqrt(n)."""
    if mean_photons <= 0:
        raise ValueError(f"mean_photons must be > 0, got {mean_photons!r}")
    return 1.0 / math.sqrt(mean_photons)


def _scan_point(spec: ScanSpec, index: int, phi: float) -> CountHistogram:
    rng = rng_stream(spec.seed, index)
    fired = detect(spec.source, spec.ifm, phi, spec.detector, rng,
                   size=spec.shots_per_point)
    return CountHistogram.from_outcomes(fired, spec.detector.overflow_cutoff)


def run_scan(spec: ScanSpec, max_workers: int = 1) -> ScanResult:
    """Monte Carlo phase scan; deterministic for a fixed seed.

    Each grid point uses the random stream (seed, point index) and is
    simulated in one vectorized pass, so any degree of point-level
    parallelism reproduces the single-threaded result exactly.
    """
    phis = spec.phis
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            histograms = list(
                pool.map(_scan_point, [spec] * len(phis), range(len(phis)), phis)
            )
    else:
        histograms = [_scan_point(spec, i, p) for i, p in enumerate(phis)]

    parity = [parity_estimate(h) for h in histograms]
    p0 = [p0_estimate(h) for h in histograms]
    dark = spec.detector.dark_mean
    return ScanResult(
        spec=spec,
        phis=phis,
        mean_detected=np.asarray(detected_mean(spec.source, spec.ifm, phis)),
        histograms=histograms,
        parity_value=np.array([e.value for e in parity]),
        parity_err=np.array([e.std_error for e in parity]),
        p0_value=np.array([e.value for e in p0]),
        p0_err=np.array([e.std_error for e in p0]),
        parity_analytic=np.asarray(
            observable_curve(ObservableKind.PARITY, spec.source, spec.ifm, phis, dark)
        ),
        p0_analytic=np.asarray(
            observable_curve(ObservableKind.ZERO_PHOTON, spec.source, spec.ifm, phis, dark)
        ),
    )


def min_finite_uncertainty(phis, values, kind: ObservableKind, zero_limit=math.nan) -> float:
    """Smallest finite phase uncertainty along a sampled curve.

    Divergent points are excluded, as are points whose estimated spread is
    below the floor: an observed value saturated at the range boundary
    carries no single-shot spread information.
    """
    delta, divergent = uncertainty_curve(phis, values, kind, zero_limit)
    usable = ~divergent & np.isfinite(delta) & (kind.spread(values) >= SPREAD_FLOOR)
    if not np.any(usable):
        raise ValueError("no usable grid point for uncertainty extraction")
    return float(np.min(delta[usable]))


def sweep_scan_spec(base: ScanSpec, mean_photons: float, row_index: int) -> ScanSpec:
    """Auto-refined scan spec for one sweep row.

    The grid covers pi +- 5 sqrt(2/n) with at least 201 points (odd count so
    phi = pi is on the grid), the interferometer background is rederived from
    the base visibility, and the seed is offset by the row index so rows use
    independent streams.
    """
    if mean_photons <= 0:
        raise ValueError(f"sweep photon numbers must be > 0, got {mean_photons!r}")
    width = math.sqrt(2.0 / mean_photons)
    half_window = SWEEP_WINDOW_WIDTHS * width
    num_points = max(SWEEP_MIN_POINTS, base.num_points)
    if num_points % 2 == 0:
        num_points += 1
    source = SourceSpec(mean_photons)
    visibility = base.ifm.visibility(base.source)
    return replace(
        base,
        phi_start=math.pi - half_window,
        phi_end=math.pi + half_window,
        num_points=num_points,
        source=source,
        ifm=InterferometerSpec.from_visibility(visibility, source),
        seed=base.seed + row_index,
    )


def run_sweep(base: ScanSpec, photon_numbers, max_workers: int = 1) -> SweepResult:
    """Scan once per photon number and summarize each scan.

    ``photon_numbers`` must be strictly increasing and positive.  Visibility
    is held fixed across rows (the background scales with the source).
    """
    nbars = np.asarray(photon_numbers, dtype=float)
    if nbars.size == 0:
        raise ValueError("photon_numbers must be nonempty")
    if np.any(nbars <= 0):
        raise ValueError("photon_numbers must be > 0")
    if np.any(np.diff(nbars) <= 0):
        raise ValueError("photon_numbers must be strictly increasing")

    scans = [
        run_scan(sweep_scan_spec(base, nbar, row), max_workers=max_workers)
        for row, nbar in enumerate(nbars)
    ]

    cols: dict[str, list[float]] = {k: [] for k in (
        "parity_height", "parity_height_err", "p0_height", "p0_height_err",
        "parity_width", "p0_width", "parity_min_dphi", "p0_min_dphi",
    )}
    for nbar, scan in zip(nbars, scans):
        center = scan.phis.size // 2
        snl = snl_reference(nbar)
        cols["parity_height"].append(scan.parity_value[center])
        cols["parity_height_err"].append(scan.parity_err[center])
        cols["p0_height"].append(scan.p0_value[center])
        cols["p0_height_err"].append(scan.p0_err[center])
        cols["parity_width"].append(resolution_1e(scan.phis, scan.parity_value))
        cols["p0_width"].append(resolution_1e(scan.phis, scan.p0_value))
        cols["parity_min_dphi"].append(
            min_finite_uncertainty(scan.phis, scan.parity_value,
                                   ObservableKind.PARITY, zero_limit=snl)
        )
        cols["p0_min_dphi"].append(
            min_finite_uncertainty(scan.phis, scan.p0_value,
                                   ObservableKind.ZERO_PHOTON, zero_limit=snl)
        )

    return SweepResult(
        photon_numbers=nbars,
        snl_dphi=np.array([snl_reference(n) for n in nbars]),
        scans=scans,
        **{k: np.array(v) for k, v in cols.items()},
    )
