"""Analytic photon-statistics model of a coherent-state Mach-Zehnder scan.

A coherent pulse enters a Mach-Zehnder interferometer with relative phase
``phi`` between its arms and one output port is observed.  The detected
state is again coherent, with mean photon number

    mean(phi) = n * cos^2(phi/2) + n_b * sin^2(phi/2)

where ``n`` is the bright-fringe mean and ``n_b`` the residual background
at the dark fringe (``n_b = 0`` for a perfect interferometer).  Everything
downstream of the interferometer only ever sees Poissonian counts with
this mean, so the two observables of interest have closed forms:

    parity      <(-1)^N> = exp(-2 * mean)
    zero-photon P(N = 0) = exp(-mean)

Both peak at the dark fringe ``phi = pi`` and narrow as ``n`` grows, which
is what produces the super-resolved fringes this package simulates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import gammaln


@dataclass(frozen=True)
class SourceSpec:
    """Coherent pulse described by its maximal detected mean photon number.

    ``mean_photons`` is the bright-fringe average per pulse with all optical
    and detection losses already folded in.
    """

    mean_photons: float

    def __post_init__(self):
        if not (math.isfinite(self.mean_photons) and self.mean_photons >= 0):
            raise ValueError(
                f"mean_photons must be finite and >= 0, got {self.mean_photons!r}"
            )


@dataclass(frozen=True)
class InterferometerSpec:
    """Interferometer imperfection as the mean background at the dark fringe."""

    background_mean: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.background_mean) and self.background_mean >= 0):
            raise ValueError(
                f"background_mean must be finite and >= 0, got {self.background_mean!r}"
            )

    def visibility(self, source: SourceSpec) -> float:
        """Fringe visibility (n - n_b)/(n + n_b) for the paired source."""
        total = source.mean_photons + self.background_mean
        if total == 0.0:
            return 1.0
        return (source.mean_photons - self.background_mean) / total

    @classmethod
    def from_visibility(cls, visibility: float, source: SourceSpec) -> "InterferometerSpec":
        """Build the spec whose background realizes ``visibility`` for ``source``."""
        if not (0.0 < visibility <= 1.0):
            raise ValueError(f"visibility out of range (0, 1], got {visibility!r}")
        n_b = source.mean_photons * (1.0 - visibility) / (1.0 + visibility)
        return cls(background_mean=n_b)


class ObservableKind(Enum):
    """The two detection observables, distinguished by their decay rate beta."""

    PARITY = "parity"
    ZERO_PHOTON = "p0"

    @property
    def beta(self) -> int:
        """Exponential decay rate: value = exp(-beta * mean)."""
        return 2 if self is ObservableKind.PARITY else 1

    def spread(self, value):
        """Single-shot standard deviation of the observable at expectation ``value``.

        sqrt(1 - v^2) for parity ((-1)^N is +-1 valued), sqrt(v(1-v)) for the
        zero-photon indicator.
        """
        v = np.asarray(value, dtype=float)
        if self is ObservableKind.PARITY:
            out = np.sqrt(np.clip(1.0 - v * v, 0.0, None))
        else:
            out = np.sqrt(np.clip(v * (1.0 - v), 0.0, None))
        return float(out) if out.ndim == 0 else out


def detected_mean(source: SourceSpec, ifm: InterferometerSpec, phi) -> float:
    """Mean photon number at the observed port for interferometer phase ``phi``.

    Interpolates between the bright fringe (``mean_photons`` at phi=0) and the
    dark fringe (``background_mean`` at phi=pi); 2*pi-periodic and symmetric
    about phi=pi.
    """
    phi = np.asarray(phi, dtype=float)
    c2 = np.cos(phi / 2.0) ** 2
    out = source.mean_photons * c2 + ifm.background_mean * (1.0 - c2)
    return float(out) if out.ndim == 0 else out


def poisson_pmf(mean: float, n):
    """P(N = n) for N ~ Poisson(mean), evaluated in the log domain.

    Stable for means up to >= 1e4 and n up to >= 1e5 (underflows cleanly to
    0.0 instead of overflowing).  ``n`` may be a scalar or an integer array.
    """
    if mean < 0:
        raise ValueError(f"mean must be >= 0, got {mean!r}")
    n_arr = np.asarray(n)
    if np.any(n_arr < 0):
        raise ValueError("photon number must be >= 0")
    if mean == 0.0:
        out = np.where(n_arr == 0, 1.0, 0.0)
    else:
        out = np.exp(n_arr * math.log(mean) - mean - gammaln(n_arr + 1.0))
    return float(out) if out.ndim == 0 else out


def analytic_parity(mean):
    """Parity expectation <(-1)^N> = exp(-2*mean) of a Poisson count."""
    out = np.exp(-2.0 * np.asarray(mean, dtype=float))
    return float(out) if out.ndim == 0 else out


def analytic_p0(mean):
    """Zero-photon probability exp(-mean) of a Poisson count."""
    out = np.exp(-np.asarray(mean, dtype=float))
    return float(out) if out.ndim == 0 else out


def asymptotic_curve(kind: ObservableKind, source: SourceSpec, phi):
    """Gaussian approximation of the observable peak around phi = pi.

    exp(-n (phi-pi)^2 / 2) for parity and exp(-n (phi-pi)^2 / 4) for the
    zero-photon probability; accurate once n is large and |phi - pi| small.
    """
    delta = np.asarray(phi, dtype=float) - math.pi
    out = np.exp(-kind.beta * source.mean_photons * delta * delta / 4.0)
    return float(out) if out.ndim == 0 else out


def observable_curve(
    kind: ObservableKind,
    source: SourceSpec,
    ifm: InterferometerSpec,
    phi,
    extra_mean: float = 0.0,
):
    """Exact expected observable vs phase, exp(-beta * (mean(phi) + extra_mean)).

    ``extra_mean`` folds phase-independent spurious counts (detector dark
    events) into the detected mean.
    """
    m = np.asarray(detected_mean(source, ifm, phi)) + extra_mean
    out = np.exp(-kind.beta * m)
    return float(out) if out.ndim == 0 else out


def observable_slope(
    kind: ObservableKind,
    source: SourceSpec,
    ifm: InterferometerSpec,
    phi,
    extra_mean: float = 0.0,
):
    """Closed-form phase derivative of :func:`observable_curve`."""
    phi = np.asarray(phi, dtype=float)
    value = observable_curve(kind, source, ifm, phi, extra_mean)
    depth = source.mean_photons - ifm.background_mean
    out = kind.beta * depth * np.sin(phi) / 2.0 * value
    return float(out) if np.ndim(out) == 0 else out
