"""Config-document parsing and validation.

Configs are JSON objects with the sections ``source``, ``interferometer``,
``detector``, ``scan``, ``report`` and a top-level ``seed``.  Validation is
strict: unknown keys are errors (a silently ignored typo would corrupt a
physics parameter), and every default is materialized explicitly so the
emitted echo is itself a complete, parseable config.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

from .core import InterferometerSpec, SourceSpec
from .detector import DetectorSpec
from .runner import ScanSpec

DEFAULT_NUM_POINTS = 201
DEFAULT_SHOTS = 100_000
DEFAULT_WAVELENGTH_NM = 780.0
MAX_SEED = 2**64 - 1


class ConfigError(ValueError):
    """A config document failed to parse or validate."""


@dataclass(frozen=True)
class RunConfig:
    """Validated, fully materialized run configuration."""

    mean_photons: float | None
    photon_numbers: tuple[float, ...] | None
    visibility: float
    detector: DetectorSpec
    phi_start: float
    phi_end: float
    num_points: int
    shots_per_point: int
    wavelength_nm: float
    output_format: str
    seed: int

    def source(self) -> SourceSpec:
        if self.mean_photons is None:
            raise ConfigError("this command needs source.mean_photons")
        return SourceSpec(self.mean_photons)

    def scan_spec(self) -> ScanSpec:
        src = self.source()
        return ScanSpec(
            phi_start=self.phi_start,
            phi_end=self.phi_end,
            num_points=self.num_points,
            shots_per_point=self.shots_per_point,
            source=src,
            ifm=InterferometerSpec.from_visibility(self.visibility, src),
            detector=self.detector,
            seed=self.seed,
        )

    def sweep_base(self) -> ScanSpec:
        if self.photon_numbers is None:
            raise ConfigError("this command needs source.photon_list")
        return replace(self, mean_photons=self.photon_numbers[0]).scan_spec()

    def to_dict(self) -> dict:
        """Canonical echo; ``parse_config`` of this dict reproduces the config."""
        source: dict = {}
        if self.mean_photons is not None:
            source["mean_photons"] = self.mean_photons
        if self.photon_numbers is not None:
            source["photon_list"] = list(self.photon_numbers)
        return {
            "source": source,
            "interferometer": {"visibility": self.visibility},
            "detector": {
                "num_elements": self.detector.num_elements,
                "dark_mean": self.detector.dark_mean,
                "crosstalk_prob": self.detector.crosstalk_prob,
                "overflow_cutoff": self.detector.overflow_cutoff,
                "saturation": self.detector.saturation,
            },
            "scan": {
                "phi_start": self.phi_start,
                "phi_end": self.phi_end,
                "num_points": self.num_points,
                "shots_per_point": self.shots_per_point,
            },
            "report": {
                "wavelength_nm": self.wavelength_nm,
                "format": self.output_format,
            },
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _take(section: dict, key: str, default=None):
    return section.pop(key, default)


def _reject_unknown(section: dict, section_name: str) -> None:
    if section:
        keys = ", ".join(sorted(section))
        raise ConfigError(f"unknown key(s) in '{section_name}': {keys}")


def _number(value, field: str, minimum=None, exclusive=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{field}' must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"'{field}' must be finite, got {value!r}")
    if minimum is not None:
        if exclusive and not value > minimum:
            raise ConfigError(f"'{field}' must be > {minimum}, got {value!r}")
        if not exclusive and not value >= minimum:
            raise ConfigError(f"'{field}' must be >= {minimum}, got {value!r}")
    return value


def _integer(value, field: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"'{field}' must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"'{field}' must be >= {minimum}, got {value!r}")
    return value


def parse_config(doc) -> RunConfig:
    """Parse and validate a config document (JSON text or a dict)."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"config parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from None
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    doc = {k: (dict(v) if isinstance(v, dict) else v) for k, v in doc.items()}

    source = doc.pop("source", None)
    if not isinstance(source, dict):
        raise ConfigError("config needs a 'source' section")
    mean_photons = _take(source, "mean_photons")
    photon_list = _take(source, "photon_list")
    _reject_unknown(source, "source")
    if mean_photons is None and photon_list is None:
        raise ConfigError("'source' needs mean_photons or photon_list")
    if mean_photons is not None:
        mean_photons = _number(mean_photons, "source.mean_photons", minimum=0.0)
    photon_numbers = None
    if photon_list is not None:
        if not isinstance(photon_list, list) or not photon_list:
            raise ConfigError("'source.photon_list' must be a nonempty list")
        photon_numbers = tuple(
            _number(v, "source.photon_list", minimum=0.0, exclusive=True)
            for v in photon_list
        )
        if any(b <= a for a, b in zip(photon_numbers, photon_numbers[1:])):
            raise ConfigError("'source.photon_list' must be strictly increasing")

    ifm = doc.pop("interferometer", {})
    if not isinstance(ifm, dict):
        raise ConfigError("'interferometer' must be an object")
    visibility = _take(ifm, "visibility")
    background = _take(ifm, "background_mean")
    _reject_unknown(ifm, "interferometer")
    if visibility is not None and background is not None:
        raise ConfigError("give either 'visibility' or 'background_mean', not both")
    if background is not None:
        background = _number(background, "interferometer.background_mean", minimum=0.0)
        if mean_photons is None:
            raise ConfigError(
                "'background_mean' needs source.mean_photons; use 'visibility' "
                "with a photon_list"
            )
        if background > mean_photons:
            raise ConfigError("'background_mean' must not exceed source.mean_photons")
        visibility = InterferometerSpec(background).visibility(SourceSpec(mean_photons))
        if visibility <= 0.0:
            raise ConfigError("visibility out of range (0, 1]")
    elif visibility is None:
        visibility = 1.0
    else:
        visibility = _number(visibility, "interferometer.visibility")
        if not (0.0 < visibility <= 1.0):
            raise ConfigError(f"visibility out of range (0, 1], got {visibility!r}")

    det = doc.pop("detector", {})
    if not isinstance(det, dict):
        raise ConfigError("'detector' must be an object")
    num_elements = _integer(_take(det, "num_elements", 100),
                            "detector.num_elements", minimum=1)
    dark_mean = _number(_take(det, "dark_mean", 0.0),
                        "detector.dark_mean", minimum=0.0)
    crosstalk = _number(_take(det, "crosstalk_prob", 0.0),
                        "detector.crosstalk_prob", minimum=0.0)
    cutoff = _integer(_take(det, "overflow_cutoff", 26),
                      "detector.overflow_cutoff", minimum=1)
    saturation = _take(det, "saturation", True)
    if not isinstance(saturation, bool):
        raise ConfigError(f"'detector.saturation' must be true or false, got {saturation!r}")
    _reject_unknown(det, "detector")
    try:
        detector = DetectorSpec(
            num_elements=num_elements,
            dark_mean=dark_mean,
            crosstalk_prob=crosstalk,
            overflow_cutoff=cutoff,
            saturation=saturation,
        )
    except ValueError as exc:
        raise ConfigError(f"detector: {exc}") from None

    scan = doc.pop("scan", {})
    if not isinstance(scan, dict):
        raise ConfigError("'scan' must be an object")
    phi_start = _number(_take(scan, "phi_start", 0.0), "scan.phi_start")
    phi_end = _number(_take(scan, "phi_end", 2.0 * math.pi), "scan.phi_end")
    num_points = _integer(_take(scan, "num_points", DEFAULT_NUM_POINTS),
                          "scan.num_points", minimum=3)
    shots = _integer(_take(scan, "shots_per_point", DEFAULT_SHOTS),
                     "scan.shots_per_point", minimum=1)
    _reject_unknown(scan, "scan")
    if not phi_start < phi_end:
        raise ConfigError("'scan.phi_start' must be < 'scan.phi_end'")

    report = doc.pop("report", {})
    if not isinstance(report, dict):
        raise ConfigError("'report' must be an object")
    wavelength = _number(_take(report, "wavelength_nm", DEFAULT_WAVELENGTH_NM),
                         "report.wavelength_nm", minimum=0.0, exclusive=True)
    fmt = _take(report, "format", "csv")
    _reject_unknown(report, "report")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"'report.format' must be 'csv' or 'json', got {fmt!r}")

    seed = doc.pop("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not (0 <= seed <= MAX_SEED):
        raise ConfigError(f"'seed' must be an integer in [0, 2^64), got {seed!r}")

    if doc:
        raise ConfigError(f"unknown top-level config key(s): {', '.join(sorted(doc))}")

    return RunConfig(
        mean_photons=mean_photons,
        photon_numbers=photon_numbers,
        visibility=visibility,
        detector=detector,
        phi_start=phi_start,
        phi_end=phi_end,
        num_points=num_points,
        shots_per_point=shots,
        wavelength_nm=wavelength,
        output_format=fmt,
        seed=seed,
    )
