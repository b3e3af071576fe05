# fwmpairs/settings.py
"""Config files: ``key = value`` lines with dotted sections and units in the key names."""
from __future__ import annotations

import hashlib
import logging
import math
import os
import re
from dataclasses import dataclass, replace
from typing import Any, Iterable, Mapping, Optional

from . import config as C
from .dispersion import DispersionModel, FiberSpec, PumpSpec, conjugate_wavelength
from .errors import ConfigError, DomainError
from .pairgen import (
    CollectionSpec,
    DetectionSpec,
    SourceModel,
    SourceReference,
    collection_modes,
    pair_mode_count,
)

log = logging.getLogger(__name__)

_NUMBER_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$|^[+-]?inf$", re.IGNORECASE)


@dataclass(frozen=True)
class KeySpec:
    kind: str                 # "float", "floats", "int" or "choice"
    default: Any = None
    choices: tuple = ()


def _section(prefix: str, defaults: Mapping[str, Any]) -> dict[str, KeySpec]:
    return {f"{prefix}.{name}": KeySpec("float", value) for name, value in defaults.items()}


KEYS: dict[str, KeySpec] = {
    **_section("fiber", C.REFERENCE_FIBER),
    **_section("pump", C.REFERENCE_PUMP),
    "collection.signal_wavelength_nm": KeySpec("float", C.REFERENCE_COLLECTION["signal_wavelength_nm"]),
    "collection.idler_wavelength_nm": KeySpec("float"),
    "collection.bandwidth_nm": KeySpec("float", C.REFERENCE_COLLECTION["bandwidth_nm"]),
    "collection.pump_envelope_bandwidth_nm": KeySpec("float"),
    "collection.passband": KeySpec("choice", "gaussian", C.PASSBANDS),
    **_section("detection", C.REFERENCE_DETECTION),
    "dispersion.reference_wavelength_nm": KeySpec("float"),
    "dispersion.beta2_ps2_per_km": KeySpec("float"),
    "dispersion.beta3_ps3_per_km": KeySpec("float"),
    "dispersion.beta4_ps4_per_km": KeySpec("float"),
    "source.kappa": KeySpec("float"),
    "source.raman_signal_per_W": KeySpec("float"),
    "source.raman_idler_per_W": KeySpec("float"),
    "source.modes_signal": KeySpec("float"),
    "source.modes_idler": KeySpec("float"),
    "source.pair_modes": KeySpec("float"),
    "source.pair_bandwidth_arm": KeySpec("choice", "idler", C.PAIR_BANDWIDTH_ARMS),
    **_section("calibration", C.REFERENCE_CALIBRATION),
    "sweep.powers_mW": KeySpec("floats", C.DEFAULT_POWERS_MW),
    "scan.offsets_nm": KeySpec("floats", C.DEFAULT_OFFSETS_NM),
    "scan.power_mW": KeySpec("float", C.DEFAULT_SCAN_POWER_MW),
    "integration.short_s": KeySpec("float", C.SHORT_INTEGRATION_S),
    "integration.long_s": KeySpec("float", C.LONG_INTEGRATION_S),
    "integration.threshold_mW": KeySpec("float", C.INTEGRATION_THRESHOLD_MW),
    "integration.fixed_s": KeySpec("float"),
    "run.seed": KeySpec("int", C.DEFAULT_SEED),
    "run.batch_pulses": KeySpec("int", C.DEFAULT_BATCH_PULSES),
    "run.workers": KeySpec("int", C.DEFAULT_WORKERS),
}

DISPERSION_KEYS = [k for k in KEYS if k.startswith("dispersion.")]
SOURCE_FIELDS = {
    "source.kappa": "kappa",
    "source.raman_signal_per_W": "c_raman_s",
    "source.raman_idler_per_W": "c_raman_i",
    "source.modes_signal": "modes_s",
    "source.modes_idler": "modes_i",
    "source.pair_modes": "pair_modes",
}


# -----------------------------
# Text handling
# -----------------------------
def load_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8-sig") as fh:
            return fh.read()
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except UnicodeError as exc:
        raise ConfigError(f"config file is not UTF-8: {path}") from exc


def ensure_dir(path: str) -> None:
    os.makedirs(path, exist_ok=True)


def _coerce_number(key: str, text: str) -> float:
    text = text.strip()
    if not _NUMBER_RE.match(text):
        raise ConfigError(f"{key}: expected a number, got {text!r}")
    return float(text)


def coerce_value(key: str, text: str) -> Any:
    spec = KEYS.get(key)
    if spec is None:
        raise ConfigError(f"unknown config key {key!r}")
    text = text.strip()
    if spec.kind == "float":
        return _coerce_number(key, text)
    if spec.kind == "floats":
        items = [t for t in text.split(",") if t.strip()]
        if not items:
            raise ConfigError(f"{key}: expected a comma-separated list of numbers")
        return [_coerce_number(key, t) for t in items]
    if spec.kind == "int":
        try:
            return int(text)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected an integer, got {text!r}") from exc
    if text not in spec.choices:
        raise ConfigError(f"{key}: expected one of {spec.choices}, got {text!r}")
    return text


def _split_line(line: str, where: str) -> tuple[str, str]:
    if "=" not in line:
        raise ConfigError(f"{where}: expected 'key = value', got {line!r}")
    key, value = line.split("=", 1)
    return key.strip(), value


def parse_text(text: str, origin: str = "<config>") -> dict[str, Any]:
    entries: dict[str, Any] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, value = _split_line(line, f"{origin}:{number}")
        if key in entries:
            raise ConfigError(f"{origin}:{number}: duplicate key {key!r}")
        entries[key] = coerce_value(key, value)
    return entries


def apply_overrides(entries: Mapping[str, Any], overrides: Iterable[str]) -> dict[str, Any]:
    updated = dict(entries)
    for item in overrides:
        key, value = _split_line(item, "--set")
        updated[key] = coerce_value(key, value)
    return updated


def format_value(value: Any) -> str:
    if isinstance(value, list):
        return ", ".join(format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


# -----------------------------
# Typed view
# -----------------------------
@dataclass(frozen=True)
class IntegrationPolicy:
    short_s: float
    long_s: float
    threshold: float
    fixed_s: Optional[float] = None

    def seconds_for(self, power: float) -> float:
        if self.fixed_s is not None:
            return self.fixed_s
        return self.short_s if power >= self.threshold else self.long_s


@dataclass(frozen=True)
class DispersionTargets:
    matched_signal: float
    walkoff: float
    power: float


@dataclass(frozen=True)
class ExperimentConfig:
    """Explicit entries in key units plus the typed specs built from them."""

    entries: Mapping[str, Any]
    overrides: tuple[str, ...] = ()
    origin: Optional[str] = None

    @classmethod
    def from_text(cls, text: str, overrides: Iterable[str] = (), origin: str = "<config>") -> "ExperimentConfig":
        overrides = tuple(overrides)
        entries = apply_overrides(parse_text(text, origin), overrides)
        config = cls(entries=entries, overrides=overrides, origin=origin)
        log.debug("%s: %d explicit key(s), %d override(s)", origin, len(entries), len(overrides))
        config.validate()
        return config

    @classmethod
    def load(cls, path: str, overrides: Iterable[str] = ()) -> "ExperimentConfig":
        return cls.from_text(load_text(path), overrides, origin=path)

    @classmethod
    def defaults(cls, **updates: Any) -> "ExperimentConfig":
        """The reference operating point; ``updates`` use key names with dots replaced by '__'."""
        entries = {key.replace("__", "."): value for key, value in updates.items()}
        for key in entries:
            if key not in KEYS:
                raise ConfigError(f"unknown config key {key!r}")
        config = cls(entries=entries)
        config.validate()
        return config

    def get(self, key: str) -> Any:
        if key not in KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        return self.entries.get(key, KEYS[key].default)

    def has(self, key: str) -> bool:
        return key in self.entries

    def with_entries(self, updates: Mapping[str, Any]) -> "ExperimentConfig":
        for key in updates:
            if key not in KEYS:
                raise ConfigError(f"unknown config key {key!r}")
        config = ExperimentConfig(entries={**self.entries, **updates}, overrides=self.overrides, origin=self.origin)
        config.validate()
        return config

    def to_text(self) -> str:
        lines = [f"{key} = {format_value(self.entries[key])}" for key in KEYS if key in self.entries]
        return "\n".join(lines) + "\n"

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()

    # -- validation
    def validate(self) -> None:
        try:
            self.fiber()
            pump = self.pump()
            self.collection().check_pump(pump)
            self.detection()
            self.dispersion()
            self.source()
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc

        for key in ("sweep.powers_mW", "scan.offsets_nm"):
            axis = self.get(key)
            if not axis:
                raise ConfigError(f"{key} must not be empty")
            if any(b <= a for a, b in zip(axis, axis[1:])):
                raise ConfigError(f"{key} must be strictly increasing")
        if any(p < 0 for p in self.get("sweep.powers_mW")):
            raise ConfigError("sweep.powers_mW must be >= 0")
        for key in ("integration.short_s", "integration.long_s"):
            if not self.get(key) > 0:
                raise ConfigError(f"{key} must be > 0")
        fixed = self.get("integration.fixed_s")
        if fixed is not None and not fixed > 0:
            raise ConfigError("integration.fixed_s must be > 0")
        if self.get("run.batch_pulses") < 1:
            raise ConfigError("run.batch_pulses must be >= 1")
        if self.get("run.workers") < 1:
            raise ConfigError("run.workers must be >= 1")
        if self.get("run.seed") < 0:
            raise ConfigError("run.seed must be >= 0")

    # -- typed specs
    def fiber(self) -> FiberSpec:
        return FiberSpec(
            length=self.get("fiber.length_m"),
            gamma=self.get("fiber.gamma_per_W_km") * C.PER_W_KM,
            zero_dispersion_wavelength=self.get("fiber.zero_dispersion_wavelength_nm") * C.NM,
            mode_diameter=self.get("fiber.mode_diameter_um") * C.UM,
            refractive_index=self.get("fiber.refractive_index"),
        )

    def pump(self, average_power: Optional[float] = None) -> PumpSpec:
        if average_power is None:
            average_power = self.get("pump.average_power_mW") * C.MW
        return PumpSpec(
            wavelength=self.get("pump.wavelength_nm") * C.NM,
            bandwidth=self.get("pump.bandwidth_nm") * C.NM,
            average_power=average_power,
            repetition_rate=self.get("pump.repetition_rate_MHz") * C.MHZ,
            pulse_width=self.get("pump.pulse_width_ps") * C.PS,
        )

    def collection(self) -> CollectionSpec:
        pump = self.pump()
        signal = self.get("collection.signal_wavelength_nm") * C.NM
        idler = self.get("collection.idler_wavelength_nm")
        envelope = self.get("collection.pump_envelope_bandwidth_nm")
        return CollectionSpec(
            signal_wavelength=signal,
            idler_wavelength=conjugate_wavelength(pump.wavelength, signal) if idler is None else idler * C.NM,
            bandwidth=self.get("collection.bandwidth_nm") * C.NM,
            pump_envelope_bandwidth=pump.bandwidth if envelope is None else envelope * C.NM,
            passband=self.get("collection.passband"),
        )

    def detection(self) -> DetectionSpec:
        return DetectionSpec(
            eta_s=self.get("detection.eta_s"),
            eta_i=self.get("detection.eta_i"),
            eta_pair=self.get("detection.eta_pair"),
        )

    def dispersion(self) -> Optional[DispersionModel]:
        """Explicit dispersion model, or None when it has to be calibrated."""
        if not any(self.has(k) for k in DISPERSION_KEYS):
            return None
        reference = self.get("dispersion.reference_wavelength_nm")
        return DispersionModel(
            reference_wavelength=(reference if reference is not None else self.get("pump.wavelength_nm")) * C.NM,
            beta2=(self.get("dispersion.beta2_ps2_per_km") or 0.0) * C.PS2_PER_KM,
            beta3=(self.get("dispersion.beta3_ps3_per_km") or 0.0) * C.PS3_PER_KM,
            beta4=(self.get("dispersion.beta4_ps4_per_km") or 0.0) * C.PS4_PER_KM,
        )

    def source_overrides(self) -> dict[str, float]:
        """SourceModel fields set explicitly in the config."""
        return {name: self.get(key) for key, name in SOURCE_FIELDS.items() if self.has(key)}

    def source(self, base: Optional[SourceModel] = None) -> Optional[SourceModel]:
        """Explicit source keys layered over ``base``.

        Without a base the config must give kappa and both Raman coefficients;
        otherwise None is returned and the source has to be calibrated.
        """
        overrides = self.source_overrides()
        if base is None:
            if not all(name in overrides for name in ("kappa", "c_raman_s", "c_raman_i")):
                return None
            collection, pump = self.collection(), self.pump()
            modes_s, modes_i = collection_modes(collection, pump)
            base = SourceModel(
                kappa=overrides["kappa"],
                c_raman_s=overrides["c_raman_s"],
                c_raman_i=overrides["c_raman_i"],
                modes_s=modes_s,
                modes_i=modes_i,
                pair_modes=pair_mode_count(collection, pump, self.get("source.pair_bandwidth_arm")),
            )
        return replace(base, **overrides)

    def source_reference(self) -> SourceReference:
        return SourceReference(
            power=self.get("calibration.reference_power_mW") * C.MW,
            coincidence_rate=self.get("calibration.coincidence_rate_kHz") * C.KHZ,
            contrast=self.get("calibration.contrast"),
            pair_ratio_signal=self.get("calibration.pair_ratio_signal"),
            pair_ratio_idler=self.get("calibration.pair_ratio_idler"),
        )

    def dispersion_targets(self) -> DispersionTargets:
        return DispersionTargets(
            matched_signal=self.get("calibration.matched_signal_nm") * C.NM,
            walkoff=self.get("calibration.walkoff_ps") * C.PS,
            power=self.get("calibration.dispersion_power_mW") * C.MW,
        )

    def integration(self) -> IntegrationPolicy:
        fixed = self.get("integration.fixed_s")
        return IntegrationPolicy(
            short_s=self.get("integration.short_s"),
            long_s=self.get("integration.long_s"),
            threshold=self.get("integration.threshold_mW") * C.MW,
            fixed_s=fixed,
        )

    @property
    def powers(self) -> list[float]:
        return [p * C.MW for p in self.get("sweep.powers_mW")]

    @property
    def offsets(self) -> list[float]:
        return [o * C.NM for o in self.get("scan.offsets_nm")]

    @property
    def scan_power(self) -> float:
        return self.get("scan.power_mW") * C.MW

    @property
    def seed(self) -> int:
        return self.get("run.seed")

    @property
    def batch_pulses(self) -> int:
        return self.get("run.batch_pulses")

    @property
    def workers(self) -> int:
        return self.get("run.workers")


def model_entries(model: DispersionModel, source: SourceModel, config: ExperimentConfig) -> dict[str, Any]:
    """Config entries (key units) describing calibrated models."""
    entries = {
        "dispersion.reference_wavelength_nm": config.get("pump.wavelength_nm"),
        "dispersion.beta2_ps2_per_km": model.beta2 / C.PS2_PER_KM,
        "dispersion.beta3_ps3_per_km": model.beta3 / C.PS3_PER_KM,
        "dispersion.beta4_ps4_per_km": model.beta4 / C.PS4_PER_KM,
        "source.kappa": source.kappa,
        "source.raman_signal_per_W": source.c_raman_s,
        "source.raman_idler_per_W": source.c_raman_i,
        "source.modes_signal": source.modes_s,
        "source.modes_idler": source.modes_i,
        "source.pair_modes": source.pair_modes,
    }
    return {key: float(value) for key, value in entries.items() if math.isfinite(float(value))}
