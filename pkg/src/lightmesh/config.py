"""Configuration files: accelerator, device constants, digital-unit timing.

A config file is JSON with up to three sections, each optional and merged
over the bundled defaults:

    {"accelerator": {...AcceleratorConfig fields...},
     "devices":     {...DeviceParams fields, dac_ref/adc/area_mm2 nested...},
     "digital_unit": {"f_asic": ..., "stage_cycles": {"div": [4, 8], ...},
                      "recipes": {"gelu": [["mul", 3], ...], ...}}}

Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .energy import AdcSpec, DacRef, DeviceParams
from .nonlinear import DEFAULT_RECIPES, DEFAULT_STAGE_CYCLES, DigitalUnitConfig
from .timing import AcceleratorConfig, ConfigError

_SECTIONS = ("accelerator", "devices", "digital_unit")


def data_path(name: str) -> Path:
    return Path(str(resources.files("lightmesh").joinpath("data", name)))


def bundled_workload(name: str) -> Path:
    """Path of a bundled workload file, e.g. 'resnet50'."""
    path = data_path(f"{name}.workload")
    if not path.exists():
        raise ConfigError(f"no bundled workload named {name!r}")
    return path


@dataclass(frozen=True)
class SimConfig:
    accelerator: AcceleratorConfig
    devices: DeviceParams
    digital_unit: dict

    def digital_unit_config(self, m: int | None = None,
                            f_c: float | None = None) -> DigitalUnitConfig:
        du = self.digital_unit
        stage = dict(DEFAULT_STAGE_CYCLES)
        stage.update({k: tuple(v) for k, v in du.get("stage_cycles", {}).items()})
        recipes = dict(DEFAULT_RECIPES)
        recipes.update({k: tuple((u, int(n)) for u, n in v)
                        for k, v in du.get("recipes", {}).items()})
        return DigitalUnitConfig(
            lanes=m if m is not None else self.accelerator.m,
            f_c=f_c if f_c is not None else self.accelerator.f_c,
            f_asic=du.get("f_asic", 1e9),
            stage_cycles=stage,
            recipes=recipes,
        )

    def with_accelerator(self, **kwargs) -> "SimConfig":
        return replace(self, accelerator=replace(self.accelerator, **kwargs))


def _known_fields(cls) -> set[str]:
    return {f.name for f in dataclasses.fields(cls)}


def _build_accelerator(section: dict) -> AcceleratorConfig:
    unknown = set(section) - _known_fields(AcceleratorConfig)
    if unknown:
        raise ConfigError(f"unknown accelerator config keys: {sorted(unknown)}")
    return AcceleratorConfig(**section)


def _build_devices(section: dict) -> DeviceParams:
    section = dict(section)
    unknown = set(section) - _known_fields(DeviceParams)
    if unknown:
        raise ConfigError(f"unknown device config keys: {sorted(unknown)}")
    if "dac_ref" in section:
        section["dac_ref"] = DacRef(**section["dac_ref"])
    if "adc" in section:
        section["adc"] = AdcSpec(**section["adc"])
    if "error_constants" in section:
        section["error_constants"] = tuple(section["error_constants"])
    if "area_mm2" in section:
        merged = DeviceParams().area_mm2 | section["area_mm2"]
        section["area_mm2"] = merged
    return DeviceParams(**section)


def load_config(path=None) -> SimConfig:
    """Load a config file merged over the bundled defaults."""
    merged: dict = {s: {} for s in _SECTIONS}
    for source in (data_path("default_config.json"), path):
        if source is None:
            continue
        source = Path(source)
        if not source.exists():
            raise ConfigError(f"config file not found: {source}")
        try:
            raw = json.loads(source.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{source}: parse error at line {exc.lineno}: {exc.msg}") from exc
        unknown = set(raw) - set(_SECTIONS)
        if unknown:
            raise ConfigError(f"{source}: unknown sections {sorted(unknown)}")
        for sec in _SECTIONS:
            entry = raw.get(sec, {})
            for key, value in entry.items():
                if isinstance(value, dict) and isinstance(merged[sec].get(key), dict):
                    merged[sec][key] = merged[sec][key] | value
                else:
                    merged[sec][key] = value
    try:
        return SimConfig(
            accelerator=_build_accelerator(merged["accelerator"]),
            devices=_build_devices(merged["devices"]),
            digital_unit=merged["digital_unit"],
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
