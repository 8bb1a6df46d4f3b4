"""Power and area roll-up for photonic-core and systolic-array systems.

Laser power per channel follows the shot-noise-limited link budget

    P = (kappa * 2^b_out)^2 * (q * f_c / 4)
        / (eta_det * eta_array * eta_mod * eta_cpl * eta_laser)

where eta_array = 10^(-mzi_loss_db * (2m+1) / 10): each signal crosses m
devices per mesh plus the attenuator, so laser power grows exponentially
with the array dimension.  kappa covers noise beyond shot noise (thermal,
transistor); the shot-limited SNR target is kappa * 2^b_out.

Data converters: the reference DAC figure of merit makes power proportional
to 2^bits at fixed rate, and rate scaling is linear.  Input DACs and output
ADCs convert every cycle; weight DACs are time-shared across zeta devices
and only active while a tile is being programmed (duty from the timing
module).  E-O/O-E conversion and all traffic (SRAM, DRAM, die-to-die) are
costed per bit.

Systolic arrays replace the whole optical chain with per-PE power at the
native clock, scaled by the clock-staggered replica count.  Per-device
power/area constants not published for this technology stack (PE, digital
lane, SRAM, areas) are documented estimates, configurable from the
`devices` config section; conclusions that depend on them are scaling-
shaped, not absolute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .mesh import DEFAULT_ERROR_CONSTANTS
from .timing import AcceleratorConfig

ELEMENTARY_CHARGE = 1.602176634e-19


class EnergyError(ValueError):
    """Raised for out-of-range converter or efficiency parameters."""


def _default_area_mm2() -> dict:
    # estimates: MEMS MZI ~100um pitch; 22nm-class converters and PEs
    return {
        "mzi": 0.002,
        "modulator": 0.0005,
        "detector": 0.0002,
        "adc": 0.02,
        "dac": 0.03,
        "pe": 0.0004,
        "digital_lane": 0.002,
        "sram_per_mb": 0.55,
    }


@dataclass(frozen=True)
class DacRef:
    bits: int = 14
    power_w: float = 0.177
    rate_hz: float = 10e9


@dataclass(frozen=True)
class AdcSpec:
    power_w: float = 0.029
    rate_hz: float = 5e9


@dataclass(frozen=True)
class DeviceParams:
    kappa: float = 3.0
    b_out: int = 8                      # SNR target; the ADC device is 10-bit
    b_in: int = 10                      # input DAC bits
    b_weight: int = 12                  # weight DAC bits
    q: float = ELEMENTARY_CHARGE
    eta_mod_db: float = 1.2
    mzi_loss_db: float = 0.04
    eta_cpl_db: float = 2.0
    eta_det: float = 0.8
    eta_laser: float = 0.2
    dac_ref: DacRef = field(default_factory=DacRef)
    adc: AdcSpec = field(default_factory=AdcSpec)
    e_o_j_per_bit: float = 20e-15
    o_e_j_per_bit: float = 297e-15
    dram_j_per_bit: float = 20e-12
    d2d_j_per_bit: float = 0.3e-12
    sram_j_per_bit: float = 0.05e-12    # estimate, 22nm-class
    pe_power_w: float = 0.5e-3          # per PE at the native 1 GHz clock, estimate
    digital_lane_power_w: float = 1e-3  # per lane per staggered replica, estimate
    area_mm2: dict = field(default_factory=_default_area_mm2)
    error_constants: tuple = DEFAULT_ERROR_CONSTANTS

    def __post_init__(self):
        for name in ("eta_det", "eta_laser"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise EnergyError(f"{name} must be in (0, 1], got {v}")
        for name in ("eta_mod_db", "mzi_loss_db", "eta_cpl_db"):
            if getattr(self, name) < 0:
                raise EnergyError(f"{name} must be a non-negative dB loss")
        for name in ("e_o_j_per_bit", "o_e_j_per_bit", "dram_j_per_bit",
                     "d2d_j_per_bit", "sram_j_per_bit", "pe_power_w"):
            if getattr(self, name) < 0:
                raise EnergyError(f"{name} must be non-negative")


@dataclass
class PowerReport:
    watts: dict
    area_mm2: dict
    counts: dict

    @property
    def total_w(self) -> float:
        return sum(self.watts.values())

    @property
    def total_mm2(self) -> float:
        return sum(self.area_mm2.values())


def db_to_transmissivity(db: float) -> float:
    return 10.0 ** (-db / 10.0)


def laser_power_per_channel(m: int, f_c: float, params: DeviceParams,
                            b_out: int | None = None) -> float:
    """Required laser power in watts for one of the m input channels."""
    if m < 2:
        raise EnergyError("mesh size must be >= 2")
    b = params.b_out if b_out is None else b_out
    eta_array = db_to_transmissivity(params.mzi_loss_db * (2 * m + 1))
    eta = (params.eta_det * eta_array * db_to_transmissivity(params.eta_mod_db)
           * db_to_transmissivity(params.eta_cpl_db) * params.eta_laser)
    snr_target = params.kappa * 2.0 ** b
    return snr_target ** 2 * (params.q * f_c / 4.0) / eta


def dac_power(bits: int, rate_hz: float, params: DeviceParams) -> float:
    """Power of a DAC scaled from the reference device: halves per bit
    removed (constant figure of merit), linear in sample rate."""
    if not 1 <= bits <= params.dac_ref.bits:
        raise EnergyError(
            f"DAC bits must be in [1, {params.dac_ref.bits}], got {bits}")
    scale = 2.0 ** (params.dac_ref.bits - bits)
    return params.dac_ref.power_w / scale * (rate_hz / params.dac_ref.rate_hz)


def weight_dac_count(m: int, zeta: int) -> int:
    return math.ceil(m * m / zeta)


def adc_count_per_channel(f_c: float, params: DeviceParams) -> int:
    """Interleaved ADC devices needed to sustain one sample per cycle."""
    return math.ceil(f_c / params.adc.rate_hz)


def converter_power(m: int, f_c: float, duty_weight: float,
                    cfg: AcceleratorConfig, params: DeviceParams) -> dict:
    """Per-component converter and conversion watts for one photonic core.

    WDM multiplies the per-channel devices (input DACs, ADCs, E-O, O-E) by
    the wavelength count but shares the mesh and its weight DACs.
    """
    if not 0 <= duty_weight <= 1:
        raise EnergyError("duty_weight must be in [0, 1]")
    wdm = cfg.n_wdm
    return {
        "input_dacs": m * wdm * dac_power(params.b_in, f_c, params),
        "weight_dacs": (weight_dac_count(m, cfg.zeta)
                        * dac_power(params.b_weight, params.dac_ref.rate_hz, params)
                        * duty_weight),
        "adcs": m * wdm * adc_count_per_channel(f_c, params) * params.adc.power_w,
        "e_o": params.e_o_j_per_bit * params.b_in * m * wdm * f_c,
        "o_e": params.o_e_j_per_bit * params.b_out * m * wdm * f_c,
    }


def traffic_energy(traffic_bytes: dict, elapsed_s: float, params: DeviceParams) -> dict:
    """Average watts for byte traffic by kind (sram, dram, d2d)."""
    if elapsed_s <= 0:
        raise EnergyError("elapsed time must be positive")
    per_bit = {
        "sram": params.sram_j_per_bit,
        "dram": params.dram_j_per_bit,
        "d2d": params.d2d_j_per_bit,
    }
    return {kind: traffic_bytes.get(kind, 0) * 8 * per_bit[kind] / elapsed_s
            for kind in per_bit}


def _device_counts(cfg: AcceleratorConfig, params: DeviceParams) -> dict:
    m = cfg.m
    if cfg.core == "systolic_array":
        return {"pes": cfg.sa_replicas * m * m * cfg.n_cores,
                "digital_lanes": m * cfg.n_cores}
    meshes = cfg.n_cores  # one mesh per core; WDM shares the mesh
    return {
        "mzis": meshes * m * m,
        "modulators": meshes * m * cfg.n_wdm,
        "detectors": meshes * m * cfg.n_wdm,
        "input_dacs": meshes * m * cfg.n_wdm,
        "weight_dacs": meshes * weight_dac_count(m, cfg.zeta),
        "adcs": meshes * m * cfg.n_wdm * adc_count_per_channel(cfg.f_c, params),
        "digital_lanes": m * cfg.n_cores * cfg.n_wdm,
    }


def rollup(cfg: AcceleratorConfig, params: DeviceParams, timelines,
           batch: int, dram_bytes: float = 0.0) -> PowerReport:
    """System power/area from per-layer timelines and traffic totals.

    dram_bytes is the off-chip traffic per batch (next-batch inputs under
    optimized buffering).  Die-to-die covers every photonic-chiplet crossing,
    i.e. all GEMM input and output activation bytes.
    """
    total_cyc = sum(t.total_cycles for t in timelines)
    if total_cyc <= 0:
        raise EnergyError("timelines contain no cycles")
    elapsed = total_cyc / cfg.effective_rate_hz
    act_rw = sum(t.act_sram_reads_bytes + t.act_sram_writes_bytes for t in timelines)
    weight_r = sum(t.weight_sram_reads_bytes for t in timelines)
    duty = sum(t.stall_cycles for t in timelines) / total_cyc

    counts = _device_counts(cfg, params)
    area = params.area_mm2
    sram_mb = (cfg.act_sram_bytes + cfg.weight_sram_bytes) / 1e6
    # staggered digital replicas needed to track the system clock (1 GHz
    # native digital rate assumed here, matching the digital_unit default)
    n_unit_repl = max(1, math.ceil(cfg.f_c / 1e9)) if cfg.core == "photo_core" else cfg.sa_replicas
    digital_w = counts["digital_lanes"] * n_unit_repl * params.digital_lane_power_w

    watts = {}
    areas = {"sram": sram_mb * area["sram_per_mb"],
             "digital_unit": counts["digital_lanes"] * n_unit_repl * area["digital_lane"]}
    traffic = {"sram": act_rw + weight_r, "dram": dram_bytes}

    if cfg.core == "photo_core":
        per_channel = laser_power_per_channel(cfg.m, cfg.f_c, params)
        watts["laser"] = cfg.m * per_channel * cfg.n_wdm * cfg.n_cores
        conv = converter_power(cfg.m, cfg.f_c, duty, cfg, params)
        for key, value in conv.items():
            watts[key] = value * cfg.n_cores
        traffic["d2d"] = act_rw
        areas["mzis"] = counts["mzis"] * area["mzi"]
        areas["modulators"] = counts["modulators"] * area["modulator"]
        areas["detectors"] = counts["detectors"] * area["detector"]
        areas["adcs"] = counts["adcs"] * area["adc"]
        areas["dacs"] = (counts["input_dacs"] + counts["weight_dacs"]) * area["dac"]
    else:
        watts["pes"] = counts["pes"] * params.pe_power_w
        traffic["d2d"] = 0.0
        areas["pes"] = counts["pes"] * area["pe"]

    watts["digital_unit"] = digital_w
    watts.update(traffic_energy(traffic, elapsed, params))
    return PowerReport(watts=watts, area_mm2=areas, counts=counts)
