"""lightmesh: design-space exploration for electro-photonic DNN accelerators.

Models an interferometer-mesh photonic GEMM core (SVD phase programming,
weight-stationary streaming, hardware-noise Monte Carlo) alongside analytic
electronic systolic arrays, with a shared digital non-GEMM unit, activation
buffering optimizer, and power/area roll-up.
"""

from .buffering import (BufferingError, TransferSchedule, double_buffering_batch,
                        max_batch, solve_schedule, verify_optimal)
from .config import SimConfig, bundled_workload, load_config
from .energy import (DeviceParams, PowerReport, converter_power, dac_power,
                     laser_power_per_channel, rollup, traffic_energy)
from .mesh import (NoiseSpec, PhaseProgram, clements_decompose,
                   estimate_output_bits, measure_matrix_error, mesh_forward,
                   mesh_matrix, program_tile, svd_decompose)
from .nonlinear import DigitalUnitConfig, layer_nongemm_cycles, nongemm_cycles
from .report import SimReport, emit_report
from .sim import compare_cores, run_simulation, run_sweep
from .timing import (AcceleratorConfig, LayerTimeline, MemoryTrace,
                     apply_parallelism, build_memory_trace, overlap_nongemm,
                     photo_core_gemm_cycles, systolic_gemm_cycles,
                     workload_timelines)
from .workload import (GemmOp, LayerSpec, NonGemmOp, TilePlan, WorkloadError,
                       layer_mac_count, load_workload, lower_to_gemms,
                       plan_tiles, workload_mac_count)

__version__ = "0.1.0"
