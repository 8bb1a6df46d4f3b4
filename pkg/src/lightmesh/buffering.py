"""Next-batch transfer scheduling against activation-SRAM headroom.

While the current batch runs, the next batch's inputs stream from DRAM over
PCI-e into whatever SRAM the current batch is not using.  The schedule that
maximizes the cumulative-transfer area under the curve (transfer as early
as possible) is found greedily: cumulative transfers are irrevocable, so
the usable headroom at time t is the minimum headroom over all later bins
(suffix minimum); the forward pass then saturates every prefix against that
bound, the bandwidth cap, and the total input size.  Maximizing every
prefix simultaneously maximizes the sum, so the greedy schedule is optimal;
an exhaustive integer-instance oracle (`verify_optimal`) backs this up in
the tests.

The double-buffering baseline reserves half the SRAM for the incoming batch
and therefore halves the feasible batch size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import timing, workload
from .timing import AcceleratorConfig, MemoryTrace


class BufferingError(ValueError):
    """Raised when no feasible batch size exists."""


@dataclass
class TransferSchedule:
    dt: float
    x_pcie: np.ndarray        # cumulative bytes transferred by each sample
    objective: float
    feasible: bool
    binding_bin: int | None = None

    def increments(self) -> np.ndarray:
        return np.diff(self.x_pcie, prepend=0.0)


def solve_schedule(trace: MemoryTrace, x_input: float, x_max: float,
                   bw_bytes_per_sec: float) -> TransferSchedule:
    """Optimal cumulative transfer schedule for one memory trace.

    Constraints per sample t: x_c(t) + x_pcie(t) <= x_max, x_pcie
    nondecreasing from 0, per-bin increment <= bandwidth * dt, and the full
    x_input transferred by the horizon (else the schedule is infeasible and
    the binding bin is reported).
    """
    if trace.usage.size == 0:
        raise BufferingError("empty memory trace")
    if bw_bytes_per_sec <= 0:
        raise BufferingError("PCI-e bandwidth must be positive")
    headroom = x_max - trace.usage
    suffix = np.minimum.accumulate(headroom[::-1])[::-1]
    cap = bw_bytes_per_sec * trace.dt
    x = np.empty_like(suffix)
    prev = 0.0
    for t in range(x.size):
        prev = min(suffix[t], prev + cap, x_input)
        prev = max(prev, 0.0)
        x[t] = prev
    feasible = bool(x[-1] >= x_input - 1e-9) and bool(np.all(headroom >= -1e-9))
    binding = None
    if not feasible:
        binding = int(np.argmin(headroom)) if headroom.min() < x_input else x.size - 1
    return TransferSchedule(dt=trace.dt, x_pcie=x, objective=float(x.sum()),
                            feasible=feasible, binding_bin=binding)


def verify_optimal(trace: MemoryTrace, x_input: int, x_max: int,
                   bw_bytes_per_sec: float, schedule: TransferSchedule) -> bool:
    """Exhaustive small-instance oracle: is `schedule` feasible and optimal?

    Explores every integer cumulative-transfer sequence (dynamic program
    over the full state space), so it is independent of the greedy logic.
    Instances are limited to 12 sample points and capacities of 16 units.
    """
    n = trace.usage.size
    if n > 12 or x_input > 16 or x_max > 16:
        raise BufferingError("verify_optimal only handles tiny integer instances")
    cap = int(math.floor(bw_bytes_per_sec * trace.dt + 1e-9))
    limits = [int(math.floor(x_max - u + 1e-9)) for u in trace.usage]

    # best[c] = max objective over all feasible prefixes ending at cumulative c
    best = {0: 0.0}
    for t in range(n):
        nxt: dict[int, float] = {}
        for c, obj in best.items():
            for inc in range(cap + 1):
                c2 = c + inc
                if c2 > x_input or c2 > limits[t]:
                    break
                val = obj + c2
                if val > nxt.get(c2, -1.0):
                    nxt[c2] = val
        best = nxt
        if not best:
            return False
    reachable = {c: v for c, v in best.items()}
    opt_feasible = x_input in reachable
    opt_objective = reachable[x_input] if opt_feasible else max(reachable.values())

    # validate the candidate schedule against the raw constraints
    x = schedule.x_pcie
    valid = (
        x.size == n
        and np.all(np.diff(x, prepend=0.0) >= -1e-9)
        and np.all(np.diff(x, prepend=0.0) <= bw_bytes_per_sec * trace.dt + 1e-9)
        and np.all(trace.usage + x <= x_max + 1e-9)
    )
    if not valid:
        return False
    if schedule.feasible != opt_feasible:
        return False
    if opt_feasible and abs(x[-1] - x_input) > 1e-9:
        return False
    return abs(schedule.objective - opt_objective) < 1e-6


def _trace_for_batch(layers, batch: int, cfg: AcceleratorConfig, ducfg=None,
                     pipelining: bool = True, n_points: int = 1001) -> MemoryTrace:
    gemms = workload.lower_to_gemms(layers, batch=batch)
    tls = timing.workload_timelines(gemms, cfg, ducfg, pipelining)
    return timing.build_memory_trace(tls, layers, batch, cfg, n_points)


def next_batch_input_bytes(layers, batch: int) -> int:
    for layer in layers:
        in_bytes, _ = workload.layer_footprint(layer, batch)
        if in_bytes:
            return in_bytes
    return 0


def max_batch(layers, cfg: AcceleratorConfig, ducfg=None, pipelining: bool = True,
              n_points: int = 1001) -> tuple[int, TransferSchedule]:
    """Largest batch whose trace fits in SRAM with a feasible next-batch
    transfer schedule.  Feasibility is not proven monotone in the batch, so
    the search descends linearly from the capacity bound; per-sample usage
    scales linearly with batch, so the bound also charges the whole
    next-batch input against the final-sample occupancy."""
    trace1 = _trace_for_batch(layers, 1, cfg, ducfg, pipelining, n_points)
    peak1 = trace1.peak
    if peak1 <= 0:
        raise BufferingError("workload has no activation footprint")
    in1 = next_batch_input_bytes(layers, 1)
    sched1 = solve_schedule(trace1, in1, cfg.act_sram_bytes, cfg.pcie_bytes_per_sec)
    if trace1.peak > cfg.act_sram_bytes or not sched1.feasible:
        raise BufferingError(
            "batch 1 is infeasible: trace peak "
            f"{trace1.peak:.0f} B against {cfg.act_sram_bytes} B SRAM, "
            f"transfer feasible={sched1.feasible}")
    upper = int(cfg.act_sram_bytes // peak1)
    if in1 > 0:
        upper = min(upper, int(cfg.act_sram_bytes // (trace1.usage[-1] + in1)))
    for b in range(max(1, upper), 1, -1):
        trace = _trace_for_batch(layers, b, cfg, ducfg, pipelining, n_points)
        if trace.peak > cfg.act_sram_bytes:
            continue
        sched = solve_schedule(trace, next_batch_input_bytes(layers, b),
                               cfg.act_sram_bytes, cfg.pcie_bytes_per_sec)
        if sched.feasible:
            return b, sched
    return 1, sched1


def double_buffering_batch(layers, cfg: AcceleratorConfig, ducfg=None,
                           pipelining: bool = True, n_points: int = 1001) -> int:
    """Largest batch whose peak usage fits in half the activation SRAM.

    Returns 0 when even a single sample exceeds the half-capacity budget
    (the scheme is infeasible for the workload)."""
    half = cfg.act_sram_bytes / 2
    peak1 = _trace_for_batch(layers, 1, cfg, ducfg, pipelining, n_points).peak
    if peak1 > half:
        return 0
    b = max(1, int(half // peak1))
    while b > 0 and _trace_for_batch(layers, b, cfg, ducfg, pipelining, n_points).peak > half:
        b -= 1
    return b
