"""Cycle model of the vectorized digital unit that runs non-GEMM work.

The unit has one lane per optical channel (m lanes).  Because a digital
ASIC cannot close timing at multi-GHz photonic clocks, each arithmetic
station is replicated n_units times with staggered clocks, sustaining one
result per system cycle for initiation-interval-1 stages.

An operation recipe is an ordered list of (arithmetic unit, invocations per
element).  Elements are processed in waves of `lanes`; stages pipeline, so a
wave costs the sum of stage initiation intervals, and the pipeline depth is
paid once.  Cross-lane reductions pay an extra log2(lanes) tree term.

The default stage table and recipes below are deliberately coarse: only the
relative weight of cheap (relu) versus divide/exp-heavy ops (gelu, softmax,
sigmoid) matters for system conclusions, and everything is overridable from
the `digital_unit` config section.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .workload import NonGemmOp

# unit -> (initiation interval, pipeline depth) in native digital cycles
DEFAULT_STAGE_CYCLES: dict[str, tuple[int, int]] = {
    "add": (1, 1),
    "mul": (1, 2),
    "max": (1, 1),
    "div": (4, 8),
    "sqrt": (4, 8),
    "exp": (1, 4),          # table lookup plus multiply
    "max_reduce": (1, 1),   # plus the cross-lane tree term
    "add_reduce": (1, 1),
}

# tag -> ordered (unit, invocations per element)
DEFAULT_RECIPES: dict[str, tuple[tuple[str, int], ...]] = {
    "relu": (("max", 1),),
    "gelu": (("mul", 3), ("exp", 1), ("div", 1), ("add", 2)),
    "softmax": (("exp", 1), ("max_reduce", 1), ("div", 1)),
    "sigmoid": (("exp", 1), ("add", 1), ("div", 1)),
    "tanh": (("exp", 2), ("add", 2), ("div", 2)),
    "layernorm": (("add", 2), ("mul", 2), ("sqrt", 1), ("div", 1)),
    "maxpool": (("max_reduce", 1),),
    "avgpool": (("add_reduce", 1), ("mul", 1)),
    "add": (("add", 1),),
    "mul": (("mul", 1),),
    "exp": (("exp", 1),),
    "div": (("div", 1),),
    "sqrt": (("sqrt", 1),),
    "max_reduce": (("max_reduce", 1),),
}

_REDUCE_UNITS = ("max_reduce", "add_reduce")


class RecipeError(KeyError):
    """Raised when an op tag or arithmetic unit has no definition."""


@dataclass(frozen=True)
class DigitalUnitConfig:
    lanes: int
    f_c: float = 1e9
    f_asic: float = 1e9
    stage_cycles: dict = field(default_factory=lambda: dict(DEFAULT_STAGE_CYCLES))
    recipes: dict = field(default_factory=lambda: dict(DEFAULT_RECIPES))

    def __post_init__(self):
        if self.lanes < 1:
            raise ValueError("digital unit needs at least one lane")
        if any(ii < 1 for ii, _ in self.stage_cycles.values()):
            raise ValueError("stage initiation intervals must be >= 1")

    @property
    def n_units(self) -> int:
        """Staggered replicas needed to keep up with the system clock."""
        return max(1, math.ceil(self.f_c / self.f_asic))

    def stage(self, unit: str) -> tuple[int, int]:
        try:
            return self.stage_cycles[unit]
        except KeyError:
            raise RecipeError(f"no stage timing for arithmetic unit {unit!r}") from None

    def recipe(self, tag: str):
        try:
            return self.recipes[tag]
        except KeyError:
            raise RecipeError(f"no recipe for non-GEMM op {tag!r}") from None


def _native_parts(op: NonGemmOp, cfg: DigitalUnitConfig) -> tuple[int, int]:
    """(throughput cycles, pipeline depth) of one op in native digital cycles."""
    waves = math.ceil(op.elems / cfg.lanes)
    issue = 0
    depth = 0
    for unit, invocations in cfg.recipe(op.tag):
        ii, d = cfg.stage(unit)
        if unit in _REDUCE_UNITS:
            d += math.ceil(math.log2(cfg.lanes)) if cfg.lanes > 1 else 0
        issue += ii * invocations
        depth = max(depth, d)
    return issue * waves, depth


def _to_system_cycles(native: int, cfg: DigitalUnitConfig) -> int:
    return math.ceil(native * (cfg.f_c / cfg.f_asic) / cfg.n_units)


def nongemm_cycles(op: NonGemmOp, cfg: DigitalUnitConfig) -> int:
    """System-clock cycles for one non-GEMM op on the vectorized unit."""
    issue, depth = _native_parts(op, cfg)
    return _to_system_cycles(issue + depth, cfg)


def layer_nongemm_cycles(ops, cfg: DigitalUnitConfig) -> int:
    """Cycles for an ordered op list with inter-op pipelining.

    Consecutive ops overlap by min(previous depth tail, next fill), so the
    total is bounded by the serial sum below and the largest op above.
    """
    native = 0
    prev_depth = 0
    for op in ops:
        issue, depth = _native_parts(op, cfg)
        native += issue + depth - min(prev_depth, issue)
        prev_depth = depth
    return _to_system_cycles(native, cfg) if native else 0
