import math

import pytest

from lightmesh import nonlinear as nl
from lightmesh.workload import NonGemmOp


def unit(lanes=128, f_c=1e9, f_asic=1e9, **kw):
    return nl.DigitalUnitConfig(lanes=lanes, f_c=f_c, f_asic=f_asic, **kw)


def test_relu_one_wave():
    # one max stage (II=1, depth 1): 2 native cycles
    assert nl.nongemm_cycles(NonGemmOp("relu", 128), unit()) == 2
    # staggered replicas hold the count at the system clock
    assert nl.nongemm_cycles(NonGemmOp("relu", 128), unit(f_c=10e9)) == 2


def test_softmax_recipe_walkthrough():
    cfg = unit(stage_cycles={"exp": (1, 4), "max": (1, 2), "div": (4, 8)},
               recipes={"softmax": (("exp", 1), ("max", 1), ("div", 1))})
    assert nl.nongemm_cycles(NonGemmOp("softmax", 128), cfg) == 14


def test_unknown_tag_raises():
    cfg = unit()
    with pytest.raises(nl.RecipeError):
        nl.nongemm_cycles(NonGemmOp("add", 4), unit(recipes={}))


def test_reductions_pay_lane_tree():
    narrow = unit(lanes=2)
    wide = unit(lanes=128)
    plain = nl.nongemm_cycles(NonGemmOp("add", 128), wide)
    reduced = nl.nongemm_cycles(NonGemmOp("max_reduce", 128), wide)
    assert reduced == plain + math.ceil(math.log2(128))
    assert nl.nongemm_cycles(NonGemmOp("max_reduce", 2), narrow) == plain + 1


def test_layer_pipelining_examples():
    cfg = unit()
    assert nl.layer_nongemm_cycles([], cfg) == 0
    one = NonGemmOp("sigmoid", 128)
    assert nl.layer_nongemm_cycles([one], cfg) == nl.nongemm_cycles(one, cfg)
    # two identical ops overlap by min(depth, issue)
    issue, depth = nl._native_parts(one, cfg)
    overlap = min(depth, issue)
    assert nl.layer_nongemm_cycles([one, one], cfg) == 2 * (issue + depth) - overlap


def test_layer_pipelining_bounds():
    cfg = unit()
    ops = [NonGemmOp("gelu", 512), NonGemmOp("softmax", 512), NonGemmOp("add", 512)]
    total = nl.layer_nongemm_cycles(ops, cfg)
    singles = [nl.nongemm_cycles(op, cfg) for op in ops]
    assert max(singles) <= total <= sum(singles)


def test_cycles_scale_linearly_beyond_one_wave():
    cfg = unit()
    elems = [128 * 64, 128 * 128, 128 * 256]
    c = [nl.nongemm_cycles(NonGemmOp("gelu", e), cfg) for e in elems]
    slope01 = (c[1] - c[0]) / (elems[1] - elems[0])
    slope12 = (c[2] - c[1]) / (elems[2] - elems[1])
    assert slope01 == pytest.approx(slope12, rel=0.01)


def test_doubling_lanes_halves_waves():
    op = NonGemmOp("sigmoid", 4096)
    narrow = nl.nongemm_cycles(op, unit(lanes=64))
    wide = nl.nongemm_cycles(op, unit(lanes=128))
    depth_slack = 16  # constant pipeline-depth term survives the halving
    assert wide <= narrow / 2 + depth_slack


def test_sustained_throughput_matches_array_width():
    # II=1 recipe at n_units = f_c/f_asic: one wave of m elements per cycle
    cfg = unit(lanes=128, f_c=10e9)
    waves = 1000
    cycles = nl.nongemm_cycles(NonGemmOp("relu", 128 * waves), cfg)
    assert cycles <= waves + 16


def test_invalid_config_rejected():
    with pytest.raises(ValueError):
        nl.DigitalUnitConfig(lanes=0)
    with pytest.raises(ValueError):
        nl.DigitalUnitConfig(lanes=4, stage_cycles={"add": (0, 1)})
