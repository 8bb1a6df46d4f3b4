#!/usr/bin/env python3
"""Generate the bundled benchmark workload files from public topologies.

Conventions:
  - padding is folded into in_h/in_w, adjusted so strides divide the padded
    span exactly while preserving the canonical output spatial sizes;
  - nongemm `elems` counts are per sample;
  - multi-head attention folds the head dimension into seq_len (one GEMM
    per projection/score/value stage per encoder layer, not per head).

Run from the repository root:  python tools/make_workloads.py
"""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "lightmesh" / "data"


def conv(name, in_ch, out_ch, k, stride, out_hw, relu=True, extra=()):
    # choose padded input span so (in - k) is exactly divisible by stride
    in_hw = (out_hw - 1) * stride + k
    ops = []
    if relu:
        ops.append({"tag": "relu", "elems": out_ch * out_hw * out_hw})
    ops.extend(extra)
    return {
        "name": name,
        "kind": "conv2d",
        "dims": {"in_ch": in_ch, "out_ch": out_ch, "kernel_h": k, "kernel_w": k,
                 "stride": stride, "in_h": in_hw, "in_w": in_hw},
        "nongemm": ops,
    }


def resnet50():
    layers = [conv("conv1", 3, 64, 7, 2, 112)]
    layers.append({"name": "maxpool", "kind": "elementwise_block", "dims": {},
                   "nongemm": [{"tag": "maxpool", "elems": 64 * 112 * 112}]})
    stages = [  # (planes, blocks, stride, output spatial)
        (64, 3, 1, 56),
        (128, 4, 2, 28),
        (256, 6, 2, 14),
        (512, 3, 2, 7),
    ]
    in_ch = 64
    for si, (planes, blocks, stride, hw) in enumerate(stages, start=2):
        for b in range(blocks):
            s = stride if b == 0 else 1
            in_hw = hw * s  # stride sits in the 3x3 conv (v1.5 ordering)
            tag = f"conv{si}_{b + 1}"
            layers.append(conv(f"{tag}a", in_ch, planes, 1, 1, in_hw))
            layers.append(conv(f"{tag}b", planes, planes, 3, s, hw))
            add = [{"tag": "add", "elems": 4 * planes * hw * hw}]
            layers.append(conv(f"{tag}c", planes, 4 * planes, 1, 1, hw,
                               relu=True, extra=add))
            if b == 0:
                layers.append(conv(f"{tag}ds", in_ch, 4 * planes, 1, stride, hw,
                                   relu=False))
            in_ch = 4 * planes
    layers.append({"name": "avgpool", "kind": "elementwise_block", "dims": {},
                   "nongemm": [{"tag": "avgpool", "elems": 2048 * 7 * 7}]})
    layers.append({"name": "fc", "kind": "dense",
                   "dims": {"in_features": 2048, "out_features": 1000},
                   "nongemm": [{"tag": "softmax", "elems": 1000}]})
    return {"name": "resnet50", "layers": layers}


def bertlarge(n_layers=24, d_model=1024, heads=16, d_ff=4096, seq=384):
    d_head = d_model // heads
    layers = []
    tok = d_model * seq
    for i in range(n_layers):
        for proj in ("q", "k", "v"):
            layers.append({"name": f"l{i}_{proj}", "kind": "attention_proj",
                           "dims": {"d_model": d_model, "d_proj": d_model,
                                    "seq_len": seq}, "nongemm": []})
        layers.append({"name": f"l{i}_scores", "kind": "attention_proj",
                       "dims": {"d_model": d_head, "d_proj": seq,
                                "seq_len": seq * heads},
                       "nongemm": [{"tag": "softmax", "elems": heads * seq * seq}]})
        layers.append({"name": f"l{i}_attnv", "kind": "attention_proj",
                       "dims": {"d_model": seq, "d_proj": d_head,
                                "seq_len": seq * heads}, "nongemm": []})
        layers.append({"name": f"l{i}_out", "kind": "attention_proj",
                       "dims": {"d_model": d_model, "d_proj": d_model, "seq_len": seq},
                       "nongemm": [{"tag": "add", "elems": tok},
                                   {"tag": "layernorm", "elems": tok}]})
        layers.append({"name": f"l{i}_ffn1", "kind": "attention_proj",
                       "dims": {"d_model": d_model, "d_proj": d_ff, "seq_len": seq},
                       "nongemm": [{"tag": "gelu", "elems": d_ff * seq}]})
        layers.append({"name": f"l{i}_ffn2", "kind": "attention_proj",
                       "dims": {"d_model": d_ff, "d_proj": d_model, "seq_len": seq},
                       "nongemm": [{"tag": "add", "elems": tok},
                                   {"tag": "layernorm", "elems": tok}]})
    layers.append({"name": "qa_head", "kind": "attention_proj",
                   "dims": {"d_model": d_model, "d_proj": 2, "seq_len": seq},
                   "nongemm": [{"tag": "softmax", "elems": 2 * seq}]})
    return {"name": "bertlarge", "layers": layers}


def rnnt():
    layers = []
    enc = [(240, 1024, 128), (1024, 1024, 128),
           (2048, 1024, 64), (1024, 1024, 64), (1024, 1024, 64)]
    for i, (inp, hid, seq) in enumerate(enc):
        layers.append({"name": f"enc_lstm{i}", "kind": "lstm_cell",
                       "dims": {"input": inp, "hidden": hid, "seq_len": seq},
                       "nongemm": []})
    for i in range(2):
        layers.append({"name": f"pred_lstm{i}", "kind": "lstm_cell",
                       "dims": {"input": 320, "hidden": 320, "seq_len": 64},
                       "nongemm": []})
    layers.append({"name": "joint", "kind": "attention_proj",
                   "dims": {"d_model": 1344, "d_proj": 512, "seq_len": 64},
                   "nongemm": [{"tag": "relu", "elems": 512 * 64}]})
    layers.append({"name": "joint_out", "kind": "attention_proj",
                   "dims": {"d_model": 512, "d_proj": 29, "seq_len": 64},
                   "nongemm": [{"tag": "softmax", "elems": 29 * 64}]})
    return {"name": "rnnt", "layers": layers}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for build in (resnet50, bertlarge, rnnt):
        spec = build()
        path = OUT / f"{spec['name']}.workload"
        path.write_text(json.dumps(spec, indent=1) + "\n")
        n_gemm = sum(1 for l in spec["layers"] if l["kind"] != "elementwise_block")
        print(f"{path.name}: {len(spec['layers'])} layers ({n_gemm} GEMM-bearing)")


if __name__ == "__main__":
    main()
