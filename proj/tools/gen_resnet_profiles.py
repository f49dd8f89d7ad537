#!/usr/bin/env python3
# Copyright 2026 The MergeSched Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes data/resnet50_161.json and data/resnet101_314.json.

Tensor sizes are the parameter tensors of the CIFAR-10 bottleneck ResNets
(3x3 stem, no max-pool, 32x32 input). Per-tensor compute is the backward
multiply-accumulate count of the layer that owns the tensor, scaled so the
ResNet50 profile sums to 64 ms; ResNet101 uses the same ms-per-MAC rate.
"""

import json
import os
import sys

TARGET_RESNET50_MS = 64.0


def bottleneck_resnet(blocks):
    # (name, size, backward_macs) in parameter registration order.
    tensors = []

    def conv(name, cin, cout, k, hw):
        size = cin * cout * k * k
        tensors.append((name + ".weight", size, 2 * size * hw * hw))

    def bn(name, c, hw):
        ops = 2 * c * hw * hw
        tensors.append((name + ".weight", c, ops))
        tensors.append((name + ".bias", c, ops))

    conv("conv1", 3, 64, 3, 32)
    bn("bn1", 64, 32)
    in_planes = 64
    hw = 32
    for stage, (planes, count) in enumerate(zip((64, 128, 256, 512), blocks)):
        for b in range(count):
            stride = 2 if (stage > 0 and b == 0) else 1
            out_hw = hw // stride
            p = f"layer{stage + 1}.{b}"
            conv(p + ".conv1", in_planes, planes, 1, hw)
            bn(p + ".bn1", planes, hw)
            conv(p + ".conv2", planes, planes, 3, out_hw)
            bn(p + ".bn2", planes, out_hw)
            conv(p + ".conv3", planes, 4 * planes, 1, out_hw)
            bn(p + ".bn3", 4 * planes, out_hw)
            if stride != 1 or in_planes != 4 * planes:
                conv(p + ".shortcut.0", in_planes, 4 * planes, 1, out_hw)
                bn(p + ".shortcut.1", 4 * planes, out_hw)
            in_planes = 4 * planes
            hw = out_hw
    tensors.append(("linear.weight", in_planes * 10, 2 * in_planes * 10))
    tensors.append(("linear.bias", 10, 10))
    return tensors


def write(path, name, tensors, ms_per_mac):
    layers = []
    for tname, size, macs in reversed(tensors):
        layers.append({"name": tname, "size": size,
                       "compute_ms": round(macs * ms_per_mac, 9)})
    doc = {
        "name": name,
        "note": "CIFAR-10 bottleneck ResNet parameter tensors in backprop "
                "order; compute_ms is an approximation scaled from backward "
                "MAC counts.",
        "layers": layers,
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(os.path.abspath(__file__)), "..", "data")
    r50 = bottleneck_resnet((3, 4, 6, 3))
    r101 = bottleneck_resnet((3, 4, 23, 3))
    assert len(r50) == 161 and len(r101) == 314
    rate = TARGET_RESNET50_MS / sum(m for _, _, m in r50)
    write(os.path.join(out, "resnet50_161.json"), "resnet50_cifar10", r50, rate)
    write(os.path.join(out, "resnet101_314.json"), "resnet101_cifar10", r101, rate)


if __name__ == "__main__":
    main()
