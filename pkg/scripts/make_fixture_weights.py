#!/usr/bin/env python3
"""Write a seeded random weight file for demos and pipeline experiments.

The tensors follow the fixed detection architecture; kernels use
fan-in-scaled normals. With --positive the classifier is biased to say
cough for anything the onset gate lets through, which is handy for
exercising the event machinery without a trained model.
"""

import argparse
from pathlib import Path

import numpy as np

from coughdet.model import (BatchNormParams, ConvLayer, DenseLayer, ModelWeights,
                            save_weights)


def build(n_frames: int, seed: int, positive: bool) -> ModelWeights:
    rng = np.random.default_rng(seed)

    def conv(cin, cout):
        kernel = rng.normal(0.0, np.sqrt(2.0 / (9 * cin)), (3, 3, cin, cout))
        return ConvLayer(kernel=kernel, bias=rng.normal(0.0, 0.05, cout))

    bn = BatchNormParams(gamma=rng.uniform(0.8, 1.2, 40), beta=rng.normal(0.0, 0.1, 40),
                         moving_mean=rng.normal(0.0, 0.5, 40),
                         moving_var=rng.uniform(0.5, 1.5, 40), epsilon=1e-3)
    dense_scale, dense_bias = (0.01, 4.0) if positive else (0.3, 0.0)
    dense = DenseLayer(kernel=rng.normal(0.0, dense_scale, (40, 1)),
                       bias=np.array([dense_bias]))
    return ModelWeights(conv1=conv(1, 16), conv2=conv(16, 32), conv3=conv(32, 40),
                        bn=bn, dense=dense, input_shape=(40, n_frames, 1))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("output", help="path for the .cghw file")
    parser.add_argument("--n-frames", type=int, default=267,
                        help="feature frame count the model is pinned to (default 267)")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--positive", action="store_true",
                        help="bias the classifier positive")
    args = parser.parse_args()
    weights = build(args.n_frames, args.seed, args.positive)
    Path(args.output).write_bytes(save_weights(weights))
    print(f"wrote {args.output}: {weights.parameter_count()} parameters, "
          f"input (40, {args.n_frames}, 1)")


if __name__ == "__main__":
    main()
