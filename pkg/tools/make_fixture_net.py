#!/usr/bin/env python3
"""Regenerate tests/fixtures/fixture-net.json.

The fixture is a deterministic 784x10x10x10x10 network with seeded Gaussian
weights (std = sqrt(2/fan_in)). It is not trained; the test suite only needs
a full-size network with a healthy mix of active and inactive neurons and a
few attackable base images. Keep the seed fixed: committed expectations
depend on it.
"""

import os

import numpy as np

from relupath.network import Layer, Network, save_network

SIZES = [784, 10, 10, 10, 10]
SEED = 1


def build_fixture_network() -> Network:
    rng = np.random.default_rng(SEED)
    layers = []
    for i in range(len(SIZES) - 1):
        fan_in, fan_out = SIZES[i], SIZES[i + 1]
        weights = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in))
        biases = rng.normal(0.0, 0.05, size=fan_out)
        activation = "linear" if i == len(SIZES) - 2 else "relu"
        layers.append(Layer(weights=weights, biases=biases, activation=activation))
    return Network(layers=tuple(layers))


def main() -> None:
    out = os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures", "fixture-net.json")
    save_network(build_fixture_network(), out)
    print(f"wrote {os.path.normpath(out)}")


if __name__ == "__main__":
    main()
