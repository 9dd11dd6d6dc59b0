import os

import numpy as np
import pytest

from relupath.data import load_mnist, normalize
from relupath.network import Layer, Network, load_network

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "fixtures")
FIXTURE_NET = os.path.join(FIXTURE_DIR, "fixture-net.json")
SAMPLE_PREFIX = os.path.join(FIXTURE_DIR, "sample-train")


def make_network(sizes, rng, weight_scale=None, bias_scale=0.5) -> Network:
    """Random network with the given layer sizes, e.g. [3, 4, 2]."""
    layers = []
    for i in range(len(sizes) - 1):
        fan_in, fan_out = sizes[i], sizes[i + 1]
        scale = weight_scale if weight_scale is not None else np.sqrt(2.0 / fan_in)
        weights = rng.normal(0.0, scale, size=(fan_out, fan_in))
        biases = rng.normal(0.0, bias_scale, size=fan_out)
        activation = "linear" if i == len(sizes) - 2 else "relu"
        layers.append(Layer(weights=weights, biases=biases, activation=activation))
    return Network(layers=tuple(layers))


def make_layer(weights, biases, activation) -> Layer:
    return Layer(
        weights=np.asarray(weights, dtype=np.float64),
        biases=np.asarray(biases, dtype=np.float64),
        activation=activation,
    )


@pytest.fixture(scope="session")
def fixture_net() -> Network:
    return load_network(FIXTURE_NET)


@pytest.fixture(scope="session")
def sample_set():
    return load_mnist(SAMPLE_PREFIX)


@pytest.fixture(scope="session")
def base_images(sample_set):
    """First image of each digit 0..9 by file order, normalized."""
    images = []
    for digit in range(10):
        index = int(np.nonzero(sample_set.labels == digit)[0][0])
        images.append(normalize(sample_set.images[index]))
    return images
