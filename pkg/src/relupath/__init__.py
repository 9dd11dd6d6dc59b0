"""Concolic analysis of fully-connected ReLU classifiers.

Evaluates a network on a concrete input while tracking every neuron as an
affine function of the input pixels, ranks pixels by their influence on
the predicted logit, and synthesizes 1- and 2-pixel adversarial images
that preserve the original activation pattern.
"""

from .attack import (
    AttackResult,
    LinearConstraintSystem,
    OnePixelSearch,
    TwoPixelSearch,
    Witness,
    assemble,
    attack_pixels,
    search_1pixel,
    search_2pixel,
    solve,
    verify,
)
from .attribution import ImportanceScore, Ranking, rank, render_overlay, score_pixels, top_percent
from .data import MnistSet, load_mnist, normalize, read_idx_images, read_idx_labels
from .network import (
    ForwardResult,
    Layer,
    Network,
    emit_program,
    forward,
    load_network,
    save_network,
)
from .symexec import (
    AffineForm,
    CoefficientMatrix,
    LinearInequality,
    PathCondition,
    coefficients_vs_gradient_check,
    concolic_coefficients,
    output_affine_forms,
)

__version__ = "0.1.0"
