"""Concolic engine: affine tracking of neuron values along one concrete path.

Executing the network on a concrete input fixes every ReLU branch, which
makes each neuron (and each output logit) an affine function of the input
pixels. This module propagates those affine forms alongside the concrete
run: per-pixel coefficient vectors accumulate through the weighted sums and
are reset to zero wherever a ReLU clamps its neuron. The same machinery,
restricted to a chosen set of symbolic pixels, yields the path condition:
one linear inequality per hidden neuron whose value still depends on a
symbolic pixel, oriented by whether that neuron was active on the run.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .network import LINEAR, RELU, Network, forward

GREATER = ">"
LEQ = "<="


class PatternFlipError(ValueError):
    """A perturbation crossed a ReLU boundary, so the local-linearity premise fails."""


@dataclass(frozen=True)
class AffineForm:
    """constant + sum(coeffs[i] * X_i) over the symbolic pixels X_i.

    Concrete pixels are folded into the constant, which also accumulates the
    bias terms along the active path.
    """

    constant: float
    coeffs: dict[int, float]

    def evaluate(self, assignment) -> float:
        return self.constant + sum(c * assignment[i] for i, c in self.coeffs.items())

    def is_constant(self) -> bool:
        return all(c == 0.0 for c in self.coeffs.values())


@dataclass(frozen=True)
class LinearInequality:
    """`form > 0` or `form <= 0`; strict clauses get a solve-time margin."""

    form: AffineForm
    relation: str      # GREATER or LEQ
    margin: float = 0.0

    def satisfied_by(self, assignment) -> bool:
        value = self.form.evaluate(assignment)
        return value > 0.0 if self.relation == GREATER else value <= 0.0

    def with_margin(self, margin: float) -> "LinearInequality":
        return replace(self, margin=margin if self.relation == GREATER else 0.0)


@dataclass(frozen=True)
class PathCondition:
    """Conjunction of ReLU-branch inequalities over the symbolic pixels.

    Hidden neurons whose value carries no symbolic coefficient are omitted:
    their branch outcome cannot change, so the clause is vacuously true.
    """

    clauses: tuple[LinearInequality, ...]
    source_pattern: np.ndarray

    def satisfied_by(self, assignment) -> bool:
        return all(clause.satisfied_by(assignment) for clause in self.clauses)


@dataclass(frozen=True)
class CoefficientMatrix:
    """Per-logit affine reconstruction: logits ~= rows @ x + constants."""

    rows: np.ndarray       # (n, m): coefficient of pixel j in logit i
    constants: np.ndarray  # (n,): accumulated bias-path sums


def _propagate(net: Network, x: np.ndarray, coeffs: np.ndarray, consts: np.ndarray,
               record_hidden: bool = False):
    """Push coefficient columns and constants through x's activation path.

    `coeffs` has one row per current-layer neuron and one column per tracked
    variable; `consts` carries everything else (biases plus concrete-pixel
    contributions). Rows of inactive ReLU neurons are zeroed, matching the
    concrete clamp. Returns the output-layer (coeffs, consts) and, when
    requested, one (row, const, active) record per hidden neuron in
    layer-major order, taken before the clamp.
    """
    value = x
    hidden = []
    for layer in net.layers:
        pre = layer.weights @ value + layer.biases
        coeffs = layer.weights @ coeffs
        consts = layer.weights @ consts + layer.biases
        if layer.activation == RELU:
            active = pre > 0.0
            if record_hidden:
                for i in range(layer.out_dim):
                    hidden.append((coeffs[i].copy(), float(consts[i]), bool(active[i])))
            coeffs = coeffs * active[:, None]
            consts = consts * active
            value = np.maximum(pre, 0.0)
        else:
            value = pre
    return coeffs, consts, hidden


def concolic_coefficients(net: Network, x: np.ndarray) -> CoefficientMatrix:
    """Coefficients of every output logit w.r.t. every input pixel, on x's path.

    The coefficient array starts as the identity (pixel j contributes itself)
    and accumulates weighted sums layer by layer; wherever the concrete
    pre-activation is <= 0 the neuron's coefficients and constant reset to
    zero. The result equals, for each (logit, pixel) pair, the sum over all
    input-to-output paths through concretely-active neurons of the product of
    edge weights.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.input_dim,):
        raise ValueError(f"input has shape {x.shape}, network expects ({net.input_dim},)")
    m = net.input_dim
    coeffs, consts, _ = _propagate(net, x, np.eye(m), np.zeros(m))
    return CoefficientMatrix(rows=coeffs, constants=consts)


def output_affine_forms(net: Network, x: np.ndarray, symbolic) -> tuple[list[AffineForm], PathCondition]:
    """Affine forms of the output logits over the chosen symbolic pixels.

    All other pixels keep their concrete values and fold into the constants.
    Also builds the path condition: for every hidden neuron whose
    pre-activation form has at least one nonzero symbolic coefficient, one
    clause `form > 0` (neuron active on x) or `form <= 0` (inactive).
    Zero-coefficient tests are exact: zeros arise structurally from ReLU
    gating, not from rounding.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.input_dim,):
        raise ValueError(f"input has shape {x.shape}, network expects ({net.input_dim},)")
    variables = sorted(set(int(i) for i in symbolic))
    if not variables:
        raise ValueError("symbolic pixel set is empty")
    if variables[0] < 0 or variables[-1] >= net.input_dim:
        raise IndexError(f"symbolic pixel out of range [0, {net.input_dim})")

    m, t = net.input_dim, len(variables)
    coeffs0 = np.zeros((m, t))
    coeffs0[variables, np.arange(t)] = 1.0
    consts0 = x.copy()
    consts0[variables] = 0.0

    coeffs, consts, hidden = _propagate(net, x, coeffs0, consts0, record_hidden=True)

    clauses = []
    pattern = np.zeros(len(hidden), dtype=bool)
    for h, (row, const, active) in enumerate(hidden):
        pattern[h] = active
        if not np.any(row != 0.0):
            continue
        form = AffineForm(constant=const, coeffs={v: float(row[j]) for j, v in enumerate(variables)})
        clauses.append(LinearInequality(form=form, relation=GREATER if active else LEQ))

    forms = [
        AffineForm(constant=float(consts[i]), coeffs={v: float(coeffs[i, j]) for j, v in enumerate(variables)})
        for i in range(net.output_dim)
    ]
    return forms, PathCondition(clauses=tuple(clauses), source_pattern=pattern)


def coefficients_vs_gradient_check(net: Network, x: np.ndarray, label: int, pixel: int,
                                   h: float = 1e-5) -> tuple[float, float]:
    """Pair the propagated coefficient with a central finite difference.

    Along a locally stable activation path the network is affine, so
    d(logit_label)/d(pixel) is exactly the propagated coefficient. Raises
    PatternFlipError if the +-h probes change any ReLU branch, since the
    finite difference then straddles two linear pieces.
    """
    x = np.asarray(x, dtype=np.float64)
    base = forward(net, x)
    if not 0 <= label < net.output_dim:
        raise ValueError(f"label {label} out of range [0, {net.output_dim})")
    if not 0 <= pixel < net.input_dim:
        raise ValueError(f"pixel {pixel} out of range [0, {net.input_dim})")

    step = np.zeros_like(x)
    step[pixel] = h
    plus = forward(net, x + step)
    minus = forward(net, x - step)
    if not (np.array_equal(plus.pattern, base.pattern) and np.array_equal(minus.pattern, base.pattern)):
        raise PatternFlipError(f"perturbing pixel {pixel} by +-{h} crosses a ReLU boundary")

    coef = float(concolic_coefficients(net, x).rows[label, pixel])
    fd = float((plus.logits[label] - minus.logits[label]) / (2.0 * h))
    return coef, fd
