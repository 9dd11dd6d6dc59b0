"""Attack synthesis: constraint assembly, feasibility, verification, search.

For a chosen pixel set and target label the required conditions are all
affine in the symbolic pixels: the path condition (same ReLU branches), the
attack constraint (target logit strictly dominates every other), and the
box range of valid pixel values. Feasibility is therefore decided exactly
with a small linear program instead of an SMT solver: we maximize the
minimum normalized slack over all constraints (Chebyshev-center style) and
accept the deepest point as the witness, which makes concrete
re-verification robust against floating-point boundary effects.
"""

from __future__ import annotations

import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .attribution import rank, score_pixels, top_percent
from .network import Network, forward
from .symexec import (
    GREATER,
    AffineForm,
    LinearInequality,
    PathCondition,
    concolic_coefficients,
    output_affine_forms,
)

DEFAULT_MARGIN = 1e-6
DEFAULT_LO = 0.0
DEFAULT_HI = 1.0


@dataclass(frozen=True)
class LinearConstraintSystem:
    """Conjunction of affine inequalities over an ordered set of pixels.

    The box [lo, hi] always constrains every variable, in addition to any
    explicit box clauses in the list.
    """

    variables: tuple[int, ...]
    clauses: tuple[LinearInequality, ...]
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"lo={self.lo} must be < hi={self.hi}")
        declared = set(self.variables)
        for clause in self.clauses:
            if not set(clause.form.coeffs) <= declared:
                raise ValueError("clause references an undeclared variable")

    def satisfied_by(self, assignment) -> bool:
        """Direct evaluation: strict clauses as `form > 0`, others `form <= 0`."""
        if not all(self.lo <= assignment[v] <= self.hi for v in self.variables):
            return False
        return all(clause.satisfied_by(assignment) for clause in self.clauses)


@dataclass(frozen=True)
class Witness:
    """Satisfying assignment plus the minimum normalized slack it achieves.

    Slack is measured after shifting strict clauses by their margin, so a
    nonnegative slack means every strict inequality holds with at least
    margin * ||coeffs|| to spare.
    """

    assignment: dict[int, float]
    slack: float


@dataclass(frozen=True)
class AttackResult:
    pixels: tuple[int, ...]
    original_values: tuple[float, ...]
    attacked_values: tuple[float, ...]
    original_label: int
    attack_label: int
    verified: bool


def assemble(pc: PathCondition, forms: list[AffineForm], label: int, target: int,
             lo: float = DEFAULT_LO, hi: float = DEFAULT_HI,
             margin: float = DEFAULT_MARGIN) -> LinearConstraintSystem:
    """Build PC & AC & RA for attacking `label` into `target`.

    AC contributes one strict clause f_target - f_j > 0 per output j !=
    target; RA contributes two box clauses per symbolic pixel. Strict
    clauses (PC's active branches and all of AC) carry the margin.
    """
    if label == target:
        raise ValueError(f"target label must differ from original label {label}")

    variables = _collect_variables(pc, forms)
    clauses = [clause.with_margin(margin) for clause in pc.clauses]

    f_target = forms[target]
    for j, f_j in enumerate(forms):
        if j == target:
            continue
        diff = AffineForm(
            constant=f_target.constant - f_j.constant,
            coeffs={v: f_target.coeffs.get(v, 0.0) - f_j.coeffs.get(v, 0.0) for v in variables},
        )
        clauses.append(LinearInequality(form=diff, relation=GREATER, margin=margin))

    for v in variables:
        clauses.append(LinearInequality(form=AffineForm(constant=lo, coeffs={v: -1.0}), relation="<="))
        clauses.append(LinearInequality(form=AffineForm(constant=-hi, coeffs={v: 1.0}), relation="<="))

    return LinearConstraintSystem(variables=variables, clauses=tuple(clauses), lo=lo, hi=hi)


def _collect_variables(pc: PathCondition, forms) -> tuple[int, ...]:
    seen = set()
    for form in forms:
        seen.update(form.coeffs)
    for clause in pc.clauses:
        seen.update(clause.form.coeffs)
    return tuple(sorted(seen))


def solve(sys: LinearConstraintSystem) -> Witness | None:
    """Find the max-slack point of the system, or None if infeasible.

    Slack of a clause at a point is its signed distance past the (margin-
    shifted) boundary, normalized by the Euclidean norm of its coefficient
    vector; the implicit box contributes the distance to each wall. The
    returned witness maximizes the minimum slack and is accepted only when
    that optimum is >= 0. Deterministic for identical inputs.
    """
    for clause in sys.clauses:
        if clause.form.is_constant():
            c = clause.form.constant
            ok = c > 0.0 if clause.relation == GREATER else c <= 0.0
            if not ok:
                return None

    if len(sys.variables) == 1:
        return _solve_interval(sys)
    return _solve_lp(sys)


def _clause_bound(clause: LinearInequality, k: float) -> tuple[str, float]:
    """1-D clause as a half-line: returns ('lo'|'hi', bound)."""
    if clause.relation == GREATER:
        bound = (clause.margin * abs(k) - clause.form.constant) / k
    else:
        bound = -clause.form.constant / k
    if (k > 0) == (clause.relation == GREATER):
        return "lo", bound
    return "hi", bound


def _solve_interval(sys: LinearConstraintSystem) -> Witness | None:
    var = sys.variables[0]
    lower, upper = sys.lo, sys.hi
    for clause in sys.clauses:
        k = clause.form.coeffs.get(var, 0.0)
        if k == 0.0:
            continue  # constant clauses already checked
        side, bound = _clause_bound(clause, k)
        if side == "lo":
            lower = max(lower, bound)
        else:
            upper = min(upper, bound)
    slack = (upper - lower) / 2.0
    if slack < 0.0:
        return None
    mid = min(max((lower + upper) / 2.0, sys.lo), sys.hi)
    return Witness(assignment={var: mid}, slack=slack)


def _solve_lp(sys: LinearConstraintSystem) -> Witness | None:
    # Variables z = (x_0..x_{t-1}, r); maximize r subject to
    #   strict:  -k.x + ||k|| r <= c - margin ||k||
    #   <=    :   k.x + ||k|| r <= -c
    # plus box walls x_v - lo >= r and hi - x_v >= r.
    t = len(sys.variables)
    index = {v: i for i, v in enumerate(sys.variables)}
    rows, rhs = [], []
    for clause in sys.clauses:
        k = np.zeros(t)
        for v, coeff in clause.form.coeffs.items():
            k[index[v]] = coeff
        norm = float(np.linalg.norm(k))
        if norm == 0.0:
            continue
        row = np.zeros(t + 1)
        if clause.relation == GREATER:
            row[:t] = -k
            row[t] = norm
            rows.append(row)
            rhs.append(clause.form.constant - clause.margin * norm)
        else:
            row[:t] = k
            row[t] = norm
            rows.append(row)
            rhs.append(-clause.form.constant)
    for i in range(t):
        lo_row = np.zeros(t + 1)
        lo_row[i], lo_row[t] = -1.0, 1.0
        rows.append(lo_row)
        rhs.append(-sys.lo)
        hi_row = np.zeros(t + 1)
        hi_row[i], hi_row[t] = 1.0, 1.0
        rows.append(hi_row)
        rhs.append(sys.hi)

    cost = np.zeros(t + 1)
    cost[t] = -1.0
    bounds = [(sys.lo, sys.hi)] * t + [(None, None)]
    result = linprog(cost, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds, method="highs")
    if not result.success:
        return None
    slack = float(result.x[t])
    if slack < 0.0:
        return None
    point = np.clip(result.x[:t], sys.lo, sys.hi)
    return Witness(assignment={v: float(point[i]) for i, v in enumerate(sys.variables)}, slack=slack)


def verify(net: Network, x: np.ndarray, witness: Witness, target: int) -> bool:
    """Re-run the network concretely on the patched image.

    True iff the predicted label becomes exactly `target` and the activation
    pattern is bit-for-bit identical to the original input's.
    """
    x = np.asarray(x, dtype=np.float64)
    patched = x.copy()
    for pixel, value in witness.assignment.items():
        patched[pixel] = value
    original = forward(net, x)
    attacked = forward(net, patched)
    return attacked.label == target and np.array_equal(attacked.pattern, original.pattern)


def attack_pixels(net: Network, x: np.ndarray, pixels, *, lo: float = DEFAULT_LO,
                  hi: float = DEFAULT_HI, margin: float = DEFAULT_MARGIN) -> list[AttackResult]:
    """Try every target label for one symbolic pixel set; keep verified attacks.

    Targets are tried in ascending order and all of them are tried, so one
    pixel set can yield several results (one per reachable wrong label).
    """
    x = np.asarray(x, dtype=np.float64)
    pixel_tuple = tuple(sorted(set(int(p) for p in pixels)))
    base = forward(net, x)
    forms, pc = output_affine_forms(net, x, pixel_tuple)

    results = []
    for target in range(net.output_dim):
        if target == base.label:
            continue
        system = assemble(pc, forms, base.label, target, lo=lo, hi=hi, margin=margin)
        witness = solve(system)
        if witness is None:
            continue
        if not verify(net, x, witness, target):
            continue
        results.append(AttackResult(
            pixels=pixel_tuple,
            original_values=tuple(float(x[p]) for p in pixel_tuple),
            attacked_values=tuple(float(witness.assignment[p]) for p in pixel_tuple),
            original_label=base.label,
            attack_label=target,
            verified=True,
        ))
    return results


@dataclass(frozen=True)
class OnePixelSearch:
    """All verified 1-pixel attacks plus first-hit bookkeeping."""

    results: tuple[AttackResult, ...]
    attempts: int                  # pixels tried until (and including) the first hit; all if none
    candidates: tuple[int, ...]    # pixels in the order they were tried

    @property
    def attackable_pixels(self) -> list[int]:
        seen = []
        for r in self.results:
            if r.pixels[0] not in seen:
                seen.append(r.pixels[0])
        return seen

    @property
    def attack_labels(self) -> list[int]:
        return sorted({r.attack_label for r in self.results})

    @property
    def first_attack_pixel(self) -> int | None:
        return self.results[0].pixels[0] if self.results else None


@dataclass(frozen=True)
class TwoPixelSearch:
    """All verified 2-pixel attacks plus the 1-pixel-overlap split."""

    results: tuple[AttackResult, ...]
    pairs_tried: int               # pairs tried until (and including) the first hit; all if none
    candidates: tuple[int, ...]    # ranked candidate pixels the pairs were drawn from
    pairs_total: int
    one_pixel_attackable: frozenset[int]

    @property
    def attacked_pairs(self) -> list[tuple[int, int]]:
        seen = []
        for r in self.results:
            if r.pixels not in seen:
                seen.append(r.pixels)
        return seen

    @property
    def new_attacked_pairs(self) -> list[tuple[int, int]]:
        return [p for p in self.attacked_pairs
                if not (set(p) & self.one_pixel_attackable)]

    @property
    def attack_labels(self) -> list[int]:
        return sorted({r.attack_label for r in self.results})


def _run_attacks(net, x, pixel_sets, lo, hi, margin, jobs):
    if jobs <= 1 or len(pixel_sets) <= 1:
        return [attack_pixels(net, x, ps, lo=lo, hi=hi, margin=margin) for ps in pixel_sets]
    chunk = max(1, len(pixel_sets) // (jobs * 8))
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                             initargs=(net, x, lo, hi, margin)) as pool:
        # map preserves input order, so the merge stays canonical
        return list(pool.map(_attack_worker, pixel_sets, chunksize=chunk))


_WORKER_STATE: dict = {}


def _init_worker(net, x, lo, hi, margin):
    _WORKER_STATE["args"] = (net, x, lo, hi, margin)


def _attack_worker(pixel_set):
    net, x, lo, hi, margin = _WORKER_STATE["args"]
    return attack_pixels(net, x, pixel_set, lo=lo, hi=hi, margin=margin)


def _guided_candidates(net, x, label, metric, top):
    coeffs = concolic_coefficients(net, x)
    ranking = rank(score_pixels(coeffs, x, label, metric), label=label)
    return top_percent(ranking, top)


def search_1pixel(net: Network, x: np.ndarray, strategy: str = "exhaustive", *,
                  metric: str = "coi", top: float = 5.0, lo: float = DEFAULT_LO,
                  hi: float = DEFAULT_HI, margin: float = DEFAULT_MARGIN,
                  jobs: int = 1) -> OnePixelSearch:
    """Enumerate 1-pixel attack candidates and collect every verified attack.

    `exhaustive` scans pixels 0..m-1 in index order; `guided` scans the
    top-`top`% pixels of the `metric` ranking in rank order. All candidates
    are always enumerated (the result is the complete attackable set);
    `attempts` records how many were tried up to the first success.
    """
    x = np.asarray(x, dtype=np.float64)
    if strategy == "exhaustive":
        candidates = list(range(net.input_dim))
    elif strategy == "guided":
        candidates = _guided_candidates(net, x, forward(net, x).label, metric, top)
    else:
        raise ValueError(f"unknown strategy '{strategy}'")

    per_pixel = _run_attacks(net, x, [(p,) for p in candidates], lo, hi, margin, jobs)
    results, attempts = [], len(candidates)
    for i, pixel_results in enumerate(per_pixel):
        if pixel_results and not results:
            attempts = i + 1
        results.extend(pixel_results)
    return OnePixelSearch(results=tuple(results), attempts=attempts, candidates=tuple(candidates))


def rank_order_pairs(candidates) -> list[tuple[int, int]]:
    """Unordered pairs of ranked candidates, cheapest-max-rank first.

    Pair (a, b) precedes (c, d) iff max-rank < max-rank, ties by min-rank;
    so all pairs within the top-k candidates come before any pair touching
    rank k+1.
    """
    pairs = []
    for j in range(1, len(candidates)):
        for i in range(j):
            pairs.append((candidates[i], candidates[j]))
    return pairs


def search_2pixel(net: Network, x: np.ndarray, metric: str = "coi", top: float = 5.0, *,
                  lo: float = DEFAULT_LO, hi: float = DEFAULT_HI,
                  margin: float = DEFAULT_MARGIN, jobs: int = 1) -> TwoPixelSearch:
    """Attack all unordered pairs of the top-`top`% pixels of one metric.

    Also runs the exhaustive 1-pixel search so results can be split into
    pairs that reuse a 1-pixel-attackable pixel and genuinely new pairs.
    """
    x = np.asarray(x, dtype=np.float64)
    label = forward(net, x).label
    candidates = _guided_candidates(net, x, label, metric, top)
    if len(candidates) < 2:
        raise ValueError(f"top {top}% of {net.input_dim} pixels yields {len(candidates)} < 2 candidates")
    pairs = rank_order_pairs(candidates)

    per_pair = _run_attacks(net, x, pairs, lo, hi, margin, jobs)
    results, pairs_tried = [], len(pairs)
    for i, pair_results in enumerate(per_pair):
        if pair_results and not results:
            pairs_tried = i + 1
        results.extend(pair_results)

    one_pixel = search_1pixel(net, x, "exhaustive", lo=lo, hi=hi, margin=margin, jobs=jobs)
    return TwoPixelSearch(
        results=tuple(results),
        pairs_tried=pairs_tried,
        candidates=tuple(candidates),
        pairs_total=len(pairs),
        one_pixel_attackable=frozenset(one_pixel.attackable_pixels),
    )


# ---------------------------------------------------------------------------
# Report format
# ---------------------------------------------------------------------------

ATTACK_LINE = re.compile(
    r"^ATTACK t=(\d+) pixels=(\d+(?:,\d+)*) values=([^ ]+) from=(\d+) to=(\d+)$"
)


def format_attack_line(result: AttackResult) -> str:
    pixels = ",".join(str(p) for p in result.pixels)
    values = ",".join(f"{v:.9g}" for v in result.attacked_values)
    return (f"ATTACK t={len(result.pixels)} pixels={pixels} values={values} "
            f"from={result.original_label} to={result.attack_label}")


def parse_attack_line(line: str) -> tuple[tuple[int, ...], tuple[float, ...], int, int]:
    """Parse one machine-readable attack line into (pixels, values, l, l')."""
    match = ATTACK_LINE.match(line.strip())
    if match is None:
        raise ValueError(f"not an attack line: {line!r}")
    t = int(match.group(1))
    pixels = tuple(int(p) for p in match.group(2).split(","))
    values = tuple(float(v) for v in match.group(3).split(","))
    if len(pixels) != t or len(values) != t:
        raise ValueError(f"attack line arity mismatch: {line!r}")
    return pixels, values, int(match.group(4)), int(match.group(5))


def _format_table(results) -> list[str]:
    header = f"{'pixel(s)':<12} {'original':<22} {'attacked':<22} {'l':>2} {'l_adv':>5}"
    lines = [header, "-" * len(header)]
    for r in results:
        pixels = ",".join(str(p) for p in r.pixels)
        orig = ",".join(f"{v:.9g}" for v in r.original_values)
        new = ",".join(f"{v:.9g}" for v in r.attacked_values)
        lines.append(f"{pixels:<12} {orig:<22} {new:<22} {r.original_label:>2} {r.attack_label:>5}")
    return lines


def _label_set(labels) -> str:
    return ",".join(str(v) for v in labels) if labels else "-"


def render_1pixel_report(search: OnePixelSearch) -> str:
    """Report of one 1-pixel search: table, machine lines, summary counters."""
    lines = ["1-pixel attack report", "====================="]
    if search.results:
        lines.extend(_format_table(search.results))
    else:
        lines.append("NO-ATTACKS")
    lines.append("")
    for r in search.results:
        lines.append(format_attack_line(r))
    first = search.first_attack_pixel
    lines.append("")
    lines.append(f"SUMMARY t=1 #ap={len(search.attackable_pixels)} "
                 f"alabel={_label_set(search.attack_labels)} "
                 f"1stap={first if first is not None else '-'} "
                 f"attempts={search.attempts}")
    return "\n".join(lines) + "\n"


def render_2pixel_report(search: TwoPixelSearch) -> str:
    """Report of one 2-pixel search: table, machine lines, summary counters."""
    lines = ["2-pixel attack report", "====================="]
    if search.results:
        lines.extend(_format_table(search.results))
    else:
        lines.append("NO-ATTACKS")
    lines.append("")
    for r in search.results:
        lines.append(format_attack_line(r))
    lines.append("")
    lines.append(f"SUMMARY t=2 #a2p={len(search.attacked_pairs)} "
                 f"#a2p-new={len(search.new_attacked_pairs)} "
                 f"alabel={_label_set(search.attack_labels)} "
                 f"pairs_tried={search.pairs_tried} "
                 f"pairs_total={search.pairs_total}")
    return "\n".join(lines) + "\n"
