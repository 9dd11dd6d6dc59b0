import numpy as np
import pytest

from relupath.attack import (
    AttackResult,
    LinearConstraintSystem,
    assemble,
    attack_pixels,
    format_attack_line,
    parse_attack_line,
    rank_order_pairs,
    render_1pixel_report,
    render_2pixel_report,
    search_1pixel,
    search_2pixel,
    solve,
    verify,
    Witness,
)
from relupath.network import Network, forward
from relupath.symexec import AffineForm, LinearInequality, output_affine_forms

from conftest import make_layer, make_network

EPS = 1e-6


# ---------------------------------------------------------------------------
# Grid oracle: dense evaluation of the margin-free normalized slack.
# A system counts as oracle-SAT when some grid point clears every clause and
# both box walls by at least 2*eps of normalized slack.
# ---------------------------------------------------------------------------

def grid_oracle_sat(system, grid_n, eps):
    axes = [np.linspace(system.lo, system.hi, grid_n) for _ in system.variables]
    mesh = np.meshgrid(*axes, indexing="ij")
    min_slack = np.full(mesh[0].shape, np.inf)
    for clause in system.clauses:
        k = np.array([clause.form.coeffs.get(v, 0.0) for v in system.variables])
        norm = float(np.linalg.norm(k))
        value = clause.form.constant + sum(k[i] * mesh[i] for i in range(len(k)))
        if norm == 0.0:
            ok = value > 0 if clause.relation == ">" else value <= 0
            slack = np.where(ok, np.inf, -np.inf)
        elif clause.relation == ">":
            slack = value / norm
        else:
            slack = -value / norm
        min_slack = np.minimum(min_slack, slack)
    for axis_values in mesh:
        min_slack = np.minimum(min_slack, axis_values - system.lo)
        min_slack = np.minimum(min_slack, system.hi - axis_values)
    return bool((min_slack >= 2 * eps).any())


def random_system(rng, t):
    variables = tuple(range(t))
    clauses = []
    for _ in range(int(rng.integers(2, 9))):
        coeffs = rng.normal(size=t)
        if rng.random() < 0.2:
            coeffs[int(rng.integers(0, t))] = 0.0
        relation = ">" if rng.random() < 0.5 else "<="
        form = AffineForm(constant=float(rng.normal(0.0, 0.6)),
                          coeffs={v: float(coeffs[v]) for v in variables})
        clauses.append(LinearInequality(form=form, relation=relation,
                                        margin=EPS if relation == ">" else 0.0))
    for v in variables:
        clauses.append(LinearInequality(form=AffineForm(0.0, {v: -1.0}), relation="<="))
        clauses.append(LinearInequality(form=AffineForm(-1.0, {v: 1.0}), relation="<="))
    return LinearConstraintSystem(variables=variables, clauses=tuple(clauses), lo=0.0, hi=1.0)


# ---------------------------------------------------------------------------
# Analytic toy nets
# ---------------------------------------------------------------------------

def toy_attackable_net():
    """1 pixel, both hidden neurons active on all of [0,1].

    y0 = 2x and y1 = 1.2 - 2x, so the label flips from 0 to 1 exactly when
    x < 0.3, without any ReLU boundary in the box.
    """
    return Network(layers=(
        make_layer([[1.0], [-1.0]], [2.0, 2.0], "relu"),
        make_layer([[1.0, -1.0], [-1.0, 1.0]], [0.0, 1.2], "linear"),
    ))


def unattackable_net(m=784, n=10):
    # no weights at all: logits are constants, so AC can never hold
    return Network(layers=(
        make_layer(np.zeros((n, m)), [1.0] + [0.0] * (n - 1), "linear"),
    ))


# ---------------------------------------------------------------------------
# assemble
# ---------------------------------------------------------------------------

def test_assemble_counts_ac_and_box_clauses():
    rng = np.random.default_rng(0)
    net = make_network([6, 10], rng)  # no hidden layer -> empty PC
    x = rng.uniform(0.0, 1.0, size=6)
    forms, pc = output_affine_forms(net, x, {2})
    assert len(pc.clauses) == 0
    label = forward(net, x).label
    target = (label + 1) % 10
    system = assemble(pc, forms, label, target)
    assert len(system.clauses) == 9 + 2  # 9 AC + 2 box


def test_assemble_rejects_same_label():
    rng = np.random.default_rng(0)
    net = make_network([4, 3], rng)
    forms, pc = output_affine_forms(net, np.zeros(4), {0})
    with pytest.raises(ValueError):
        assemble(pc, forms, 1, 1)


def test_origin_never_satisfies_assembled_system():
    # the original image's argmax is the original label, so AC fails at it
    for seed in range(5):
        rng = np.random.default_rng(700 + seed)
        net = make_network([5, 4, 3], rng)
        x = rng.uniform(0.0, 1.0, size=5)
        label = forward(net, x).label
        forms, pc = output_affine_forms(net, x, {0, 1})
        for target in range(3):
            if target == label:
                continue
            system = assemble(pc, forms, label, target)
            assert not system.satisfied_by({0: x[0], 1: x[1]})


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def test_solve_interval_midpoint():
    clauses = (
        LinearInequality(AffineForm(-0.5, {0: 1.0}), ">", margin=EPS),   # x > 0.5
        LinearInequality(AffineForm(-0.8, {0: 1.0}), "<="),              # x <= 0.8
    )
    system = LinearConstraintSystem(variables=(0,), clauses=clauses, lo=0.0, hi=1.0)
    witness = solve(system)
    assert witness is not None
    assert witness.assignment[0] == pytest.approx(0.65, abs=1e-5)
    assert witness.slack == pytest.approx(0.15, abs=1e-5)


def test_solve_empty_interval_is_none():
    clauses = (
        LinearInequality(AffineForm(-0.9, {0: 1.0}), ">", margin=EPS),   # x > 0.9
        LinearInequality(AffineForm(-0.1, {0: 1.0}), "<="),              # x <= 0.1
    )
    system = LinearConstraintSystem(variables=(0,), clauses=clauses, lo=0.0, hi=1.0)
    assert solve(system) is None


def test_solve_constant_clause_infeasible():
    clauses = (LinearInequality(AffineForm(-1.0, {0: 0.0}), ">", margin=EPS),)
    system = LinearConstraintSystem(variables=(0,), clauses=clauses, lo=0.0, hi=1.0)
    assert solve(system) is None


def test_solve_constant_clause_satisfied_is_ignored():
    clauses = (
        LinearInequality(AffineForm(2.0, {0: 0.0}), ">", margin=EPS),
        LinearInequality(AffineForm(-0.5, {0: 1.0}), ">", margin=EPS),
    )
    system = LinearConstraintSystem(variables=(0,), clauses=clauses, lo=0.0, hi=1.0)
    witness = solve(system)
    assert witness is not None
    assert witness.assignment[0] == pytest.approx(0.75, abs=1e-5)


def test_solve_1var_against_grid_oracle():
    sats = 0
    for seed in range(120):
        rng = np.random.default_rng(800 + seed)
        system = random_system(rng, t=1)
        witness = solve(system)
        if grid_oracle_sat(system, 1000, EPS):
            assert witness is not None, f"seed {seed}: oracle SAT but solver UNSAT"
        if witness is not None:
            sats += 1
            assert system.satisfied_by(witness.assignment)
            assert witness.slack >= 0.0
    assert sats > 10  # the random mix contains plenty of SAT systems


def test_solve_2var_against_grid_oracle():
    sats = 0
    for seed in range(60):
        rng = np.random.default_rng(900 + seed)
        system = random_system(rng, t=2)
        witness = solve(system)
        if grid_oracle_sat(system, 200, EPS):
            assert witness is not None, f"seed {seed}: oracle SAT but solver UNSAT"
        if witness is not None:
            sats += 1
            assert system.satisfied_by(witness.assignment)
            assert witness.slack >= 0.0
    assert sats > 5


def test_solve_is_deterministic():
    rng = np.random.default_rng(42)
    system = random_system(rng, t=2)
    w1, w2 = solve(system), solve(system)
    assert (w1 is None) == (w2 is None)
    if w1 is not None:
        assert w1 == w2


# ---------------------------------------------------------------------------
# verify and attack_pixels
# ---------------------------------------------------------------------------

def test_verify_rejects_unchanged_image():
    net = toy_attackable_net()
    x = np.array([0.8])
    assert not verify(net, x, Witness(assignment={0: 0.8}, slack=0.0), target=1)


def test_verify_accepts_analytic_flip():
    net = toy_attackable_net()
    x = np.array([0.8])
    assert verify(net, x, Witness(assignment={0: 0.1}, slack=0.0), target=1)


def test_verify_rejects_pattern_change():
    # second hidden neuron (pre = -x + 0.5) is active at x=0.2, dead at x=0.8
    net = Network(layers=(
        make_layer([[1.0], [-1.0]], [2.0, 0.5], "relu"),
        make_layer([[1.0, -1.0], [-1.0, 1.0]], [0.0, 1.2], "linear"),
    ))
    x = np.array([0.2])
    result = forward(net, x)
    flipped = forward(net, np.array([0.8]))
    assert not np.array_equal(result.pattern, flipped.pattern)
    assert not verify(net, x, Witness(assignment={0: 0.8}, slack=0.0), target=flipped.label)


def test_attack_pixels_on_toy_net_finds_exactly_one():
    net = toy_attackable_net()
    x = np.array([0.8])
    results = attack_pixels(net, x, {0})
    assert len(results) == 1
    r = results[0]
    assert r.pixels == (0,)
    assert r.original_label == 0
    assert r.attack_label == 1
    assert r.verified
    assert 0.0 <= r.attacked_values[0] < 0.3
    # midpoint of the feasible interval, up to the margin shift
    assert r.attacked_values[0] == pytest.approx(0.15, abs=1e-3)


def test_attack_pixels_zero_coefficient_pixel_finds_nothing():
    rng = np.random.default_rng(5)
    w1 = rng.normal(size=(3, 2))
    w1[:, 1] = 0.0
    net = Network(layers=(
        make_layer(w1, [0.3, 0.3, 0.3], "relu"),
        make_layer(rng.normal(size=(2, 3)), [0.0, 0.0], "linear"),
    ))
    assert attack_pixels(net, np.array([0.5, 0.5]), {1}) == []


def test_attack_results_all_verify_independently():
    net = toy_attackable_net()
    x = np.array([0.8])
    for r in attack_pixels(net, x, {0}):
        patched = x.copy()
        for pixel, value in zip(r.pixels, r.attacked_values):
            patched[pixel] = value
        after = forward(net, patched)
        assert after.label == r.attack_label
        assert np.array_equal(after.pattern, forward(net, x).pattern)


# ---------------------------------------------------------------------------
# searches
# ---------------------------------------------------------------------------

def test_search_1pixel_unattackable_net_tries_everything():
    net = unattackable_net()
    x = np.linspace(0.0, 1.0, 784)
    result = search_1pixel(net, x, "exhaustive")
    assert result.results == ()
    assert result.attempts == 784


def test_search_1pixel_exhaustive_order_and_attempts():
    net = toy_attackable_net()
    x = np.array([0.8])
    result = search_1pixel(net, x, "exhaustive")
    assert result.attempts == 1
    assert result.attackable_pixels == [0]
    assert result.first_attack_pixel == 0


def test_search_1pixel_guided_subset_of_exhaustive(fixture_net, base_images):
    x = base_images[0]
    exhaustive = search_1pixel(fixture_net, x, "exhaustive")
    guided = search_1pixel(fixture_net, x, "guided", metric="coi", top=5.0)
    assert len(guided.candidates) == 39
    exhaustive_set = {r.pixels[0] for r in exhaustive.results}
    guided_set = {r.pixels[0] for r in guided.results}
    assert guided_set <= exhaustive_set
    assert guided_set == exhaustive_set & set(guided.candidates)


def test_search_1pixel_rejects_unknown_strategy():
    with pytest.raises(ValueError):
        search_1pixel(toy_attackable_net(), np.array([0.8]), "random")


def test_search_1pixel_deterministic(fixture_net, base_images):
    a = search_1pixel(fixture_net, base_images[1], "guided", metric="coi", top=2.0)
    b = search_1pixel(fixture_net, base_images[1], "guided", metric="coi", top=2.0)
    assert a == b


def test_search_1pixel_parallel_matches_serial(fixture_net, base_images):
    serial = search_1pixel(fixture_net, base_images[2], "guided", metric="coi", top=2.0, jobs=1)
    parallel = search_1pixel(fixture_net, base_images[2], "guided", metric="coi", top=2.0, jobs=2)
    assert serial == parallel


def test_rank_order_pairs():
    pairs = rank_order_pairs([10, 20, 30, 40])
    assert pairs == [(10, 20), (10, 30), (20, 30), (10, 40), (20, 40), (30, 40)]


def test_search_2pixel_candidate_and_pair_counts(fixture_net, base_images):
    result = search_2pixel(fixture_net, base_images[3], "coi", 5.0)
    assert len(result.candidates) == 39
    assert result.pairs_total == 741


def test_search_2pixel_rejects_too_few_candidates():
    net = toy_attackable_net()
    with pytest.raises(ValueError):
        search_2pixel(net, np.array([0.8]), "coi", 5.0)  # 5% of 1 pixel -> 0 candidates


def test_search_2pixel_zero_coefficient_pair_finds_nothing():
    rng = np.random.default_rng(6)
    w1 = rng.normal(size=(3, 4))
    w1[:, 2] = 0.0
    w1[:, 3] = 0.0
    net = Network(layers=(
        make_layer(w1, [0.3, 0.3, 0.3], "relu"),
        make_layer(rng.normal(size=(2, 3)), [0.0, 0.0], "linear"),
    ))
    assert attack_pixels(net, np.array([0.5, 0.5, 0.5, 0.5]), {2, 3}) == []


def test_search_2pixel_new_pairs_have_no_1pixel_overlap(fixture_net, base_images):
    result = search_2pixel(fixture_net, base_images[6], "coi", 5.0)
    for pair in result.new_attacked_pairs:
        assert not (set(pair) & result.one_pixel_attackable)
    for pair in result.attacked_pairs:
        if pair not in result.new_attacked_pairs:
            assert set(pair) & result.one_pixel_attackable


# ---------------------------------------------------------------------------
# report format
# ---------------------------------------------------------------------------

def test_attack_line_round_trip():
    result = AttackResult(
        pixels=(346,), original_values=(0.51,), attacked_values=(0.0,),
        original_label=3, attack_label=8, verified=True,
    )
    line = format_attack_line(result)
    assert line == "ATTACK t=1 pixels=346 values=0 from=3 to=8"
    pixels, values, source, target = parse_attack_line(line)
    assert pixels == (346,)
    assert values == (0.0,)
    assert (source, target) == (3, 8)


def test_attack_line_round_trip_two_pixels():
    result = AttackResult(
        pixels=(12, 407), original_values=(0.25, 0.75), attacked_values=(0.125, 0.8125),
        original_label=1, attack_label=7, verified=True,
    )
    pixels, values, source, target = parse_attack_line(format_attack_line(result))
    assert pixels == (12, 407)
    assert values == (0.125, 0.8125)
    assert (source, target) == (1, 7)


def test_parse_attack_line_rejects_garbage():
    with pytest.raises(ValueError):
        parse_attack_line("ATTACK pixels=1")


def test_1pixel_report_contains_machine_lines_and_summary():
    net = toy_attackable_net()
    search = search_1pixel(net, np.array([0.8]), "exhaustive")
    report = render_1pixel_report(search)
    machine = [l for l in report.splitlines() if l.startswith("ATTACK ")]
    assert len(machine) == len(search.results)
    for line in machine:
        parse_attack_line(line)
    assert "SUMMARY t=1 #ap=1" in report
    assert "1stap=0" in report


def test_1pixel_report_empty_marker():
    net = unattackable_net(m=4, n=3)
    search = search_1pixel(net, np.array([0.1, 0.2, 0.3, 0.4]), "exhaustive")
    report = render_1pixel_report(search)
    assert "NO-ATTACKS" in report
    assert "#ap=0" in report
    assert "attempts=4" in report


def test_2pixel_report_summary(fixture_net, base_images):
    result = search_2pixel(fixture_net, base_images[6], "coi", 2.0)
    report = render_2pixel_report(result)
    assert "SUMMARY t=2 #a2p=" in report
    assert "#a2p-new=" in report
    for line in report.splitlines():
        if line.startswith("ATTACK "):
            pixels, _, _, _ = parse_attack_line(line)
            assert len(pixels) == 2
