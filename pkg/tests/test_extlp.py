"""Extension polytope LPs: vulnerability, shadow distance, capacity equality."""

import json

import numpy as np
import pytest

from nonshare.behaviors import (
    Behavior,
    check_no_signalling,
    chsh_kernel,
    copied_seed_extension,
    deterministic_behaviors,
    game_score,
    lhv_behavior,
    marginal,
    pr_box,
    relabel_13_to_12,
)
from nonshare.extlp import (
    CLASSICAL,
    NO_SIGNALLING,
    ExtensionProblem,
    LinearProgram,
    LpInfeasibleError,
    LpUnboundedError,
    anti_collusion_power,
    anticollusion_capacity,
    collusive_vulnerability,
    corpus_to_jsonl,
    lp_solve,
    random_lhv_model,
    random_ns_behavior,
    shadow_tv_distance,
    verification_record,
)
from nonshare.qkernel import bell_strategy, born_behavior


def det_pair(f1: int, f2: int) -> Behavior:
    table = deterministic_behaviors(2)[4 * f1 + f2]
    return Behavior(2, (2, 2), (2, 2), table)


def uniform_pair() -> Behavior:
    return Behavior(2, (2, 2), (2, 2), np.full((2, 2, 2, 2), 0.25))


def test_lp_solve_minimize():
    lp = LinearProgram(
        c=np.array([1.0, 1.0]),
        a_ub=np.array([[-1.0, 0.0], [0.0, -1.0]]),
        b_ub=np.array([-1.0, -2.0]),
    )
    sol = lp_solve(lp)
    assert sol.status == "optimal"
    assert sol.optimum == pytest.approx(3.0, abs=1e-9)
    assert sol.primal == pytest.approx([1.0, 2.0], abs=1e-9)
    assert sol.gap < 1e-9


def test_lp_solve_maximize_with_bounds():
    lp = LinearProgram(
        c=np.array([1.0, 2.0]),
        bounds=((0.0, 1.0), (0.0, 1.0)),
        maximize=True,
    )
    sol = lp_solve(lp)
    assert sol.optimum == pytest.approx(3.0, abs=1e-12)
    assert sol.gap < 1e-9


def test_lp_solve_equality_dual():
    # min x + 2y s.t. x + y = 1, x, y >= 0 -> optimum 1 at (1, 0)
    lp = LinearProgram(
        c=np.array([1.0, 2.0]),
        a_eq=np.array([[1.0, 1.0]]),
        b_eq=np.array([1.0]),
    )
    sol = lp_solve(lp)
    assert sol.optimum == pytest.approx(1.0, abs=1e-12)
    assert sol.dual_optimum == pytest.approx(1.0, abs=1e-9)


def test_lp_solve_infeasible_and_unbounded():
    with pytest.raises(LpInfeasibleError):
        lp_solve(LinearProgram(
            c=np.array([1.0]), a_ub=np.array([[1.0]]), b_ub=np.array([-1.0]),
        ))
    with pytest.raises(LpUnboundedError):
        lp_solve(LinearProgram(c=np.array([1.0]), maximize=True))


def test_linear_program_validation():
    with pytest.raises(ValueError):
        LinearProgram(c=np.ones(2), a_ub=np.ones((1, 3)), b_ub=np.ones(1))
    with pytest.raises(ValueError):
        LinearProgram(c=np.ones(2), a_ub=np.ones((1, 2)))  # missing b_ub
    with pytest.raises(ValueError):
        LinearProgram(c=np.ones(2), bounds=((0.0, 1.0),))
    assert LinearProgram(c=np.ones(3)).n_vars == 3


def test_extension_problem_validation():
    prob = ExtensionProblem(authorized=pr_box(), extension_class=NO_SIGNALLING)
    assert prob.colluder_inputs == 2
    assert prob.colluder_outputs == 2
    with pytest.raises(LpInfeasibleError):
        ExtensionProblem(authorized=pr_box(), extension_class=CLASSICAL)
    with pytest.raises(ValueError, match="unknown extension class"):
        ExtensionProblem(authorized=pr_box(), extension_class="quantum")
    signalling = np.zeros((2, 2, 2, 2))
    for t1, t2 in np.ndindex(2, 2):
        signalling[t1, t2, t2, 0] = 1.0
    with pytest.raises(ValueError, match="signals"):
        ExtensionProblem(
            authorized=Behavior(2, (2, 2), (2, 2), signalling),
            extension_class=NO_SIGNALLING,
        )
    wide = Behavior(2, (2, 3), (2, 2), np.full((2, 3, 2, 2), 0.25))
    with pytest.raises(ValueError, match="capped"):
        ExtensionProblem(authorized=wide, extension_class=NO_SIGNALLING)


def test_classical_vulnerability_exhaustive_vertex_check():
    # P12 at a deterministic vertex is extremal, so admissible classical
    # extensions only vary the third player's function; the LP optimum must
    # match a brute-force maximum over those 4 choices.
    kernel = chsh_kernel()
    for f1 in range(4):
        for f2 in range(4):
            prob = ExtensionProblem(authorized=det_pair(f1, f2), extension_class=CLASSICAL)
            lp_value = collusive_vulnerability(prob, kernel)
            brute = max(game_score(det_pair(f1, f3), kernel) for f3 in range(4))
            assert lp_value == pytest.approx(brute, abs=1e-9), (f1, f2)


def test_best_classical_point_is_fully_shareable():
    p12 = det_pair(0, 0)  # both answer 0: score 3/4
    kernel = chsh_kernel()
    assert game_score(p12, kernel) == pytest.approx(0.75)
    for cls in (CLASSICAL, NO_SIGNALLING):
        prob = ExtensionProblem(authorized=p12, extension_class=cls)
        assert collusive_vulnerability(prob, kernel) == pytest.approx(0.75, abs=1e-9)
        assert anticollusion_capacity(prob) == pytest.approx(0.0, abs=1e-9)
        assert shadow_tv_distance(prob) == pytest.approx(0.0, abs=1e-9)
    assert anti_collusion_power(p12, kernel, kernel, CLASSICAL) == 0.0


def test_pr_box_anchors():
    prob = ExtensionProblem(authorized=pr_box(), extension_class=NO_SIGNALLING)
    kernel = chsh_kernel()
    assert game_score(pr_box(), kernel) == pytest.approx(1.0)
    # monogamy of the extremal box forces the colluder to chance level
    assert collusive_vulnerability(prob, kernel) == pytest.approx(0.5, abs=1e-9)
    cap = anticollusion_capacity(prob)
    dist = shadow_tv_distance(prob)
    assert cap == pytest.approx(0.5, abs=1e-9)
    assert dist == pytest.approx(0.5, abs=1e-9)
    assert abs(cap - dist) < 1e-9


def test_ns_class_dominates_classical():
    rng = np.random.default_rng(3)
    model = random_lhv_model(rng)
    p12 = lhv_behavior(model)
    kernel = chsh_kernel()
    v_c = collusive_vulnerability(
        ExtensionProblem(authorized=p12, extension_class=CLASSICAL), kernel
    )
    v_ns = collusive_vulnerability(
        ExtensionProblem(authorized=p12, extension_class=NO_SIGNALLING), kernel
    )
    assert v_ns >= v_c - 1e-9


def test_lhv_behaviors_have_zero_capacity():
    rng = np.random.default_rng(17)
    for cls in (CLASSICAL, NO_SIGNALLING):
        for _ in range(5):
            p12 = lhv_behavior(random_lhv_model(rng))
            prob = ExtensionProblem(authorized=p12, extension_class=cls)
            assert anticollusion_capacity(prob) == pytest.approx(0.0, abs=1e-8)
            assert shadow_tv_distance(prob) == pytest.approx(0.0, abs=1e-8)


def test_capacity_equals_distance_on_random_ns_corpus():
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(25):
        record = verification_record(random_ns_behavior(rng), NO_SIGNALLING)
        worst = max(worst, record["discrepancy"])
    assert worst < 1e-8


def test_quantum_behavior_capacity_positive():
    p12 = born_behavior(bell_strategy())
    prob = ExtensionProblem(authorized=p12, extension_class=NO_SIGNALLING)
    cap = anticollusion_capacity(prob)
    dist = shadow_tv_distance(prob)
    assert cap > 1e-3  # nonlocal points are not exactly shareable
    assert abs(cap - dist) < 1e-8
    with pytest.raises(LpInfeasibleError):
        ExtensionProblem(authorized=p12, extension_class=CLASSICAL)


def test_collusive_vulnerability_kernel_shape_guard():
    prob = ExtensionProblem(authorized=uniform_pair(), extension_class=NO_SIGNALLING)
    from nonshare.behaviors import GameKernel

    with pytest.raises(ValueError, match="alphabets"):
        collusive_vulnerability(prob, GameKernel(values=np.full((2, 2, 2), 0.5)))


def test_random_lhv_model_is_dyadic():
    rng = np.random.default_rng(5)
    model = random_lhv_model(rng, n_lambda=4, resolution_bits=8)
    assert np.array_equal(model.weights * 256, np.round(model.weights * 256))
    for resp in model.responses:
        assert np.array_equal(resp * 256, np.round(resp * 256))


def test_copied_seed_lower_bounds_classical_lp():
    rng = np.random.default_rng(99)
    kernel = chsh_kernel()
    for _ in range(10):
        model = random_lhv_model(rng)
        p12 = lhv_behavior(model)
        ext = copied_seed_extension(model, model.responses[1])
        assert np.array_equal(marginal(ext, (1, 2)).table, p12.table)
        p13 = relabel_13_to_12(marginal(ext, (1, 3)), reference=p12)
        witness = game_score(p13, kernel)
        a12 = game_score(p12, kernel)
        assert witness == pytest.approx(a12, abs=1e-14)
        prob = ExtensionProblem(authorized=p12, extension_class=CLASSICAL)
        assert collusive_vulnerability(prob, kernel) >= witness - 1e-9


def test_random_ns_behavior_valid():
    rng = np.random.default_rng(12)
    for _ in range(5):
        assert check_no_signalling(random_ns_behavior(rng)).passed


def test_verification_record_and_jsonl():
    rng = np.random.default_rng(8)
    record = verification_record(random_ns_behavior(rng), NO_SIGNALLING)
    assert set(record) == {"behavior", "class", "capacity", "distance", "discrepancy"}
    assert record["class"] == NO_SIGNALLING
    assert record["discrepancy"] == abs(record["capacity"] - record["distance"])
    text = corpus_to_jsonl([record, record])
    lines = text.strip().split("\n")
    assert len(lines) == 2
    parsed = json.loads(lines[0])
    assert parsed["capacity"] == record["capacity"]
