"""Moment-matrix relaxation: word algebra, assembly, solver, scan, IO."""

import json
from dataclasses import replace
from math import sqrt

import numpy as np
import pytest

from nonshare.npa import (
    CSV_HEADER,
    DEFAULT_MAX_ITERS,
    MomentSolution,
    alpha0_sanity,
    assemble,
    build_structure,
    build_word_set,
    canonicalize,
    certify_point,
    classical_bound,
    moment_matrix,
    problem_to_json,
    quantum_maximum,
    scan,
    scan_to_csv,
    sdp_solve,
    word_to_str,
)

STRUCTURE = build_structure()


def test_bounds_formulas():
    assert classical_bound(0.0) == 2.0
    assert classical_bound(1.5) == 3.5
    assert quantum_maximum(0.0) == pytest.approx(2.0 * sqrt(2.0), abs=1e-15)
    assert quantum_maximum(1.0) == pytest.approx(sqrt(10.0), abs=1e-15)
    for alpha in (0.0, 0.5, 1.0, 1.5):
        assert quantum_maximum(alpha) > classical_bound(alpha)
    assert quantum_maximum(2.0) == pytest.approx(classical_bound(2.0), abs=1e-12)


def test_word_set_contents():
    words = build_word_set()
    assert len(words) == 22
    assert words[0] == ()
    assert ("A0",) in words and ("C1",) in words
    assert ("A0", "A1") in words
    assert ("A1", "A0") not in words  # adjoint orientation excluded
    cross = [w for w in words if len(w) == 2 and w[0][0] != w[1][0]]
    assert len(cross) == 12


def test_canonicalize_rules():
    assert canonicalize(("B0", "A0")) == (("A0", "B0"), False)
    assert canonicalize(("A0", "A0")) == ((), False)
    assert canonicalize(("A1", "A0")) == (("A0", "A1"), True)
    assert canonicalize(("A0", "A1", "A1")) == (("A0",), False)
    assert canonicalize(("C0", "A1", "B0")) == (("A1", "B0", "C0"), False)
    # canonical keys are fixed points
    key, _ = canonicalize(("C1", "B0", "A1", "A0"))
    assert canonicalize(key)[0] == key
    with pytest.raises(ValueError, match="unknown letter"):
        canonicalize(("D0",))


def test_structure_shape_and_symmetry():
    st = STRUCTURE
    assert st.n_words == 22
    assert st.n_variables == 74
    assert st.entry_vars.shape == (22, 22)
    assert np.array_equal(st.entry_vars, st.entry_vars.T)
    assert np.all(np.diag(st.entry_vars) == -1)  # w^† w = identity
    assert not st.entry_vars.flags.writeable
    assert st.variable_id(("B0", "A0")) == st.variable_id(("A0", "B0"))
    # every referenced variable id is in range
    used = st.entry_vars[st.entry_vars >= 0]
    assert used.min() >= 0 and used.max() == st.n_variables - 1
    assert set(np.unique(used)) == set(range(st.n_variables))


def test_assemble_score_vectors():
    prob = assemble(0.5, 2.6, STRUCTURE)
    st = prob.structure
    obj = {st.variables[k]: v for k, v in enumerate(prob.objective) if v != 0.0}
    assert obj[("A0",)] == 0.5
    assert obj[("A0", "C0")] == 1.0
    assert obj[("A1", "C1")] == -1.0
    assert len(obj) == 5
    con = {st.variables[k]: v for k, v in enumerate(prob.constraint) if v != 0.0}
    assert con[("A0", "B0")] == 1.0
    assert ("A0", "C0") not in con
    untilted = assemble(0.0, 2.5, STRUCTURE)
    assert untilted.objective[st.variables.index(("A0",))] == 0.0


def test_assemble_range_guards():
    with pytest.raises(ValueError, match="alpha"):
        assemble(-0.1, 2.5)
    with pytest.raises(ValueError, match="alpha"):
        assemble(2.5, 2.5)
    with pytest.raises(ValueError, match="quantum maximum"):
        assemble(0.0, 3.0)


def test_moment_matrix_at_zero_vector():
    prob = assemble(0.0, 2.5, STRUCTURE)
    gamma = moment_matrix(prob, np.zeros(STRUCTURE.n_variables))
    assert gamma.shape == (22, 22)
    assert np.array_equal(gamma, np.eye(22))


def frozen_rows():
    # independently cross-checked upper bounds for fast interior thresholds
    return [
        (0.0, 2.0, 2.0000000),
        (0.0, 2.407216, 1.4850290),
        (0.5, 2.5, 2.5000000),
        (1.0, 3.082475, 2.6966101),
    ]


@pytest.mark.parametrize("alpha,s,expected", frozen_rows())
def test_sdp_solve_frozen_interior_points(alpha, s, expected):
    sol = sdp_solve(assemble(alpha, s, STRUCTURE))
    assert sol.status == "optimal"
    assert sol.certified
    assert sol.primal == pytest.approx(expected, abs=5e-6)
    assert sol.gap < 1e-6
    assert sol.max_residual < 1e-5
    assert sol.min_eig >= -1e-7
    assert 0 < sol.iterations <= DEFAULT_MAX_ITERS
    assert sol.moments is not None and sol.moments.shape == (74,)
    assert sol.gamma is not None and sol.gamma.shape == (22, 22)
    assert np.allclose(sol.gamma, moment_matrix(assemble(alpha, s, STRUCTURE), sol.moments))


def test_sdp_solve_detects_infeasible_threshold():
    base = assemble(0.0, 2.5, STRUCTURE)
    impossible = replace(base, s=4.0)  # beyond any quantum score
    sol = sdp_solve(impossible)
    assert sol.status == "infeasible"
    assert not sol.certified
    assert not np.isfinite(sol.primal)


def test_level_one_relaxation_is_strictly_looser():
    level1 = build_structure([()] + list(build_word_set()[1:7]))
    loose = sdp_solve(assemble(0.0, 2.5, level1))
    tight = sdp_solve(assemble(0.0, 2.5, STRUCTURE))
    assert loose.certified and tight.certified
    assert loose.primal > tight.primal + 0.1


def test_partner_swap_symmetry():
    # exchanging the roles of the two partner parties leaves the value fixed
    prob = assemble(0.5, 2.6, STRUCTURE)
    swapped = replace(prob, objective=prob.constraint, constraint=prob.objective)
    a = sdp_solve(prob)
    b = sdp_solve(swapped)
    assert a.certified and b.certified
    assert a.primal == pytest.approx(b.primal, abs=5e-6)


def test_certify_point_conjunction():
    good = MomentSolution(
        primal=1.0, dual=1.0, gap=1e-8, max_residual=1e-7, min_eig=-1e-9,
        status="optimal", certified=False, iterations=10, moments=None, gamma=None,
    )
    assert certify_point(good)
    assert not certify_point(replace(good, status="optimal_inaccurate"))
    assert not certify_point(replace(good, gap=1.7e-4))
    assert not certify_point(replace(good, max_residual=2e-5))
    assert not certify_point(replace(good, min_eig=-1e-6))
    assert not certify_point(replace(good, dual=float("nan")))


def test_scan_grid_layout_and_monotonicity():
    rows = scan([1.5], grid_points=4, max_iters=20000)
    assert len(rows) == 4
    assert rows[0].s == pytest.approx(3.5)
    assert rows[-1].s == pytest.approx(quantum_maximum(1.5), abs=1e-12)
    assert rows[0].certified
    assert rows[0].primal == pytest.approx(3.5, abs=5e-6)
    certified = [r for r in rows if r.certified]
    for earlier, later in zip(certified, certified[1:]):
        assert later.primal <= earlier.primal + 1e-6
    with pytest.raises(ValueError):
        scan([0.0], grid_points=1)


def test_alpha0_sanity_small_grid():
    report = alpha0_sanity(grid_points=4, max_iters=20000)
    assert len(report.certified_mask) == 4
    assert report.max_dev < 1e-6
    assert report.mean_dev <= report.max_dev
    for row, ok in zip(report.rows, report.certified_mask):
        assert row.certified == ok


def test_scan_to_csv_format():
    rows = scan([1.5], grid_points=2, max_iters=3000)
    text = scan_to_csv(rows)
    lines = text.strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == 3
    first = lines[1].split(",")
    assert first[0] == "1.5"
    assert first[-1] in ("yes", "no")
    float(first[2])  # primal parses


def test_word_to_str():
    assert word_to_str(()) == "I"
    assert word_to_str(("A0", "B1")) == "A0B1"


def test_problem_to_json_payload():
    payload = json.loads(problem_to_json(assemble(0.5, 2.6, STRUCTURE)))
    assert payload["alpha"] == 0.5
    assert payload["threshold"] == 2.6
    assert len(payload["words"]) == 22
    assert len(payload["variables"]) == 74
    assert len(payload["entry_map"]) == 22
    assert payload["objective"]["A0C0"] == 1.0
    assert payload["objective"]["A0"] == 0.5
    assert payload["constraint"]["A1B1"] == -1.0
    ids = [v["id"] for v in payload["variables"]]
    assert ids == list(range(74))
