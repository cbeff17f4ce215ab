"""Extension-polytope linear programming on binary alphabets.

Desk-scale oracles for the collusion quantities that are polytopic: collusive
vulnerability over classical and no-signalling extension classes, shadow
TV-distance, and the anti-collusion capacity via a merged dual LP. All
problems live on 2-party authorized behaviors with at most 2 inputs and 2
outputs per party; the colluder slot copies party 2's alphabets. Larger
alphabets are rejected so every shipped solve stays exact and fast.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product
from typing import Literal

import numpy as np
from scipy.optimize import linprog

from .behaviors import (
    Behavior,
    GameKernel,
    LhvModel,
    behavior_to_json,
    check_no_signalling,
    deterministic_behaviors,
    game_score,
    pr_box,
)

CLASSICAL = "classical"
NO_SIGNALLING = "no-signalling"
ExtensionClass = Literal["classical", "no-signalling"]

DUALITY_GAP_TOL = 1e-8


class LpInfeasibleError(RuntimeError):
    """The LP has no feasible point (meaningful signal for Classical class)."""


class LpUnboundedError(RuntimeError):
    """The LP objective is unbounded over the feasible region."""


class LpNumericalError(RuntimeError):
    """The solver stopped without a trustworthy optimum."""


@dataclass(frozen=True)
class LinearProgram:
    """Dense LP: optimize c.x subject to a_ub x <= b_ub, a_eq x = b_eq, bounds."""

    c: np.ndarray
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    bounds: tuple[tuple[float | None, float | None], ...] | None = None
    maximize: bool = False

    def __post_init__(self) -> None:
        c = np.asarray(self.c, dtype=float)
        object.__setattr__(self, "c", c)
        for name in ("a_ub", "a_eq"):
            mat = getattr(self, name)
            if mat is not None:
                mat = np.asarray(mat, dtype=float)
                if mat.ndim != 2 or mat.shape[1] != c.size:
                    raise ValueError(f"{name} must be 2-d with {c.size} columns")
                object.__setattr__(self, name, mat)
        for mat_name, rhs_name in (("a_ub", "b_ub"), ("a_eq", "b_eq")):
            mat, rhs = getattr(self, mat_name), getattr(self, rhs_name)
            if (mat is None) != (rhs is None):
                raise ValueError(f"{mat_name} and {rhs_name} must be given together")
            if rhs is not None:
                rhs = np.asarray(rhs, dtype=float)
                if rhs.shape != (mat.shape[0],):
                    raise ValueError(f"{rhs_name} length must match {mat_name} rows")
                object.__setattr__(self, rhs_name, rhs)
        if self.bounds is not None and len(self.bounds) != c.size:
            raise ValueError("bounds must list one (lo, hi) pair per variable")

    @property
    def n_vars(self) -> int:
        return self.c.size


@dataclass(frozen=True)
class LpSolution:
    status: str
    optimum: float
    primal: np.ndarray
    dual_optimum: float

    @property
    def gap(self) -> float:
        return abs(self.optimum - self.dual_optimum)


def lp_solve(lp: LinearProgram) -> LpSolution:
    """Solve with HiGHS; reconstruct the dual objective from the marginals.

    The dual value is b_ub.y_ub + b_eq.y_eq plus the active bound terms, which
    HiGHS returns exactly for basic optimal solutions; gap checks ride on it.
    """
    c = -lp.c if lp.maximize else lp.c
    bounds = lp.bounds if lp.bounds is not None else (0, None)
    res = linprog(
        c,
        A_ub=lp.a_ub,
        b_ub=lp.b_ub,
        A_eq=lp.a_eq,
        b_eq=lp.b_eq,
        bounds=bounds,
        method="highs",
    )
    if res.status == 2:
        raise LpInfeasibleError("LP infeasible: " + res.message)
    if res.status == 3:
        raise LpUnboundedError("LP unbounded: " + res.message)
    if res.status != 0:
        raise LpNumericalError(f"LP solver failure (status {res.status}): " + res.message)
    dual = 0.0
    if lp.b_ub is not None:
        dual += float(lp.b_ub @ res.ineqlin.marginals)
    if lp.b_eq is not None:
        dual += float(lp.b_eq @ res.eqlin.marginals)
    if lp.bounds is not None:
        lo = np.array([b[0] if b[0] is not None else -np.inf for b in lp.bounds])
        hi = np.array([b[1] if b[1] is not None else np.inf for b in lp.bounds])
    else:
        lo = np.zeros(lp.n_vars)
        hi = np.full(lp.n_vars, np.inf)
    lo_fin = np.isfinite(lo)
    hi_fin = np.isfinite(hi)
    dual += float(lo[lo_fin] @ res.lower.marginals[lo_fin])
    dual += float(hi[hi_fin] @ res.upper.marginals[hi_fin])
    sign = -1.0 if lp.maximize else 1.0
    return LpSolution(
        status="optimal",
        optimum=sign * float(res.fun),
        primal=res.x,
        dual_optimum=sign * dual,
    )


def _require_desk_scale(p: Behavior) -> None:
    if p.n_parties != 2:
        raise ValueError("extension problems take a 2-party authorized behavior")
    if max(p.inputs_per_party) > 2 or max(p.outputs_per_party) > 2:
        raise ValueError("alphabets capped at 2 inputs and 2 outputs per party")


def _party_functions(n_inputs: int, n_outputs: int) -> list[tuple[int, ...]]:
    """All deterministic response functions input -> output, lexicographic."""
    return list(product(range(n_outputs), repeat=n_inputs))


@dataclass(frozen=True)
class ExtensionProblem:
    """Collusive-extension instance: authorized pair behavior plus class.

    The colluder's alphabets equal party 2's. The authorized behavior must be
    no-signalling; under the classical class it must additionally admit an
    LHV-mixture decomposition, checked by a feasibility LP at construction.
    """

    authorized: Behavior
    extension_class: ExtensionClass

    def __post_init__(self) -> None:
        _require_desk_scale(self.authorized)
        if self.extension_class not in (CLASSICAL, NO_SIGNALLING):
            raise ValueError(f"unknown extension class {self.extension_class!r}")
        report = check_no_signalling(self.authorized)
        if not report.passed:
            raise ValueError(
                f"authorized behavior signals (residual {report.max_residual:.3e})"
            )
        if self.extension_class == CLASSICAL:
            verts = _pair_vertices(self.authorized)
            a_eq = np.vstack([
                np.stack([v.reshape(-1) for v in verts], axis=1),
                np.ones((1, len(verts))),
            ])
            b_eq = np.concatenate([self.authorized.table.reshape(-1), [1.0]])
            lp = LinearProgram(c=np.zeros(len(verts)), a_eq=a_eq, b_eq=b_eq)
            lp_solve(lp)  # raises LpInfeasibleError for nonclassical input

    @property
    def colluder_inputs(self) -> int:
        return self.authorized.inputs_per_party[1]

    @property
    def colluder_outputs(self) -> int:
        return self.authorized.outputs_per_party[1]


def _pair_vertices(p: Behavior) -> list[np.ndarray]:
    """Deterministic 2-party tables on p's alphabets, player-major order."""
    i1, i2 = p.inputs_per_party
    o1, o2 = p.outputs_per_party
    tables = []
    for f1 in _party_functions(i1, o1):
        for f2 in _party_functions(i2, o2):
            table = np.zeros((i1, i2, o1, o2))
            for t1, t2 in product(range(i1), range(i2)):
                table[t1, t2, f1[t1], f2[t2]] = 1.0
            tables.append(table)
    return tables


def _extension_shape(prob: ExtensionProblem) -> tuple[int, ...]:
    i1, i2 = prob.authorized.inputs_per_party
    o1, o2 = prob.authorized.outputs_per_party
    return (i1, i2, i2, o1, o2, o2)


def _ns_extension_rows(prob: ExtensionProblem) -> tuple[np.ndarray, np.ndarray]:
    """Equality block for the no-signalling extension polytope.

    Rows: per-input-triple normalization; party-wise no-signalling (marginal
    over one party independent of that party's input); and the (1,2)-marginal
    pin Sum_x3 P123 = P12 for every colluder input.
    """
    shape = _extension_shape(prob)
    i1, i2, i3, o1, o2, o3 = shape
    p12 = prob.authorized.table
    rows: list[np.ndarray] = []
    rhs: list[float] = []

    for t in product(range(i1), range(i2), range(i3)):
        a = np.zeros(shape)
        a[t] = 1.0
        rows.append(a.reshape(-1))
        rhs.append(1.0)

    for t3 in range(i3):
        for t1, t2, x1, x2 in product(range(i1), range(i2), range(o1), range(o2)):
            a = np.zeros(shape)
            a[t1, t2, t3, x1, x2, :] = 1.0
            rows.append(a.reshape(-1))
            rhs.append(float(p12[t1, t2, x1, x2]))

    # party k no-signalling: summed-out marginal equal across k's inputs
    input_sizes = (i1, i2, i3)
    for k in range(3):
        others = [q for q in range(3) if q != k]
        for tk in range(1, input_sizes[k]):
            other_inputs = product(*(range(input_sizes[q]) for q in others))
            for t_oth in other_inputs:
                out_ranges = [range(shape[3 + q]) for q in others]
                for x_oth in product(*out_ranges):
                    a = np.zeros(shape)
                    idx_hi: list = [slice(None)] * 6
                    idx_lo: list = [slice(None)] * 6
                    for q, tq in zip(others, t_oth):
                        idx_hi[q] = tq
                        idx_lo[q] = tq
                    for q, xq in zip(others, x_oth):
                        idx_hi[3 + q] = xq
                        idx_lo[3 + q] = xq
                    idx_hi[k] = tk
                    idx_lo[k] = 0
                    a[tuple(idx_hi)] = 1.0
                    a[tuple(idx_lo)] -= 1.0
                    rows.append(a.reshape(-1))
                    rhs.append(0.0)

    return np.array(rows), np.array(rhs)


def _tripartite_vertices(prob: ExtensionProblem) -> list[tuple[tuple[int, ...], ...]]:
    """Deterministic tripartite strategies (f1, f2, f3), player-major order."""
    i1, i2 = prob.authorized.inputs_per_party
    o1, o2 = prob.authorized.outputs_per_party
    f1s = _party_functions(i1, o1)
    f2s = _party_functions(i2, o2)
    return [(f1, f2, f3) for f1 in f1s for f2 in f2s for f3 in f2s]


def _vertex_pair_table(f_a: tuple[int, ...], f_b: tuple[int, ...], shape: tuple[int, ...]) -> np.ndarray:
    ia, ib, oa, ob = shape
    table = np.zeros(shape)
    for ta, tb in product(range(ia), range(ib)):
        table[ta, tb, f_a[ta], f_b[tb]] = 1.0
    return table


def _classical_rows(prob: ExtensionProblem) -> tuple[np.ndarray, np.ndarray]:
    """Equality block for the classical class: mixture weights hit P12."""
    verts = _tripartite_vertices(prob)
    i1, i2 = prob.authorized.inputs_per_party
    o1, o2 = prob.authorized.outputs_per_party
    cols = [
        _vertex_pair_table(f1, f2, (i1, i2, o1, o2)).reshape(-1)
        for f1, f2, _ in verts
    ]
    a_eq = np.vstack([np.stack(cols, axis=1), np.ones((1, len(verts)))])
    b_eq = np.concatenate([prob.authorized.table.reshape(-1), [1.0]])
    return a_eq, b_eq


def _pair13_coefficients(prob: ExtensionProblem) -> np.ndarray:
    """Map from extension variables to the relabelled (1,3) pair table.

    Returns an array with leading axes the (1,3) pair cell (t1, t3, x1, x3)
    and trailing axes the extension variables; the marginal averages over the
    dropped party-2 input, matching the behavior-marginal convention.
    """
    shape = _extension_shape(prob)
    i1, i2, i3, o1, o2, o3 = shape
    if prob.extension_class == NO_SIGNALLING:
        coeff = np.zeros((i1, i3, o1, o3) + shape)
        for t1, t3, x1, x3 in product(range(i1), range(i3), range(o1), range(o3)):
            for t2 in range(i2):
                coeff[t1, t3, x1, x3, t1, t2, t3, x1, :, x3] = 1.0 / i2
        return coeff.reshape((i1, i3, o1, o3, -1))
    verts = _tripartite_vertices(prob)
    coeff = np.zeros((i1, i3, o1, o3, len(verts)))
    for v, (f1, _, f3) in enumerate(verts):
        coeff[..., v] = _vertex_pair_table(f1, f3, (i1, i3, o1, o3))
    return coeff


def _extension_equalities(prob: ExtensionProblem) -> tuple[np.ndarray, np.ndarray]:
    if prob.extension_class == NO_SIGNALLING:
        return _ns_extension_rows(prob)
    return _classical_rows(prob)


def collusive_vulnerability(prob: ExtensionProblem, kernel: GameKernel) -> float:
    """Best relabelled-test score any admissible extension grants the colluder.

    No-signalling class: variables are the full tripartite table under
    normalization, no-signalling, and marginal-pin equalities. Classical
    class: variables are weights over deterministic tripartite strategies.
    """
    i1, i2 = prob.authorized.inputs_per_party
    o1, o2 = prob.authorized.outputs_per_party
    if kernel.values.shape != (i1, i2, o1, o2):
        raise ValueError("kernel must live on the relabelled (1,3) pair alphabets")
    pi = kernel.input_distribution(2)
    cell_weight = pi[:, :, None, None] * kernel.values
    coeff = _pair13_coefficients(prob)
    c = np.tensordot(cell_weight, coeff, axes=4)
    a_eq, b_eq = _extension_equalities(prob)
    sol = lp_solve(LinearProgram(c=c, a_eq=a_eq, b_eq=b_eq, maximize=True))
    return float(sol.optimum)


def shadow_tv_distance(prob: ExtensionProblem) -> float:
    """Distance from the authorized behavior to its collusive shadow.

    Minimizes sum_t pi(t) (1/2) sum_x u(x,t) over extensions and cellwise
    slacks u >= +-(P12 - Q), with Q the relabelled (1,3) marginal and pi
    uniform over input pairs.
    """
    i1, i2 = prob.authorized.inputs_per_party
    o1, o2 = prob.authorized.outputs_per_party
    p12 = prob.authorized.table.reshape(-1)
    n_cells = p12.size
    coeff = _pair13_coefficients(prob).reshape((n_cells, -1))
    n_ext = coeff.shape[1]
    a_eq, b_eq = _extension_equalities(prob)
    a_eq = np.hstack([a_eq, np.zeros((a_eq.shape[0], n_cells))])
    # u_cell >= +-(P12 - Q): two inequality rows per pair cell
    eye = np.eye(n_cells)
    a_ub = np.vstack([
        np.hstack([-coeff, -eye]),
        np.hstack([+coeff, -eye]),
    ])
    b_ub = np.concatenate([-p12, p12])
    c = np.concatenate([np.zeros(n_ext), np.full(n_cells, 0.5 / (i1 * i2))])
    sol = lp_solve(LinearProgram(c=c, a_ub=a_ub, b_ub=b_ub, a_eq=a_eq, b_eq=b_eq))
    return float(sol.optimum)


def anticollusion_capacity(prob: ExtensionProblem) -> float:
    """Value of the best [0,1]-kernel test, by merging the inner LP's dual.

    Computes sup over kernels h in [0,1] of <h, P12> - max_Q <h, Q> with Q
    ranging over the shadow. The inner max over extension variables x
    (max g.x s.t. A x = b, x >= 0 with g = G h) is replaced by its dual
    (min b.nu s.t. A' nu >= G h), giving one LP over (h, nu):

        maximize  <pi h, P12> - b.nu   s.t.  G h - A' nu <= 0, 0 <= h <= 1.
    """
    i1, i2 = prob.authorized.inputs_per_party
    p12 = prob.authorized.table.reshape(-1)
    n_cells = p12.size
    pi_cell = 1.0 / (i1 * i2)
    g_mat = pi_cell * _pair13_coefficients(prob).reshape((n_cells, -1)).T
    a_eq, b_eq = _extension_equalities(prob)
    n_ext, n_eq = g_mat.shape[0], a_eq.shape[0]
    c = np.concatenate([pi_cell * p12, -b_eq])
    a_ub = np.hstack([g_mat, -a_eq.T])
    b_ub = np.zeros(n_ext)
    bounds = tuple([(0.0, 1.0)] * n_cells + [(None, None)] * n_eq)
    sol = lp_solve(LinearProgram(c=c, a_ub=a_ub, b_ub=b_ub, bounds=bounds, maximize=True))
    return max(0.0, float(sol.optimum))


def anti_collusion_power(
    p12: Behavior,
    kernel_a: GameKernel,
    kernel_c: GameKernel,
    extension_class: ExtensionClass,
) -> float:
    """Positive part of authorized score minus collusive vulnerability."""
    prob = ExtensionProblem(authorized=p12, extension_class=extension_class)
    a12 = game_score(p12, kernel_a)
    v13 = collusive_vulnerability(prob, kernel_c)
    return max(0.0, a12 - v13)


def random_ns_behavior(rng: np.random.Generator) -> Behavior:
    """Dirichlet mixture of the 24 binary no-signalling extreme points."""
    tables = deterministic_behaviors(2)
    tables += [pr_box(a, b, c).table for a, b, c in product(range(2), repeat=3)]
    w = rng.dirichlet(np.ones(len(tables)))
    mix = sum(wi * t for wi, t in zip(w, tables))
    return Behavior(2, (2, 2), (2, 2), mix)


def random_lhv_model(
    rng: np.random.Generator, n_lambda: int = 4, resolution_bits: int = 8
) -> LhvModel:
    """Random 2-party model with dyadic weights and response rows.

    Every probability is a multiple of 2**-resolution_bits, so downstream
    products of up to three factors stay exact in double precision; the
    copied-seed equality C13 = A12 then holds bit for bit.
    """
    denom = 2**resolution_bits
    counts = rng.multinomial(denom, rng.dirichlet(np.ones(n_lambda)))
    weights = counts / float(denom)
    responses = []
    for _ in range(2):
        k = rng.integers(0, denom + 1, size=(n_lambda, 2))
        resp = np.stack([k / float(denom), 1.0 - k / float(denom)], axis=2)
        responses.append(resp)
    return LhvModel(weights=weights, responses=tuple(responses))


def verification_record(p12: Behavior, extension_class: ExtensionClass) -> dict:
    """Capacity-equals-distance check for one instance, as a JSON record."""
    prob = ExtensionProblem(authorized=p12, extension_class=extension_class)
    capacity = anticollusion_capacity(prob)
    distance = shadow_tv_distance(prob)
    return {
        "behavior": behavior_to_json(p12),
        "class": extension_class,
        "capacity": capacity,
        "distance": distance,
        "discrepancy": abs(capacity - distance),
    }


def corpus_to_jsonl(records: list[dict]) -> str:
    return "".join(json.dumps(rec) + "\n" for rec in records)
