"""Finite-alphabet conditional behaviors and classical hidden-variable models.

A behavior stores P(outputs | inputs) as a dense table indexed by
(joint input, joint output) with parties numbered from 1. Outcome labels use
the 0 <-> +1, 1 <-> -1 convention of :mod:`nonshare.qkernel`.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

NORMALIZATION_TOL = 1e-12
NO_SIGNALLING_TOL = 1e-9


@dataclass(frozen=True)
class Behavior:
    """Conditional distribution P(x_1..x_n | t_1..t_n) on finite alphabets."""

    n_parties: int
    inputs_per_party: tuple[int, ...]
    outputs_per_party: tuple[int, ...]
    table: np.ndarray

    def __post_init__(self) -> None:
        table = np.asarray(self.table, dtype=float)
        shape = tuple(self.inputs_per_party) + tuple(self.outputs_per_party)
        if len(self.inputs_per_party) != self.n_parties or len(self.outputs_per_party) != self.n_parties:
            raise ValueError("alphabet lists must have one entry per party")
        if table.shape != shape:
            raise ValueError(f"table shape {table.shape} does not match alphabets {shape}")
        if table.min() < -NORMALIZATION_TOL:
            raise ValueError("table has a negative probability")
        table = np.where(table < 0.0, 0.0, table)  # clear float dust only
        sums = table.reshape(int(np.prod(self.inputs_per_party)), -1).sum(axis=1)
        if np.max(np.abs(sums - 1.0)) > NORMALIZATION_TOL:
            raise ValueError("a joint-input row does not sum to 1")
        table.flags.writeable = False
        object.__setattr__(self, "table", table)

    @property
    def n_inputs(self) -> int:
        return int(np.prod(self.inputs_per_party))

    def conditional(self, joint_input: tuple[int, ...]) -> np.ndarray:
        """Output distribution for one joint input."""
        return self.table[joint_input]


@dataclass(frozen=True)
class LhvModel:
    """Mixture of product response rules: P = sum_l w(l) prod_i p_i(x|t,l)."""

    weights: np.ndarray
    responses: tuple[np.ndarray, ...]  # per party, shape (n_lambda, inputs, outputs)

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=float)
        responses = tuple(np.asarray(r, dtype=float) for r in self.responses)
        if weights.ndim != 1 or weights.min() < 0 or abs(weights.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValueError("weights must be a probability vector")
        for resp in responses:
            if resp.ndim != 3 or resp.shape[0] != weights.size:
                raise ValueError("response table shape must be (n_lambda, inputs, outputs)")
            if resp.min() < 0 or np.max(np.abs(resp.sum(axis=2) - 1.0)) > NORMALIZATION_TOL:
                raise ValueError("each response row must be a probability vector")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "responses", responses)

    @property
    def n_parties(self) -> int:
        return len(self.responses)


@dataclass(frozen=True)
class GameKernel:
    """Scoring kernel h(x-tuple, t-tuple) in [0, 1] with an input distribution.

    ``values`` is indexed like a behavior table, (joint input, joint output).
    ``pi`` is a distribution over joint inputs; None means uniform.
    """

    values: np.ndarray
    pi: np.ndarray | None = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.min() < 0.0 or values.max() > 1.0:
            raise ValueError("kernel values must lie in [0, 1]")
        object.__setattr__(self, "values", values)
        if self.pi is not None:
            pi = np.asarray(self.pi, dtype=float)
            if pi.min() < 0 or abs(pi.sum() - 1.0) > NORMALIZATION_TOL:
                raise ValueError("input distribution must be a probability vector")
            object.__setattr__(self, "pi", pi)

    def input_distribution(self, n_input_axes: int) -> np.ndarray:
        if self.pi is not None:
            return self.pi
        shape = self.values.shape[:n_input_axes]
        return np.full(shape, 1.0 / float(np.prod(shape)))


def signed_outcomes(labels: np.ndarray) -> np.ndarray:
    """Map outcome labels {0, 1} to values {+1, -1}."""
    return 1 - 2 * np.asarray(labels)


def marginal(p: Behavior, parties: tuple[int, ...]) -> Behavior:
    """Marginal behavior on a subset of parties (1-based, ascending).

    Requires the marginal to be independent of the dropped parties' inputs
    within 1e-9; the returned table averages over the dropped-input choices.
    """
    kept = tuple(sorted(parties))
    if not kept or any(q < 1 or q > p.n_parties for q in kept) or len(set(kept)) != len(kept):
        raise ValueError("parties must be a nonempty subset of 1..n without repeats")
    dropped = [q for q in range(1, p.n_parties + 1) if q not in kept]
    drop_out_axes = tuple(p.n_parties + q - 1 for q in dropped)
    collapsed = p.table.sum(axis=drop_out_axes)
    drop_in_axes = tuple(q - 1 for q in dropped)
    moved = np.moveaxis(collapsed, drop_in_axes, range(len(dropped)))
    choices = moved.reshape(-1, *moved.shape[len(dropped):])
    spread = np.max(np.abs(choices - choices[0])) if choices.shape[0] > 1 else 0.0
    if spread > NO_SIGNALLING_TOL:
        raise ValueError(
            f"signalling input detected: marginal varies by {spread:.3e} over dropped inputs"
        )
    return Behavior(
        n_parties=len(kept),
        inputs_per_party=tuple(p.inputs_per_party[q - 1] for q in kept),
        outputs_per_party=tuple(p.outputs_per_party[q - 1] for q in kept),
        table=choices.mean(axis=0),
    )


@dataclass(frozen=True)
class NoSignallingReport:
    max_residual: float
    passed: bool


def check_no_signalling(p: Behavior, tol: float = NO_SIGNALLING_TOL) -> NoSignallingReport:
    """Largest marginal discrepancy over retained subsets and dropped inputs."""
    worst = 0.0
    for size in range(1, p.n_parties):
        for kept in combinations(range(1, p.n_parties + 1), size):
            dropped = [q for q in range(1, p.n_parties + 1) if q not in kept]
            drop_out_axes = tuple(p.n_parties + q - 1 for q in dropped)
            collapsed = p.table.sum(axis=drop_out_axes)
            drop_in_axes = tuple(q - 1 for q in dropped)
            moved = np.moveaxis(collapsed, drop_in_axes, range(len(dropped)))
            choices = moved.reshape(-1, *moved.shape[len(dropped):])
            if choices.shape[0] > 1:
                worst = max(worst, float(np.max(np.abs(choices - choices[0]))))
    return NoSignallingReport(max_residual=worst, passed=worst <= tol)


def relabel_13_to_12(p13: Behavior, reference: Behavior | None = None) -> Behavior:
    """Reinterpret a (1,3) pair behavior on the (1,2) index pair.

    The table is unchanged; the second slot's alphabets must match the
    reference pair behavior when one is supplied.
    """
    if p13.n_parties != 2:
        raise ValueError("relabelling expects a 2-party behavior")
    if reference is not None:
        if (
            p13.inputs_per_party[1] != reference.inputs_per_party[1]
            or p13.outputs_per_party[1] != reference.outputs_per_party[1]
        ):
            raise ValueError("colluder alphabets do not match the authorized pair")
    return Behavior(
        n_parties=2,
        inputs_per_party=p13.inputs_per_party,
        outputs_per_party=p13.outputs_per_party,
        table=p13.table.copy(),
    )


def _require_same_alphabets(p: Behavior, q: Behavior) -> None:
    if p.inputs_per_party != q.inputs_per_party or p.outputs_per_party != q.outputs_per_party:
        raise ValueError("behaviors live on different alphabets")


def tv_distance(p: Behavior, q: Behavior, pi: np.ndarray | None = None) -> float:
    """Input-averaged total variation sum_t pi(t) (1/2) sum_x |P - Q|.

    Equals sup over kernels 0 <= h <= 1 of <h, P - Q> under the same input
    distribution; pi defaults to uniform.
    """
    _require_same_alphabets(p, q)
    if pi is None:
        pi = np.full(p.inputs_per_party, 1.0 / p.n_inputs)
    diff = np.abs(p.table - q.table).reshape(p.n_inputs, -1).sum(axis=1)
    return float(pi.reshape(-1) @ diff) / 2.0


def game_score(p: Behavior, g: GameKernel) -> float:
    """Expected score sum_t pi(t) sum_x h(x, t) P(x | t)."""
    if g.values.shape != p.table.shape:
        raise ValueError("kernel alphabets do not match the behavior")
    pi = g.input_distribution(p.n_parties)
    cell = (g.values * p.table).reshape(p.n_inputs, -1).sum(axis=1)
    return float(pi.reshape(-1) @ cell)


def chsh_kernel(pi: np.ndarray | None = None) -> GameKernel:
    """Predicate kernel for the game x1 xor x2 = t1 t2 on binary alphabets."""
    values = np.zeros((2, 2, 2, 2))
    for t1, t2, x1, x2 in np.ndindex(2, 2, 2, 2):
        values[t1, t2, x1, x2] = 1.0 if (x1 ^ x2) == (t1 & t2) else 0.0
    return GameKernel(values=values, pi=pi)


def lhv_behavior(model: LhvModel) -> Behavior:
    """Behavior generated by a hidden-variable model; always no-signalling."""
    n = model.n_parties
    table = None
    for lam, w in enumerate(model.weights):
        prod = np.array(w)
        for party in range(n):
            resp = model.responses[party][lam]  # (inputs, outputs)
            prod = np.multiply.outer(prod, resp)
        # interleave to (inputs..., outputs...): axes come as (t1, x1, t2, x2, ...)
        order = [2 * party for party in range(n)] + [2 * party + 1 for party in range(n)]
        term = np.transpose(prod, order)
        table = term if table is None else table + term
    return Behavior(
        n_parties=n,
        inputs_per_party=tuple(r.shape[1] for r in model.responses),
        outputs_per_party=tuple(r.shape[2] for r in model.responses),
        table=table,
    )


def copied_seed_extension(model: LhvModel, p3: np.ndarray) -> Behavior:
    """Extend a 2-party model with a third player reading the same seed.

    ``p3`` has shape (n_lambda, inputs, outputs) like a response table. The
    (1,2) marginal of the result equals ``lhv_behavior(model)`` exactly; with
    ``p3`` a copy of player 2's rule the relabelled (1,3) pair reproduces the
    authorized pair's score on relabelled kernels.
    """
    if model.n_parties != 2:
        raise ValueError("copied-seed extension starts from a 2-party model")
    p3 = np.asarray(p3, dtype=float)
    if p3.ndim != 3 or p3.shape[0] != model.weights.size:
        raise ValueError("third-party response table shape must be (n_lambda, inputs, outputs)")
    if p3.min() < 0 or np.max(np.abs(p3.sum(axis=2) - 1.0)) > NORMALIZATION_TOL:
        raise ValueError("each third-party response row must be a probability vector")
    extended = LhvModel(weights=model.weights, responses=model.responses + (p3,))
    return lhv_behavior(extended)


def deterministic_behaviors(n_parties: int) -> list[np.ndarray]:
    """Tables of all deterministic behaviors on binary alphabets.

    Each player picks one of the 4 functions t -> x, indexed f = 2 x(0) + x(1);
    vertex v enumerates player-major, so for 3 parties v = 16 f1 + 4 f2 + f3.
    This indexing is load-bearing for the LP module.
    """
    tables = []
    functions = [(f >> 1 & 1, f & 1) for f in range(4)]  # f -> (x(t=0), x(t=1))
    for vertex in np.ndindex(*(4,) * n_parties):
        table = np.zeros((2,) * n_parties + (2,) * n_parties)
        for settings in np.ndindex(*(2,) * n_parties):
            outputs = tuple(functions[vertex[p]][settings[p]] for p in range(n_parties))
            table[settings + outputs] = 1.0
        tables.append(table)
    return tables


def pr_box(a: int = 0, b: int = 0, c: int = 0) -> Behavior:
    """Extremal no-signalling box x1 xor x2 = t1 t2 xor a t1 xor b t2 xor c."""
    table = np.zeros((2, 2, 2, 2))
    for t1, t2, x1, x2 in np.ndindex(2, 2, 2, 2):
        if (x1 ^ x2) == ((t1 & t2) ^ (a & t1) ^ (b & t2) ^ c):
            table[t1, t2, x1, x2] = 0.5
    return Behavior(2, (2, 2), (2, 2), table)


def behavior_to_json(p: Behavior) -> dict:
    """JSON form: alphabets plus the row-major table."""
    return {
        "parties": p.n_parties,
        "inputs": list(p.inputs_per_party),
        "outputs": list(p.outputs_per_party),
        "table": [float(v) for v in p.table.reshape(-1)],
    }


def behavior_from_json(data: dict) -> Behavior:
    inputs = tuple(int(v) for v in data["inputs"])
    outputs = tuple(int(v) for v in data["outputs"])
    shape = inputs + outputs
    table = np.asarray(data["table"], dtype=float).reshape(shape)
    return Behavior(int(data["parties"]), inputs, outputs, table)


def lhv_model_to_json(model: LhvModel) -> dict:
    return {
        "weights": [float(w) for w in model.weights],
        "responses": [[[list(map(float, row)) for row in lam] for lam in resp] for resp in model.responses],
    }


def lhv_model_from_json(data: dict) -> LhvModel:
    weights = np.asarray(data["weights"], dtype=float)
    responses = tuple(np.asarray(r, dtype=float) for r in data["responses"])
    return LhvModel(weights=weights, responses=responses)
