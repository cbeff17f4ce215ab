"""Level-2 moment-matrix upper bounds for tilted-score collusion envelopes.

Builds the reduced 22-word moment relaxation over three binary-observable
parties, assembles the tilted pair scores

    I12(alpha) = alpha<A0> + <A0B0> + <A0B1> + <A1B0> - <A1B1>
    I13(alpha) = alpha<A0> + <A0C0> + <A0C1> + <A1C0> - <A1C1>

and maximizes I13 subject to the moment matrix being positive semidefinite
and I12 >= s. The relaxation is real symmetrized: one real variable per
adjoint pair of canonical words, an outer approximation of the complex
Hermitian problem. The embedded solver is a homogeneous self-dual conic
splitting (Douglas-Rachford on the optimality embedding) with a dense
factorization, PSD projection by eigendecomposition, and residual-balanced
step-metric adaptation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from math import sqrt

import numpy as np
from scipy.linalg import lu_factor, lu_solve

Word = tuple[str, ...]

LETTERS = ("A0", "A1", "B0", "B1", "C0", "C1")
SQRT2 = sqrt(2.0)

EPS_GAP = 1e-6
EPS_AFFINE = 1e-5
EPS_PSD = 1e-7

DEFAULT_EPS_ABS = 1e-9
DEFAULT_EPS_REL = 1e-9
DEFAULT_MAX_ITERS = 100000


def classical_bound(alpha: float) -> float:
    """Largest tilted score of a local deterministic pair: 2 + alpha."""
    return 2.0 + alpha


def quantum_maximum(alpha: float) -> float:
    """Largest tilted score of any quantum pair: sqrt(8 + 2 alpha^2)."""
    return sqrt(8.0 + 2.0 * alpha * alpha)


def build_word_set() -> list[Word]:
    """The 22 reduced length-<=2 words: identity, singletons, same-party
    products in fixed order, and all cross-party pairs."""
    words: list[Word] = [()]
    words += [(letter,) for letter in LETTERS]
    words += [("A0", "A1"), ("B0", "B1"), ("C0", "C1")]
    for x in ("A0", "A1"):
        for y in ("B0", "B1"):
            words.append((x, y))
    for x in ("A0", "A1"):
        for z in ("C0", "C1"):
            words.append((x, z))
    for y in ("B0", "B1"):
        for z in ("C0", "C1"):
            words.append((y, z))
    return words


def _reduce(word: Word) -> Word:
    """Stable party sort, then cancel adjacent equal letters (X^2 = I).

    Different-party letters commute and are grouped A < B < C; the order of
    letters within one party is preserved, never globally sorted.
    """
    for letter in word:
        if letter not in LETTERS:
            raise ValueError(f"unknown letter {letter!r}")
    ordered = sorted(word, key=lambda letter: letter[0])
    out: list[str] = []
    for letter in ordered:
        if out and out[-1] == letter:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


def canonicalize(word: Word) -> tuple[Word, bool]:
    """Canonical variable key and whether the adjoint orientation was taken.

    The key is the lexicographically smaller of the reduced word and its
    reduced adjoint (letters reversed); real symmetrization identifies the
    two moments, so both map to one variable.
    """
    forward = _reduce(word)
    backward = _reduce(tuple(reversed(word)))
    if backward < forward:
        return backward, True
    return forward, False


@dataclass(frozen=True)
class MomentStructure:
    """Entry map of the moment matrix over canonical word variables.

    ``entry_vars[i, j]`` is the variable id of canonical(row_i^† col_j), or
    -1 where the product reduces to the identity (constant entry 1).
    """

    words: tuple[Word, ...]
    variables: tuple[Word, ...]
    entry_vars: np.ndarray
    self_adjoint: tuple[bool, ...]

    @property
    def n_words(self) -> int:
        return len(self.words)

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    def variable_id(self, word: Word) -> int:
        key, _ = canonicalize(word)
        return self.variables.index(key)


def build_structure(words: list[Word] | None = None) -> MomentStructure:
    word_tuple = tuple(words) if words is not None else tuple(build_word_set())
    n = len(word_tuple)
    index: dict[Word, int] = {}
    variables: list[Word] = []
    entry = np.full((n, n), -1, dtype=np.int64)
    for i, wi in enumerate(word_tuple):
        for j, wj in enumerate(word_tuple):
            key, _ = canonicalize(tuple(reversed(wi)) + wj)
            if key == ():
                continue
            if key not in index:
                index[key] = len(variables)
                variables.append(key)
            entry[i, j] = index[key]
    entry.flags.writeable = False
    self_adj = tuple(key == _reduce(tuple(reversed(key))) for key in variables)
    return MomentStructure(
        words=word_tuple,
        variables=tuple(variables),
        entry_vars=entry,
        self_adjoint=self_adj,
    )


def _score_vector(structure: MomentStructure, alpha: float, partner: str) -> np.ndarray:
    """Coefficients of alpha<A0> + <A0P0> + <A0P1> + <A1P0> - <A1P1>."""
    lookup = {key: k for k, key in enumerate(structure.variables)}
    vec = np.zeros(structure.n_variables)
    terms = [
        (("A0",), alpha),
        (("A0", partner + "0"), 1.0),
        (("A0", partner + "1"), 1.0),
        (("A1", partner + "0"), 1.0),
        (("A1", partner + "1"), -1.0),
    ]
    for word, coeff in terms:
        key, _ = canonicalize(word)
        if key not in lookup:
            raise ValueError(f"word set lacks a variable for {word}")
        vec[lookup[key]] += coeff
    return vec


@dataclass(frozen=True)
class MomentProblem:
    """Assembled instance: maximize objective.y s.t. Gamma(y) >= 0, constraint.y >= s."""

    structure: MomentStructure
    alpha: float
    s: float
    objective: np.ndarray
    constraint: np.ndarray


def assemble(
    alpha: float, s: float, structure: MomentStructure | None = None
) -> MomentProblem:
    if not 0.0 <= alpha <= 2.0:
        raise ValueError("alpha must lie in [0, 2]")
    if s > quantum_maximum(alpha) + 1e-6:
        raise ValueError("threshold s exceeds the quantum maximum")
    structure = structure if structure is not None else build_structure()
    return MomentProblem(
        structure=structure,
        alpha=float(alpha),
        s=float(s),
        objective=_score_vector(structure, alpha, "C"),
        constraint=_score_vector(structure, alpha, "B"),
    )


@dataclass(frozen=True)
class MomentSolution:
    """Solver output with the five certificate diagnostics."""

    primal: float
    dual: float
    gap: float
    max_residual: float
    min_eig: float
    status: str
    certified: bool
    iterations: int
    moments: np.ndarray | None
    gamma: np.ndarray | None


def certify_point(sol: MomentSolution) -> bool:
    """Five-way conjunction: optimal status, dual present, small gap,
    small affine residual, moment matrix PSD up to eigenvalue tolerance."""
    return bool(
        sol.status == "optimal"
        and np.isfinite(sol.dual)
        and sol.gap < EPS_GAP
        and sol.max_residual < EPS_AFFINE
        and sol.min_eig >= -EPS_PSD
    )


class _SvecOps:
    """Isometric packing of symmetric matrices into R^(d(d+1)/2)."""

    def __init__(self, d: int) -> None:
        self.d = d
        self.rows, self.cols = np.tril_indices(d)
        self.scale = np.where(self.rows == self.cols, 1.0, SQRT2)

    @property
    def dim(self) -> int:
        return self.rows.size

    def svec(self, mat: np.ndarray) -> np.ndarray:
        return mat[self.rows, self.cols] * self.scale

    def smat(self, vec: np.ndarray) -> np.ndarray:
        mat = np.zeros((self.d, self.d))
        mat[self.rows, self.cols] = vec / self.scale
        mat = mat + mat.T
        mat[np.diag_indices(self.d)] *= 0.5
        return mat


def _conic_data(prob: MomentProblem, ops: _SvecOps) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Standard form min c.x, A x + slack = b, slack in R+ x PSD(d).

    Row 0 carries the threshold inequality; the PSD block pins the svec of
    Gamma(x) = G0 + sum_k x_k G_k with G0 the identity contribution.
    """
    entry = prob.structure.entry_vars
    n = prob.structure.n_variables
    m = 1 + ops.dim
    a_mat = np.zeros((m, n))
    b_vec = np.zeros(m)
    a_mat[0, :] = -prob.constraint
    b_vec[0] = -prob.s
    entry_tril = entry[ops.rows, ops.cols]
    for slot, (var, sc) in enumerate(zip(entry_tril, ops.scale)):
        if var >= 0:
            a_mat[1 + slot, var] = -sc
        else:
            b_vec[1 + slot] = sc
    c_vec = -prob.objective
    return a_mat, b_vec, c_vec


def moment_matrix(prob: MomentProblem, x: np.ndarray) -> np.ndarray:
    """Gamma(x): identity at constant entries, x_k at entries of variable k."""
    entry = prob.structure.entry_vars
    gamma = (entry == -1).astype(float)
    np.copyto(gamma, x[entry], where=entry >= 0)
    return gamma


def sdp_solve(
    prob: MomentProblem,
    *,
    eps_abs: float = DEFAULT_EPS_ABS,
    eps_rel: float = DEFAULT_EPS_REL,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> MomentSolution:
    """Homogeneous self-dual embedding solved by relaxed Douglas-Rachford.

    The embedding variable u = (x, y, tau) is split against the cone
    C = R^n x (R+ x PSD) x R+ and the skew optimality operator Q; the metric
    weights the y block by sigma, re-balanced when the primal and dual
    residuals drift apart. The fixed-point sequence is Anderson-accelerated
    with a residual-decrease safeguard. Termination uses unscaled residual
    and gap thresholds eps_abs + eps_rel * (1 + scale).
    """
    ops = _SvecOps(prob.structure.n_words)
    a_mat, b_vec, c_vec = _conic_data(prob, ops)
    m, n = a_mat.shape
    dim = n + m + 1
    q_mat = np.zeros((dim, dim))
    q_mat[:n, n : n + m] = a_mat.T
    q_mat[n : n + m, :n] = -a_mat
    q_mat[:n, -1] = c_vec
    q_mat[-1, :n] = -c_vec
    q_mat[n : n + m, -1] = b_vec
    q_mat[-1, n : n + m] = -b_vec

    def factor(sig: float):
        m_diag = np.concatenate([np.ones(n), np.full(m, sig), [1.0]])
        return m_diag, lu_factor(np.diag(m_diag) + q_mat)

    def project(z: np.ndarray) -> np.ndarray:
        u = z.copy()
        u[n] = max(z[n], 0.0)
        mat = ops.smat(z[n + 1 : n + m])
        eigvals, eigvecs = np.linalg.eigh(mat)
        np.clip(eigvals, 0.0, None, out=eigvals)
        u[n + 1 : n + m] = ops.svec((eigvecs * eigvals) @ eigvecs.T)
        u[-1] = max(z[-1], 0.0)
        return u

    sigma = 1.0
    m_diag, lu = factor(sigma)
    relax = 1.5

    def step_residual(z: np.ndarray) -> np.ndarray:
        u = project(z)
        w = lu_solve(lu, m_diag * (2.0 * u - z))
        return relax * (w - u)

    z = np.zeros(dim)
    z[-1] = 1.0
    b_norm = float(np.linalg.norm(b_vec))
    c_norm = float(np.linalg.norm(c_vec))
    check_every = 50
    next_adapt = 200
    eps_cert = 1e-10
    aa_memory = 10
    status = "optimal_inaccurate"
    iterations = max_iters
    z_hist: list[np.ndarray] = []
    g_hist: list[np.ndarray] = []
    g = step_residual(z)

    for it in range(1, max_iters + 1):
        z_hist.append(z.copy())
        g_hist.append(g.copy())
        if len(z_hist) > aa_memory + 1:
            z_hist.pop(0)
            g_hist.pop(0)
        accepted = False
        if len(z_hist) >= 3:
            dz = np.stack([z_hist[i + 1] - z_hist[i] for i in range(len(z_hist) - 1)], axis=1)
            dg = np.stack([g_hist[i + 1] - g_hist[i] for i in range(len(g_hist) - 1)], axis=1)
            coeff, *_ = np.linalg.lstsq(dg, g, rcond=None)
            z_aa = z + g - (dz + dg) @ coeff
            g_aa = step_residual(z_aa)
            if np.linalg.norm(g_aa) < np.linalg.norm(g):
                z, g, accepted = z_aa, g_aa, True
        if not accepted:
            z = z + g
            g = step_residual(z)
        if it % check_every != 0 and it != max_iters:
            continue
        u = project(z)
        tau = u[-1]
        u_y = u[n : n + m]
        slack_raw = sigma * (u_y - z[n : n + m])
        pres = dres = np.inf
        if tau > 1e-12:
            x = u[:n] / tau
            y = u_y / tau
            slack = slack_raw / tau
            pres = float(np.linalg.norm(a_mat @ x + slack - b_vec))
            dres = float(np.linalg.norm(a_mat.T @ y + c_vec))
            pobj = float(c_vec @ x)
            dobj = float(-b_vec @ y)
            gap = abs(pobj - dobj)
            if (
                pres <= eps_abs + eps_rel * (1.0 + b_norm)
                and dres <= eps_abs + eps_rel * (1.0 + c_norm)
                and gap <= eps_abs + eps_rel * (1.0 + abs(pobj) + abs(dobj))
            ):
                status = "optimal"
                iterations = it
                break
        bty = float(b_vec @ u_y)
        if bty < -1e-12:
            y_cert = u_y / (-bty)
            if float(np.linalg.norm(a_mat.T @ y_cert)) <= eps_cert:
                status = "infeasible"
                iterations = it
                break
        ctx = float(c_vec @ u[:n])
        if ctx < -1e-12:
            x_cert = u[:n] / (-ctx)
            s_cert = slack_raw / (-ctx)
            if float(np.linalg.norm(a_mat @ x_cert + s_cert)) <= eps_cert:
                status = "unbounded"
                iterations = it
                break
        if it >= next_adapt and np.isfinite(pres) and np.isfinite(dres):
            next_adapt *= 2
            pres_rel = pres / (1.0 + b_norm)
            dres_rel = dres / (1.0 + c_norm)
            ratio = pres_rel / max(dres_rel, 1e-300)
            balance = float(np.clip(sqrt(ratio), 0.1, 10.0))
            if abs(balance - 1.0) > 1e-3:
                # residual imbalance: a dominant primal residual calls for a
                # smaller y-metric weight, and vice versa
                new_sigma = sigma / balance
                z[n : n + m] = u_y - sigma * (u_y - z[n : n + m]) / new_sigma
                sigma = new_sigma
                m_diag, lu = factor(sigma)
                z_hist.clear()
                g_hist.clear()
                g = step_residual(z)

    u = project(z)
    tau = u[-1]
    if status in ("infeasible", "unbounded") or tau <= 1e-12:
        return MomentSolution(
            primal=float("nan"),
            dual=float("nan"),
            gap=float("inf"),
            max_residual=float("inf"),
            min_eig=float("-inf"),
            status=status,
            certified=False,
            iterations=iterations,
            moments=None,
            gamma=None,
        )
    x = u[:n] / tau
    y = u[n : n + m] / tau
    slack = sigma * (u[n : n + m] - z[n : n + m]) / tau
    pres = float(np.linalg.norm(a_mat @ x + slack - b_vec))
    dres = float(np.linalg.norm(a_mat.T @ y + c_vec))
    primal = float(-(c_vec @ x))
    dual = float(b_vec @ y)
    gamma = moment_matrix(prob, x)
    min_eig = float(np.linalg.eigvalsh(gamma)[0])
    sol = MomentSolution(
        primal=primal,
        dual=dual,
        gap=abs(primal - dual),
        max_residual=max(pres, dres),
        min_eig=min_eig,
        status=status,
        certified=False,
        iterations=iterations,
        moments=x,
        gamma=gamma,
    )
    return replace(sol, certified=certify_point(sol))


@dataclass(frozen=True)
class ScanRow:
    alpha: float
    s: float
    primal: float
    dual: float
    gap: float
    max_residual: float
    min_eig: float
    status: str
    certified: bool


def scan(
    alphas: list[float],
    grid_points: int = 60,
    *,
    eps_abs: float = DEFAULT_EPS_ABS,
    eps_rel: float = DEFAULT_EPS_REL,
    max_iters: int = DEFAULT_MAX_ITERS,
    structure: MomentStructure | None = None,
) -> list[ScanRow]:
    """Per-tilt threshold grids from the classical bound to the quantum
    maximum, inclusive, each point solved and flagged."""
    if grid_points < 2:
        raise ValueError("grid needs at least 2 points")
    structure = structure if structure is not None else build_structure()
    rows: list[ScanRow] = []
    for alpha in alphas:
        grid = np.linspace(classical_bound(alpha), quantum_maximum(alpha), grid_points)
        for s in grid:
            prob = assemble(float(alpha), float(s), structure)
            sol = sdp_solve(prob, eps_abs=eps_abs, eps_rel=eps_rel, max_iters=max_iters)
            rows.append(
                ScanRow(
                    alpha=float(alpha),
                    s=float(s),
                    primal=sol.primal,
                    dual=sol.dual,
                    gap=sol.gap,
                    max_residual=sol.max_residual,
                    min_eig=sol.min_eig,
                    status=sol.status,
                    certified=sol.certified,
                )
            )
    return rows


@dataclass(frozen=True)
class SanityReport:
    max_dev: float
    mean_dev: float
    certified_mask: tuple[bool, ...]
    rows: tuple[ScanRow, ...]


def alpha0_sanity(
    grid_points: int = 60,
    *,
    eps_abs: float = DEFAULT_EPS_ABS,
    eps_rel: float = DEFAULT_EPS_REL,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> SanityReport:
    """Deviation of certified untilted bounds from sqrt(8 - s^2)."""
    rows = scan([0.0], grid_points, eps_abs=eps_abs, eps_rel=eps_rel, max_iters=max_iters)
    devs = []
    for row in rows:
        if not row.certified:
            continue
        analytic = sqrt(max(0.0, (2.0 * SQRT2 - row.s) * (2.0 * SQRT2 + row.s)))
        devs.append(abs(row.primal - analytic))
    return SanityReport(
        max_dev=max(devs) if devs else float("nan"),
        mean_dev=float(np.mean(devs)) if devs else float("nan"),
        certified_mask=tuple(row.certified for row in rows),
        rows=tuple(rows),
    )


CSV_HEADER = "alpha,s,primal,dual,gap,max_residual,min_eig,status,certified"


def scan_to_csv(rows: list[ScanRow]) -> str:
    """Diagnostic table, floats at 9 significant digits."""
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r.alpha:.9g},{r.s:.9g},{r.primal:.9g},{r.dual:.9g},{r.gap:.9g},"
            f"{r.max_residual:.9g},{r.min_eig:.9g},{r.status},{'yes' if r.certified else 'no'}"
        )
    return "\n".join(lines) + "\n"


def word_to_str(word: Word) -> str:
    return "I" if not word else "".join(word)


def problem_to_json(prob: MomentProblem) -> str:
    """Dump of variables, entry map, and the two score vectors for
    external cross-validation."""
    st = prob.structure
    payload = {
        "alpha": prob.alpha,
        "s": prob.s,
        "words": [word_to_str(w) for w in st.words],
        "variables": [
            {"id": k, "word": word_to_str(key), "self_adjoint": st.self_adjoint[k]}
            for k, key in enumerate(st.variables)
        ],
        "entry_map": [[int(v) for v in row] for row in st.entry_vars],
        "objective": {
            word_to_str(st.variables[k]): float(coeff)
            for k, coeff in enumerate(prob.objective)
            if coeff != 0.0
        },
        "constraint": {
            word_to_str(st.variables[k]): float(coeff)
            for k, coeff in enumerate(prob.constraint)
            if coeff != 0.0
        },
        "threshold": prob.s,
    }
    return json.dumps(payload, indent=2) + "\n"
