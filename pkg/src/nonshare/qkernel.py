"""Dense complex linear algebra for 2- and 3-qubit states and binary observables.

Conventions used throughout the package:

- Party 1 is the leftmost tensor factor; basis indices are big-endian in
  party order, so ``|110>`` means party 1 and 2 in state 1, party 3 in 0.
- A binary observable O has outcomes +1 and -1 with projectors (I +- O)/2.
  Outcome label 0 corresponds to +1 and label 1 to -1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import cos, sin, sqrt

import numpy as np

SQRT2 = sqrt(2.0)
TSIRELSON = 2.0 * SQRT2

HERMITICITY_TOL = 1e-10
NORM_TOL = 1e-12
IMAG_TOL = 1e-8

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


@dataclass(frozen=True)
class Ket:
    """Pure state vector with unit norm."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amp = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amp)
        if amp.ndim != 1 or amp.size & (amp.size - 1):
            raise ValueError("amplitude vector length must be a power of 2")
        if abs(np.vdot(amp, amp).real - 1.0) > NORM_TOL:
            raise ValueError("state vector is not normalized")

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> DensityOp:
        return DensityOp(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityOp:
    """Density operator: Hermitian, unit trace, positive semidefinite."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("density operator must be a square matrix")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-12:
            raise ValueError("density operator is not Hermitian")
        mat = (mat + mat.conj().T) / 2.0
        object.__setattr__(self, "matrix", mat)
        if abs(np.trace(mat).real - 1.0) > NORM_TOL:
            raise ValueError("density operator trace is not 1")
        if np.linalg.eigvalsh(mat).min() < -1e-10:
            raise ValueError("density operator has a negative eigenvalue")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Observable:
    """Single-qubit self-adjoint contraction assigned to one party.

    Spectrum must lie in [-1, 1]; binary observables additionally square to
    the identity.
    """

    matrix: np.ndarray
    party: int
    label: str = ""

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=complex)
        if np.max(np.abs(mat - mat.conj().T)) > HERMITICITY_TOL:
            raise ValueError("observable is not Hermitian")
        mat = (mat + mat.conj().T) / 2.0
        object.__setattr__(self, "matrix", mat)
        eig = np.linalg.eigvalsh(mat)
        if eig.min() < -1.0 - HERMITICITY_TOL or eig.max() > 1.0 + HERMITICITY_TOL:
            raise ValueError("observable spectrum is outside [-1, 1]")

    @property
    def is_binary(self) -> bool:
        mat = self.matrix
        return bool(np.max(np.abs(mat @ mat - np.eye(mat.shape[0]))) <= HERMITICITY_TOL)


@dataclass(frozen=True)
class QuantumStrategy:
    """State shared by n parties plus one pair of binary observables per party."""

    state: Ket | DensityOp
    observables: tuple[tuple[np.ndarray, np.ndarray], ...]
    party_dims: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        dims = self.party_dims or tuple(2 for _ in self.observables)
        obs = tuple(
            (np.asarray(o0, dtype=complex), np.asarray(o1, dtype=complex))
            for o0, o1 in self.observables
        )
        object.__setattr__(self, "observables", obs)
        object.__setattr__(self, "party_dims", dims)
        if int(np.prod(dims)) != self.state.dim:
            raise ValueError("party dimensions do not multiply to the state dimension")
        for d, (o0, o1) in zip(dims, obs):
            if o0.shape != (d, d) or o1.shape != (d, d):
                raise ValueError("observable dimension does not match its party")

    @property
    def n_parties(self) -> int:
        return len(self.party_dims)


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two square operators."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ValueError("tensor expects square operators")
    return np.kron(a, b)


def _as_matrix(obs: Observable | np.ndarray) -> np.ndarray:
    if isinstance(obs, Observable):
        return obs.matrix
    return np.asarray(obs, dtype=complex)


def expectation(state: Ket | DensityOp, obs: np.ndarray) -> float:
    """Real expectation value <obs> in the given state.

    Raises if dimensions mismatch or the imaginary part exceeds 1e-8, which
    signals a non-Hermitian operator.
    """
    obs = _as_matrix(obs)
    if obs.shape != (state.dim, state.dim):
        raise ValueError("operator dimension does not match the state")
    if isinstance(state, Ket):
        value = complex(np.vdot(state.amplitudes, obs @ state.amplitudes))
    else:
        value = complex(np.trace(state.matrix @ obs))
    if abs(value.imag) > IMAG_TOL:
        raise ValueError("expectation value has a non-negligible imaginary part")
    return value.real


def bell_state() -> Ket:
    """Maximally entangled two-qubit state (|00> + |11>)/sqrt(2)."""
    amp = np.zeros(4, dtype=complex)
    amp[0] = amp[3] = 1.0 / SQRT2
    return Ket(amp)


def werner_state(eta: float) -> DensityOp:
    """Bell state mixed with white noise: eta |phi><phi| + (1 - eta) I/4."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError("noise parameter must lie in [0, 1]")
    phi = bell_state().density().matrix
    return DensityOp(eta * phi + (1.0 - eta) * np.eye(4) / 4.0)


def tightness_state(theta: float) -> Ket:
    """Three-qubit state (cos t |110> + sin t |101> + |011>)/sqrt(2).

    Its (1,2) and (1,3) pair scores trace the quarter-circle
    s12 = 2 sqrt(2) sin t, s13 = 2 sqrt(2) cos t under the shared settings
    returned by :func:`pair_settings`.
    """
    if not 0.0 <= theta <= np.pi / 2.0:
        raise ValueError("theta must lie in [0, pi/2]")
    amp = np.zeros(8, dtype=complex)
    amp[0b110] = cos(theta) / SQRT2
    amp[0b101] = sin(theta) / SQRT2
    amp[0b011] = 1.0 / SQRT2
    return Ket(amp)


def bell_settings() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Observable pairs (A0, A1, B0, B1) with score +2 sqrt(2) on the Bell state.

    A0 = X, A1 = Y, B0 = (X - Y)/sqrt(2), B1 = (X + Y)/sqrt(2). With B0 and
    B1 swapped the same settings score 0 on the Bell state, because
    <Y(x)Y> = -1 there; the order below is the maximizing one.
    """
    b0 = (SIGMA_X - SIGMA_Y) / SQRT2
    b1 = (SIGMA_X + SIGMA_Y) / SQRT2
    return SIGMA_X, SIGMA_Y, b0, b1


def pair_settings() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Shared settings for the quarter-circle construction.

    A0 = X, A1 = Y for party 1; both other parties use
    O0 = (X + Y)/sqrt(2), O1 = (X - Y)/sqrt(2). On :func:`tightness_state`
    the pair marginals are triplet-like, which flips the sign of <YY>
    relative to the Bell state and makes this order the maximizing one.
    """
    o0 = (SIGMA_X + SIGMA_Y) / SQRT2
    o1 = (SIGMA_X - SIGMA_Y) / SQRT2
    return SIGMA_X, SIGMA_Y, o0, o1


def _lift(obs: np.ndarray, party: int, n_parties: int) -> np.ndarray:
    """Embed a single-qubit operator at a 1-based party slot."""
    out = np.eye(1, dtype=complex)
    for slot in range(1, n_parties + 1):
        out = np.kron(out, obs if slot == party else I2)
    return out


def chsh_score(
    state: Ket | DensityOp,
    a0: Observable | np.ndarray,
    a1: Observable | np.ndarray,
    b0: Observable | np.ndarray,
    b1: Observable | np.ndarray,
    party_a: int = 1,
    party_b: int = 2,
) -> float:
    """Signed CHSH score <A0B0> + <A0B1> + <A1B0> - <A1B1> on a party pair.

    ``party_a`` and ``party_b`` are 1-based tensor slots; all parties are
    qubits.
    """
    if party_a == party_b:
        raise ValueError("parties must be distinct")
    n_parties = state.dim.bit_length() - 1
    if 2 ** n_parties != state.dim:
        raise ValueError("state dimension is not a power of 2")
    if not (1 <= party_a <= n_parties and 1 <= party_b <= n_parties):
        raise ValueError("party index out of range")
    a_ops = [_lift(_as_matrix(a0), party_a, n_parties), _lift(_as_matrix(a1), party_a, n_parties)]
    b_ops = [_lift(_as_matrix(b0), party_b, n_parties), _lift(_as_matrix(b1), party_b, n_parties)]
    corr = [[expectation(state, a_ops[x] @ b_ops[y]) for y in (0, 1)] for x in (0, 1)]
    return corr[0][0] + corr[0][1] + corr[1][0] - corr[1][1]


def fidelity_with_pure(rho: DensityOp | Ket, psi: Ket) -> float:
    """Fidelity sqrt(<psi| rho |psi>) with a pure target state."""
    if isinstance(rho, Ket):
        rho = rho.density()
    if rho.dim != psi.dim:
        raise ValueError("state dimensions do not match")
    overlap = expectation(rho, np.outer(psi.amplitudes, psi.amplitudes.conj()))
    return sqrt(min(max(overlap, 0.0), 1.0))


def born_behavior(strategy: QuantumStrategy, n_settings: int = 2, n_outcomes: int = 2):
    """Conditional behavior induced by the strategy under the Born rule.

    Only binary projective observables are supported: outcomes +-1 map to
    projectors (I +- O)/2 and outcome labels follow the 0 <-> +1 convention.
    The result is fully no-signalling up to floating-point error.
    """
    from .behaviors import Behavior

    if n_settings != 2 or n_outcomes != 2:
        raise ValueError("only binary settings and outcomes are supported")
    n = strategy.n_parties
    state = strategy.state if isinstance(strategy.state, DensityOp) else strategy.state.density()
    projectors: list[list[list[np.ndarray]]] = []
    for party, (o0, o1) in enumerate(strategy.observables, start=1):
        per_setting = []
        for obs in (o0, o1):
            if np.max(np.abs(obs @ obs - I2)) > HERMITICITY_TOL:
                raise ValueError("observable does not square to the identity")
            per_setting.append(
                [_lift((I2 + obs) / 2.0, party, n), _lift((I2 - obs) / 2.0, party, n)]
            )
        projectors.append(per_setting)
    shape = (2,) * n + (2,) * n
    table = np.zeros(shape)
    for settings in np.ndindex(*(2,) * n):
        for outcomes in np.ndindex(*(2,) * n):
            op = np.eye(state.dim, dtype=complex)
            for party in range(n):
                op = op @ projectors[party][settings[party]][outcomes[party]]
            table[settings + outcomes] = expectation(state, op)
    return Behavior(n_parties=n, inputs_per_party=(2,) * n, outputs_per_party=(2,) * n, table=table)


def bell_strategy() -> QuantumStrategy:
    """Two-party Bell-state strategy at the maximal CHSH score."""
    a0, a1, b0, b1 = bell_settings()
    return QuantumStrategy(state=bell_state(), observables=((a0, a1), (b0, b1)))


def werner_strategy(eta: float) -> QuantumStrategy:
    """Werner-noise strategy with the Bell-optimal settings; score 2 sqrt(2) eta."""
    a0, a1, b0, b1 = bell_settings()
    return QuantumStrategy(state=werner_state(eta), observables=((a0, a1), (b0, b1)))


def tightness_strategy(theta: float) -> QuantumStrategy:
    """Three-party strategy realizing the quarter-circle score pair."""
    a0, a1, o0, o1 = pair_settings()
    return QuantumStrategy(
        state=tightness_state(theta), observables=((a0, a1), (o0, o1), (o0, o1))
    )
