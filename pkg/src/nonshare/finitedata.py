"""Finite-data certification from Bell-trial records.

The correlator-wise pipeline follows the union-bound Hoeffding argument:
with four setting cells and a two-sided bound per cell, a total failure
probability alpha gives the score radius 4 sqrt(2 ln(8/alpha) / N_min).
The lower confidence bound is clipped to the physical interval [0, 2 sqrt(2)]
before the anti-collusion map; the signed estimate is used as-is, so callers
must pre-align the CHSH orientation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import ceil, log, sqrt

import numpy as np

from . import __version__
from .behaviors import Behavior, LhvModel, lhv_behavior
from .frontier import TSIRELSON, gamma_plus
from .qkernel import QuantumStrategy, born_behavior

GENERATOR_ID = "numpy-PCG64"
ASSUMPTIONS = "iid,uniform-settings"


class EmptyCellError(ValueError):
    """A setting pair has no trials; the correlator-wise estimate is refused."""


@dataclass(frozen=True)
class TrialBatch:
    """Record of i.i.d. CHSH trials with settings x, y and outcomes a, b."""

    x: np.ndarray  # setting bits in {0, 1}
    y: np.ndarray
    a: np.ndarray  # outcomes in {-1, +1}
    b: np.ndarray
    seed: int | None
    source: str
    generator: str = GENERATOR_ID

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=np.int64)
        y = np.asarray(self.y, dtype=np.int64)
        a = np.asarray(self.a, dtype=np.int64)
        b = np.asarray(self.b, dtype=np.int64)
        n = x.size
        if not (y.size == a.size == b.size == n) or n == 0:
            raise ValueError("trial columns must be equal-length and nonempty")
        if not (np.isin(x, (0, 1)).all() and np.isin(y, (0, 1)).all()):
            raise ValueError("settings must be bits")
        if not (np.isin(a, (-1, 1)).all() and np.isin(b, (-1, 1)).all()):
            raise ValueError("outcomes must be +-1")
        for name, arr in (("x", x), ("y", y), ("a", a), ("b", b)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_trials(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class CorrelatorStats:
    """Per-setting empirical correlators and counts."""

    e_hat: np.ndarray  # shape (2, 2)
    n: np.ndarray  # shape (2, 2)
    n_min: int
    s_hat: float


@dataclass(frozen=True)
class FiniteDataCertificate:
    """Confidence-bounded anti-collusion certificate."""

    s_hat: float
    radius: float
    s_lcb: float
    s_cert: float
    gamma_lcb: float
    confidence: float
    estimator: str  # correlator_wise | single_trial


def simulate_trials(strategy: QuantumStrategy | LhvModel, n: int, seed: int) -> TrialBatch:
    """Sample n i.i.d. trials with uniform settings from the strategy's behavior."""
    if n < 1:
        raise ValueError("need at least one trial")
    if isinstance(strategy, QuantumStrategy):
        behavior = born_behavior(strategy)
        source = "quantum-strategy"
    elif isinstance(strategy, LhvModel):
        behavior = lhv_behavior(strategy)
        source = "lhv-model"
    else:
        raise ValueError("strategy must be a QuantumStrategy or LhvModel")
    if behavior.n_parties != 2:
        raise ValueError("trial simulation expects a 2-party strategy")
    return sample_behavior_trials(behavior, n, seed, source)


def sample_behavior_trials(behavior: Behavior, n: int, seed: int, source: str) -> TrialBatch:
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 2, size=n)
    y = rng.integers(0, 2, size=n)
    joint = rng.random(n)
    a = np.empty(n, dtype=np.int64)
    b = np.empty(n, dtype=np.int64)
    for t1 in (0, 1):
        for t2 in (0, 1):
            mask = (x == t1) & (y == t2)
            cdf = np.cumsum(behavior.table[t1, t2].reshape(-1))
            idx = np.searchsorted(cdf, joint[mask], side="right").clip(max=3)
            a[mask] = 1 - 2 * (idx >> 1)  # label 0 -> +1
            b[mask] = 1 - 2 * (idx & 1)
    return TrialBatch(x=x, y=y, a=a, b=b, seed=seed, source=source)


def estimate_correlators(batch: TrialBatch) -> CorrelatorStats:
    """Empirical correlators E_xy = mean(a b | x, y); refuses empty cells."""
    e_hat = np.zeros((2, 2))
    counts = np.zeros((2, 2), dtype=np.int64)
    prod = batch.a * batch.b
    for t1 in (0, 1):
        for t2 in (0, 1):
            mask = (batch.x == t1) & (batch.y == t2)
            counts[t1, t2] = int(mask.sum())
            if counts[t1, t2] == 0:
                raise EmptyCellError(f"no trials with settings ({t1}, {t2})")
            e_hat[t1, t2] = prod[mask].mean()
    s_hat = e_hat[0, 0] + e_hat[0, 1] + e_hat[1, 0] - e_hat[1, 1]
    return CorrelatorStats(e_hat=e_hat, n=counts, n_min=int(counts.min()), s_hat=float(s_hat))


def hoeffding_radius(n_min: int, alpha: float) -> float:
    """Score radius 4 sqrt(2 ln(8/alpha) / n_min) at total failure probability alpha."""
    if n_min < 1:
        raise ValueError("n_min must be at least 1")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return 4.0 * sqrt(2.0 * log(8.0 / alpha) / n_min)


def _certificate(s_hat: float, radius: float, alpha: float, estimator: str) -> FiniteDataCertificate:
    s_lcb = s_hat - radius
    s_cert = min(TSIRELSON, max(0.0, s_lcb))
    return FiniteDataCertificate(
        s_hat=float(s_hat),
        radius=float(radius),
        s_lcb=float(s_lcb),
        s_cert=float(s_cert),
        gamma_lcb=gamma_plus(s_cert),
        confidence=1.0 - alpha,
        estimator=estimator,
    )


def lower_confidence_bound(stats: CorrelatorStats, alpha: float) -> FiniteDataCertificate:
    """Correlator-wise certificate: s_lcb = s_hat - radius, clipped, mapped."""
    return _certificate(
        stats.s_hat, hoeffding_radius(stats.n_min, alpha), alpha, "correlator_wise"
    )


def single_trial_lcb(batch: TrialBatch, alpha: float) -> FiniteDataCertificate:
    """Single-trial certificate from Z_i = 4 (-1)^(x y) a b.

    Unbiased for the score only under uniform settings; the radius is
    4 sqrt(2 ln(1/alpha) / N).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    z = 4.0 * ((-1.0) ** (batch.x * batch.y)) * batch.a * batch.b
    radius = 4.0 * sqrt(2.0 * log(1.0 / alpha) / batch.n_trials)
    return _certificate(float(z.mean()), radius, alpha, "single_trial")


def samples_for_onset(s_true: float, alpha: float) -> int:
    """Smallest per-cell count making s_lcb exceed 2 when s_hat = s_true.

    Closed-form inversion of the radius: ceil(32 ln(8/alpha) / (s_true - 2)^2).
    """
    if s_true <= 2.0:
        raise ValueError("onset unreachable: the true score must exceed 2")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return ceil(32.0 * log(8.0 / alpha) / (s_true - 2.0) ** 2)


def batch_to_csv(batch: TrialBatch) -> str:
    """Trial file format: header x,y,a,b and one trial per row."""
    lines = ["x,y,a,b"]
    for x, y, a, b in zip(batch.x, batch.y, batch.a, batch.b):
        lines.append(f"{x},{y},{a},{b}")
    return "\n".join(lines) + "\n"


def batch_from_csv(text: str, source: str = "file") -> TrialBatch:
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0].replace(" ", "") != "x,y,a,b":
        raise ValueError("trial file must start with header x,y,a,b")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 4:
            raise ValueError(f"malformed trial row: {ln!r}")
        rows.append([int(p) for p in parts])
    data = np.asarray(rows, dtype=np.int64)
    return TrialBatch(
        x=data[:, 0], y=data[:, 1], a=data[:, 2], b=data[:, 3], seed=None, source=source
    )


def certificate_to_json(cert: FiniteDataCertificate) -> str:
    """Certificate JSON with tool version and the assumption string."""
    payload = {
        "s_hat": cert.s_hat,
        "radius": cert.radius,
        "s_lcb": cert.s_lcb,
        "s_cert": cert.s_cert,
        "gamma_lcb": cert.gamma_lcb,
        "confidence": cert.confidence,
        "estimator": cert.estimator,
        "assumptions": ASSUMPTIONS,
        "tool_version": __version__,
    }
    return json.dumps(payload, indent=2) + "\n"
