"""Monte Carlo risk estimation and the sharp-constant sweep engine.

"Risk" is always Type I plus Type II.  The Type II side is evaluated either
at a fixed alternative or in the Bayes sense under one of the lower-bound
priors; what is estimated is the risk of the *implemented* test, never a
heuristic supremum over alternatives.

Estimates are deterministic functions of ``(inputs, seed)``: each estimator
derives dedicated substreams from the seed and consumes them in a fixed
chunked order, so results do not depend on the execution schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .maxtest import MultinomialTestConfig, PoissonTestConfig
from .model import RateVector, SimplexVector, as_probability_vector, rng_stream
from .priors import (
    MultinomialSimplexPrior,
    PoissonSpikePrior,
    draw_multinomial_simplex_prior,
)
from .rates import (
    multinomial_rate,
    multinomial_sharp_constant_epsilon,
    poisson_rate,
    sharp_constant_epsilon,
)

__all__ = [
    "RiskEstimate",
    "SweepResult",
    "wilson_halfwidth",
    "estimate_poisson_risk",
    "estimate_multinomial_risk",
    "sweep_sharp_constant",
    "sweep_multinomial_sharp_constant",
]

_CHUNK = 1000
_Z95 = 1.959963984540054


def wilson_halfwidth(p_hat: float, n: int, z: float = _Z95) -> float:
    """Half-width of the two-sided Wilson score interval."""
    if n < 1:
        raise ValueError("need at least one trial")
    return z * math.sqrt(p_hat * (1.0 - p_hat) / n + z * z / (4.0 * n * n)) / (1.0 + z * z / n)


@dataclass(frozen=True)
class RiskEstimate:
    """Monte Carlo estimate of Type I + Type II error."""

    type1: float
    type2: float
    trials: int
    seed: int
    ci_halfwidth: float

    def __post_init__(self):
        if not (0.0 <= self.type1 <= 1.0 and 0.0 <= self.type2 <= 1.0):
            raise ValueError("error rates must lie in [0, 1]")

    @property
    def total(self) -> float:
        return self.type1 + self.type2


def _make_estimate(reject_null: int, accept_alt: int, trials: int, seed: int) -> RiskEstimate:
    t1 = reject_null / trials
    t2 = accept_alt / trials
    ci = wilson_halfwidth(t1, trials) + wilson_halfwidth(t2, trials)
    return RiskEstimate(t1, t2, trials, seed, ci)


def _chunks(trials: int) -> list[int]:
    out = [_CHUNK] * (trials // _CHUNK)
    if trials % _CHUNK:
        out.append(trials % _CHUNK)
    return out


def estimate_poisson_risk(
    mu: RateVector,
    alternative,
    eta: float,
    trials: int,
    seed: int,
    c_prime: float | None = None,
) -> RiskEstimate:
    """Risk of the calibrated Poisson max test.

    ``alternative`` is a fixed rate vector (two-point Type II) or a
    :class:`PoissonSpikePrior` (Bayes Type II under fresh prior draws).
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    cfg = (
        PoissonTestConfig.from_eta(mu, eta)
        if c_prime is None
        else PoissonTestConfig.from_null(mu, c_prime)
    )
    thr = cfg.max_threshold
    rates = mu.rates

    null_rng = rng_stream(seed, 0)
    rejects = 0
    for size in _chunks(trials):
        x = null_rng.poisson(rates, size=(size, rates.size))
        rejects += int(np.count_nonzero(np.abs(x - rates).max(axis=1) > thr))

    alt_rng = rng_stream(seed, 1)
    accepts = 0
    if isinstance(alternative, PoissonSpikePrior):
        spike, j_star = alternative.spike, alternative.j_star
        for size in _chunks(trials):
            x = alt_rng.poisson(rates, size=(size, rates.size)).astype(float)
            js = alt_rng.integers(0, j_star, size=size)
            x[np.arange(size), js] = alt_rng.poisson(rates[js] + spike)
            accepts += int(np.count_nonzero(np.abs(x - rates).max(axis=1) <= thr))
    else:
        lam = alternative.rates if isinstance(alternative, RateVector) else np.asarray(alternative, dtype=float)
        if lam.size != rates.size:
            raise ValueError("alternative dimension mismatch")
        for size in _chunks(trials):
            x = alt_rng.poisson(lam, size=(size, lam.size))
            accepts += int(np.count_nonzero(np.abs(x - rates).max(axis=1) <= thr))
    return _make_estimate(rejects, accepts, trials, seed)


def _multinomial_rows(rng: np.random.Generator, n_per_row: np.ndarray, q_rows: np.ndarray) -> np.ndarray:
    """Sequential conditional binomials, vectorized over rows.

    Handles a different total and a different probability row per trial,
    which covers multinomial, Poissonized, and prior-randomized sampling.
    """
    t, p = q_rows.shape
    out = np.empty((t, p), dtype=np.int64)
    remaining = n_per_row.astype(np.int64).copy()
    rem_mass = np.ones(t)
    for j in range(p - 1):
        with np.errstate(divide="ignore", invalid="ignore"):
            pj = np.where(rem_mass > 0, np.clip(q_rows[:, j] / rem_mass, 0.0, 1.0), 1.0)
        draws = rng.binomial(remaining, pj)
        out[:, j] = draws
        remaining -= draws
        rem_mass -= q_rows[:, j]
    out[:, -1] = remaining
    return out


def _sample_counts(
    rng: np.random.Generator, n: float, q_rows: np.ndarray, poissonized: bool
) -> np.ndarray:
    size = q_rows.shape[0]
    if poissonized:
        totals = rng.poisson(n, size=size)
    else:
        if n != int(n):
            raise ValueError("exact multinomial sampling needs an integer n")
        totals = np.full(size, int(n))
    return _multinomial_rows(rng, totals, q_rows)


def _combined_reject(x: np.ndarray, q0: SimplexVector, n: float, cfg: MultinomialTestConfig) -> np.ndarray:
    head = np.abs(x[:, 0] - n * q0.head) >= cfg.head_threshold
    if q0.p == 1:
        return head
    tail_counts = x[:, 1:]
    zero_cells = q0.tail == 0.0
    guard = (
        np.any(tail_counts[:, zero_cells] > 0, axis=1)
        if np.any(zero_cells)
        else np.zeros(x.shape[0], dtype=bool)
    )
    dev = np.abs(tail_counts - n * q0.tail)
    if np.any(cfg.tail_active):
        stat = dev[:, cfg.tail_active].max(axis=1)
        tail = stat > cfg.max_tail_threshold
    else:
        tail = np.zeros(x.shape[0], dtype=bool)
    return head | tail | guard


def estimate_multinomial_risk(
    q0: SimplexVector,
    n: float,
    alternative,
    eta: float,
    trials: int,
    seed: int,
    poissonized: bool = False,
) -> RiskEstimate:
    """Risk of the combined head-or-tail multinomial test.

    ``alternative`` is a fixed probability vector or a
    :class:`MultinomialSimplexPrior`.  With ``poissonized=True`` the sample
    size is ``Poisson(n)`` (``n`` may then be non-integral).
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    cfg = MultinomialTestConfig.from_eta(q0, n, eta)

    null_rng = rng_stream(seed, 0)
    rejects = 0
    q0_rows = np.tile(q0.probs, (_CHUNK, 1))
    for size in _chunks(trials):
        x = _sample_counts(null_rng, n, q0_rows[:size], poissonized)
        rejects += int(np.count_nonzero(_combined_reject(x, q0, n, cfg)))

    alt_rng = rng_stream(seed, 1)
    accepts = 0
    if isinstance(alternative, MultinomialSimplexPrior):
        for size in _chunks(trials):
            q_rows = draw_multinomial_simplex_prior(alternative, alt_rng, trials=size)
            x = _sample_counts(alt_rng, n, q_rows, poissonized)
            accepts += int(np.count_nonzero(~_combined_reject(x, q0, n, cfg)))
    else:
        q_alt = as_probability_vector(alternative, "alternative")
        alt_rows = np.tile(q_alt, (_CHUNK, 1))
        for size in _chunks(trials):
            x = _sample_counts(alt_rng, n, alt_rows[:size], poissonized)
            accepts += int(np.count_nonzero(~_combined_reject(x, q0, n, cfg)))
    return _make_estimate(rejects, accepts, trials, seed)


@dataclass(frozen=True)
class SweepResult:
    """Risk curve over a grid of separation multipliers ``xi``."""

    xi_grid: np.ndarray
    epsilons: np.ndarray
    risks: tuple[RiskEstimate, ...]
    regime: str
    p: int
    null_descriptor: str

    def __post_init__(self):
        xi = np.asarray(self.xi_grid, dtype=float)
        eps = np.asarray(self.epsilons, dtype=float)
        if np.any(np.diff(xi) <= 0):
            raise ValueError("xi_grid must be strictly increasing")
        if xi.size != eps.size or xi.size != len(self.risks):
            raise ValueError("grid and risks must be aligned")
        object.__setattr__(self, "xi_grid", xi)
        object.__setattr__(self, "epsilons", eps)
        xi.setflags(write=False)
        eps.setflags(write=False)

    def rows(self) -> list[dict]:
        out = []
        for xi, eps, r in zip(self.xi_grid, self.epsilons, self.risks):
            out.append(
                {
                    "xi": float(xi),
                    "epsilon": float(eps),
                    "type1": r.type1,
                    "type2": r.type2,
                    "total": r.total,
                    "ci": r.ci_halfwidth,
                    "trials": r.trials,
                    "seed": r.seed,
                    "regime": self.regime,
                }
            )
        return out


def sweep_sharp_constant(
    mu: RateVector,
    xi_grid,
    alpha_p: float,
    trials: int,
    seed: int,
) -> SweepResult:
    """Poisson sharp-constant sweep.

    At each ``xi`` the separation is the inflated-log level ``eps(xi)``, the
    test rejects when ``||X - mu||_inf >= eps(xi)/xi`` (the threshold is the
    ``xi``-free level), and Type II is Bayes risk under the uniform spike of
    magnitude ``eps(xi)`` on the first ``j*`` coordinates.
    """
    xi_grid = np.asarray(list(xi_grid), dtype=float)
    rates = mu.rates
    estimates = []
    epsilons = []
    for idx, xi in enumerate(xi_grid):
        eps, j_star = sharp_constant_epsilon(mu, alpha_p, float(xi))
        psi = eps / xi
        null_rng = rng_stream(seed, 2 * idx)
        rejects = 0
        for size in _chunks(trials):
            x = null_rng.poisson(rates, size=(size, rates.size))
            rejects += int(np.count_nonzero(np.abs(x - rates).max(axis=1) >= psi))
        alt_rng = rng_stream(seed, 2 * idx + 1)
        accepts = 0
        for size in _chunks(trials):
            x = alt_rng.poisson(rates, size=(size, rates.size)).astype(float)
            js = alt_rng.integers(0, j_star, size=size)
            x[np.arange(size), js] = alt_rng.poisson(rates[js] + eps)
            accepts += int(np.count_nonzero(np.abs(x - rates).max(axis=1) < psi))
        estimates.append(_make_estimate(rejects, accepts, trials, seed))
        epsilons.append(eps)
    regime = poisson_rate(mu).regime
    return SweepResult(
        xi_grid, np.asarray(epsilons), tuple(estimates), regime, mu.p, f"poisson(p={mu.p})"
    )


def sweep_multinomial_sharp_constant(
    q0: SimplexVector,
    n: float,
    xi_grid,
    alpha_p: float,
    trials: int,
    seed: int,
    poissonized: bool = False,
) -> SweepResult:
    """Multinomial sharp-constant sweep with the add-one/remove-m prior.

    The test rejects when ``||X - n q0||_inf >= n' * eps(xi)/xi``; the
    alternative adds ``eps(xi)`` to one uniformly random tail coordinate
    among ``2..j*+1`` and removes ``eps(xi)/m`` from a random size-``m``
    subset of the remaining ones (``m`` is clamped to at least 2 when
    positive).
    """
    xi_grid = np.asarray(list(xi_grid), dtype=float)
    probs = q0.probs
    estimates = []
    epsilons = []
    for idx, xi in enumerate(xi_grid):
        eps_obj = multinomial_sharp_constant_epsilon(q0, n, alpha_p, float(xi))
        eps, j_star, n_prime, m = eps_obj
        thr = n_prime * eps / xi
        if m >= 1 and eps / m > probs[1 : j_star + 1].min() + 1e-15:
            raise ValueError("sweep alternative leaves the simplex; reduce xi or grow n")
        null_rng = rng_stream(seed, 2 * idx)
        rejects = 0
        q0_rows = np.tile(probs, (_CHUNK, 1))
        for size in _chunks(trials):
            x = _sample_counts(null_rng, n, q0_rows[:size], poissonized)
            rejects += int(np.count_nonzero(np.abs(x - n * probs).max(axis=1) >= thr))
        alt_rng = rng_stream(seed, 2 * idx + 1)
        accepts = 0
        for size in _chunks(trials):
            q_rows = np.tile(probs, (size, 1))
            spike_idx = alt_rng.integers(1, j_star + 1, size=size)
            if m >= 1:
                noise = alt_rng.random((size, j_star))
                noise[np.arange(size), spike_idx - 1] = np.inf
                removal = np.argpartition(noise, m - 1, axis=1)[:, :m]
                rows_rep = np.repeat(np.arange(size), m)
                q_rows[rows_rep, removal.ravel() + 1] -= eps / m
            q_rows[np.arange(size), spike_idx] += eps
            x = _sample_counts(alt_rng, n, q_rows, poissonized)
            accepts += int(np.count_nonzero(np.abs(x - n * probs).max(axis=1) < thr))
        estimates.append(_make_estimate(rejects, accepts, trials, seed))
        epsilons.append(eps)
    regime = multinomial_rate(q0, n).regime
    return SweepResult(
        xi_grid,
        np.asarray(epsilons),
        tuple(estimates),
        regime,
        q0.p,
        f"multinomial(p={q0.p}, n={n})",
    )
