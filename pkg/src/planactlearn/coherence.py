"""Model coherence: expected KL divergence between true and predicted perceptions."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from planactlearn.errors import InvalidState, UndefinedMetric

DEFAULT_WALKS = 100
DEFAULT_WALK_LENGTH = 30


def gaussian_kl(mu0, S0, mu1, S1) -> float:
    """KL(N(mu0, S0) || N(mu1, S1)) in nats."""
    mu0 = np.atleast_1d(np.asarray(mu0, dtype=float))
    mu1 = np.atleast_1d(np.asarray(mu1, dtype=float))
    n = mu0.shape[0]
    S0 = np.asarray(S0, dtype=float).reshape(n, n)
    S1 = np.asarray(S1, dtype=float).reshape(n, n)
    d = mu1 - mu0
    sign1, ld1 = np.linalg.slogdet(S1)
    sign0, ld0 = np.linalg.slogdet(S0)
    if sign1 <= 0 or sign0 <= 0:
        raise np.linalg.LinAlgError("covariance is singular or not positive definite")
    tr = np.trace(np.linalg.solve(S1, S0))
    maha = float(d @ np.linalg.solve(S1, d))
    return max(0.0, 0.5 * (tr + maha - n + ld1 - ld0))


def gaussian_kl_batch(mu0, S0, mu1, S1_inv, logdet1) -> np.ndarray:
    """Row-wise KL with a shared source covariance ``S0`` and per-row targets."""
    n = mu0.shape[1]
    d = mu1 - mu0
    tr = np.einsum("kij,ji->k", S1_inv, S0)
    maha = np.einsum("ki,kij,kj->k", d, S1_inv, d)
    ld0 = np.linalg.slogdet(S0)[1]
    return np.maximum(0.0, 0.5 * (tr + maha - n + logdet1 - ld0))


@dataclass(frozen=True)
class DivergenceEstimate:
    value: float
    walks: int
    walk_length: int
    seed: int
    stderr: float = 0.0


def _argmax_rows(pt, X: np.ndarray) -> np.ndarray:
    """Exact argmax-likelihood row per observation; ties go to the smallest state."""
    lp = pt.logpdf_matrix(X)
    rows = np.argmax(lp, axis=1)
    top = lp[np.arange(len(X)), rows]
    tied = np.flatnonzero((lp == top[:, None]).sum(axis=1) > 1)
    states = pt.states
    for m in tied:
        cands = np.flatnonzero(lp[m] == top[m])
        rows[m] = pt.row(min(states[r] for r in cands))
    return rows


def estimate_divergence(
    domain,
    world,
    n_walks: int = DEFAULT_WALKS,
    walk_length: int = DEFAULT_WALK_LENGTH,
    seed: int = 0,
    x0=None,
) -> DivergenceEstimate:
    """Random-walk estimate of the model divergence.

    Every perception along every walk is a sample. For each sample the
    perceived state is the exact likelihood argmax of the noisy perception,
    and each action adds KL(N(a(p), Sigma_a) || f(., gamma(s, a))) where
    ``p`` is the noiseless pose behind that perception. An undefined gamma(s, a)
    predicts s itself. The result averages per-walk means.
    """
    pt = domain.perception
    if not len(pt):
        raise InvalidState("empty state set")
    X, P = world.sample_walks(domain.actions, n_walks, walk_length, seed, x0=x0, return_positions=True)
    flat = X.reshape(-1, X.shape[-1])
    poses = P.reshape(-1, P.shape[-1])
    rows = _argmax_rows(pt, flat)
    uniq, inverse = np.unique(rows, return_inverse=True)
    states = pt.states
    gamma = domain.gamma
    mus, invs, lds = pt.means, pt.inverses, pt.logdets
    total = np.zeros(len(flat))
    for a in domain.actions:
        succ = np.empty(len(uniq), dtype=np.intp)
        for k, r in enumerate(uniq):
            t = gamma.get(states[r], a)
            succ[k] = r if t is None else pt.row(t)
        pred = succ[inverse]
        true_mean = world.expected_many(poses, a)
        total += gaussian_kl_batch(true_mean, world.noise.sigma(a), mus[pred], invs[pred], lds[pred])
    per_walk = total.reshape(n_walks, walk_length).mean(axis=1)
    stderr = float(per_walk.std(ddof=1) / math.sqrt(n_walks)) if n_walks > 1 else 0.0
    return DivergenceEstimate(float(per_walk.mean()), n_walks, walk_length, seed, stderr)


def percent_learned(initial: DivergenceEstimate | float, final: DivergenceEstimate | float) -> float:
    """Relative divergence reduction (initial - final) / initial."""
    i = initial.value if isinstance(initial, DivergenceEstimate) else float(initial)
    f = final.value if isinstance(final, DivergenceEstimate) else float(final)
    if i == 0:
        raise UndefinedMetric("initial divergence is zero")
    return (i - f) / i
