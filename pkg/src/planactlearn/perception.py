"""Gaussian perception functions f(x, s) = N(x; mu_s, Sigma_s).

Parameters for all states live in contiguous arrays so that exhaustive
likelihood evaluation is a single vectorized pass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Iterator, Sequence

import numpy as np

from planactlearn.errors import InvalidInput, InvalidParameter, InvalidState

SIGMA_FLOOR = 1e-6
EXACT_ARGMAX_LIMIT = 4096
LOG_2PI = math.log(2.0 * math.pi)


def floor_covariance(sigma: np.ndarray, floor: float = SIGMA_FLOOR) -> np.ndarray:
    """Symmetrize ``sigma`` and lift every eigenvalue to at least ``floor``."""
    sigma = 0.5 * (sigma + sigma.T)
    w, v = np.linalg.eigh(sigma)
    if w[0] >= floor:
        return sigma
    w = np.maximum(w, floor)
    return (v * w) @ v.T


def _check_spd(sigma: np.ndarray, n: int, what: str) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (n, n):
        raise InvalidParameter(f"{what} must be {n}x{n}, got {sigma.shape}")
    if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-12):
        raise InvalidParameter(f"{what} is not symmetric")
    if np.linalg.eigvalsh(sigma)[0] <= 0:
        raise InvalidParameter(f"{what} is not positive definite")
    return sigma


@dataclass
class GaussianPerception:
    mu: np.ndarray
    sigma: np.ndarray
    count: int = 1

    @property
    def n(self) -> int:
        return self.mu.shape[0]

    def logpdf(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != self.mu.shape:
            raise InvalidInput(f"observation has shape {x.shape}, expected {self.mu.shape}")
        d = x - self.mu
        sign, logdet = np.linalg.slogdet(self.sigma)
        maha = float(d @ np.linalg.solve(self.sigma, d))
        return -0.5 * (self.n * LOG_2PI + logdet + maha)

    def pdf(self, x) -> float:
        return math.exp(self.logpdf(x))

    def peak(self) -> float:
        return math.exp(-0.5 * (self.n * LOG_2PI + np.linalg.slogdet(self.sigma)[1]))


def init_perception(x_seed, p_init_sigma, sigma_floor: float = SIGMA_FLOOR) -> GaussianPerception:
    """Fresh perception centred on ``x_seed``; the seed counts as one observation."""
    mu = np.array(x_seed, dtype=float)
    sigma = _check_spd(p_init_sigma, mu.shape[0], "p_init covariance")
    return GaussianPerception(mu, floor_covariance(sigma.copy(), sigma_floor), 1)


class PerceptionTable:
    """One Gaussian perception per abstract state."""

    def __init__(self, n: int, p_init_sigma, sigma_floor: float = SIGMA_FLOOR, capacity: int = 16):
        if n < 1:
            raise InvalidParameter("perception dimension must be >= 1")
        self.n = n
        self.p_init_sigma = _check_spd(p_init_sigma, n, "p_init covariance")
        self.sigma_floor = float(sigma_floor)
        self._rows: dict[Hashable, int] = {}
        self._states: list = []
        self._alloc(max(capacity, 1))

    def _alloc(self, cap: int) -> None:
        n = self.n
        old = len(self._states)
        mu = np.empty((cap, n))
        sigma = np.empty((cap, n, n))
        inv = np.empty((cap, n, n))
        logdet = np.empty(cap)
        count = np.empty(cap, dtype=np.int64)
        if old:
            mu[:old] = self._mu[:old]
            sigma[:old] = self._sigma[:old]
            inv[:old] = self._inv[:old]
            logdet[:old] = self._logdet[:old]
            count[:old] = self._count[:old]
        self._mu, self._sigma, self._inv, self._logdet, self._count = mu, sigma, inv, logdet, count

    def _reserve(self, extra: int) -> None:
        need = len(self._states) + extra
        cap = self._mu.shape[0]
        if need > cap:
            while cap < need:
                cap *= 2
            self._alloc(cap)

    def __len__(self) -> int:
        return len(self._states)

    def __contains__(self, s) -> bool:
        return s in self._rows

    @property
    def states(self) -> Sequence:
        return self._states

    def row(self, s) -> int:
        try:
            return self._rows[s]
        except KeyError:
            raise InvalidState(f"no perception for state {s}") from None

    def __getitem__(self, s) -> GaussianPerception:
        r = self.row(s)
        return GaussianPerception(self._mu[r].copy(), self._sigma[r].copy(), int(self._count[r]))

    def items(self) -> Iterator[tuple]:
        for s in self._states:
            yield s, self[s]

    def count(self, s) -> int:
        return int(self._count[self.row(s)])

    def mean(self, s) -> np.ndarray:
        return self._mu[self.row(s)]

    @property
    def means(self) -> np.ndarray:
        return self._mu[: len(self._states)]

    @property
    def covariances(self) -> np.ndarray:
        return self._sigma[: len(self._states)]

    @property
    def inverses(self) -> np.ndarray:
        return self._inv[: len(self._states)]

    @property
    def logdets(self) -> np.ndarray:
        return self._logdet[: len(self._states)]

    def _write(self, r: int, mu: np.ndarray, sigma: np.ndarray, count: int) -> None:
        self._mu[r] = mu
        self._sigma[r] = sigma
        self._inv[r] = np.linalg.inv(sigma)
        self._logdet[r] = np.linalg.slogdet(sigma)[1]
        self._count[r] = count

    def add(self, s, mu, sigma=None, count: int = 1, floor: bool = True) -> None:
        if s in self._rows:
            raise InvalidState(f"state {s} already has a perception")
        mu = np.asarray(mu, dtype=float)
        if mu.shape != (self.n,):
            raise InvalidInput(f"mean has shape {mu.shape}, expected ({self.n},)")
        sigma = self.p_init_sigma if sigma is None else np.asarray(sigma, dtype=float)
        if floor:
            sigma = floor_covariance(sigma, self.sigma_floor)
        self._reserve(1)
        r = len(self._states)
        self._states.append(s)
        self._rows[s] = r
        self._write(r, mu, sigma, count)

    def add_many(self, states: Sequence, mus: np.ndarray, count: int = 1) -> None:
        """Append states sharing the p_init covariance."""
        mus = np.asarray(mus, dtype=float).reshape(len(states), self.n)
        for s in states:
            if s in self._rows:
                raise InvalidState(f"state {s} already has a perception")
        self._reserve(len(states))
        r0 = len(self._states)
        r1 = r0 + len(states)
        sigma = floor_covariance(self.p_init_sigma, self.sigma_floor)
        self._mu[r0:r1] = mus
        self._sigma[r0:r1] = sigma
        self._inv[r0:r1] = np.linalg.inv(sigma)
        self._logdet[r0:r1] = np.linalg.slogdet(sigma)[1]
        self._count[r0:r1] = count
        for k, s in enumerate(states):
            self._rows[s] = r0 + k
        self._states.extend(states)

    def set(self, s, g: GaussianPerception) -> None:
        self._write(self.row(s), g.mu, g.sigma, g.count)

    def remap(self, fn) -> None:
        self._states = [fn(s) for s in self._states]
        self._rows = {s: r for r, s in enumerate(self._states)}

    def copy(self) -> PerceptionTable:
        new = PerceptionTable(self.n, self.p_init_sigma, self.sigma_floor, capacity=max(len(self), 1))
        k = len(self)
        new._mu[:k] = self._mu[:k]
        new._sigma[:k] = self._sigma[:k]
        new._inv[:k] = self._inv[:k]
        new._logdet[:k] = self._logdet[:k]
        new._count[:k] = self._count[:k]
        new._states = list(self._states)
        new._rows = dict(self._rows)
        return new

    def _check_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise InvalidInput(f"observation has shape {x.shape}, expected ({self.n},)")
        return x

    def logpdf_rows(self, x, rows) -> np.ndarray:
        x = self._check_x(x)
        rows = np.asarray(rows, dtype=np.intp)
        d = x - self._mu[rows]
        maha = np.einsum("ki,kij,kj->k", d, self._inv[rows], d)
        return -0.5 * (self.n * LOG_2PI + self._logdet[rows] + maha)

    def logpdf_all(self, x) -> np.ndarray:
        x = self._check_x(x)
        k = len(self._states)
        d = x - self._mu[:k]
        maha = np.einsum("ki,kij,kj->k", d, self._inv[:k], d)
        return -0.5 * (self.n * LOG_2PI + self._logdet[:k] + maha)

    def logpdf_matrix(self, X: np.ndarray, chunk: int = 2_000_000) -> np.ndarray:
        """Log densities of every row for every observation in ``X`` (M x |S|)."""
        X = np.asarray(X, dtype=float).reshape(-1, self.n)
        k = len(self._states)
        out = np.empty((X.shape[0], k))
        step = max(1, chunk // max(k, 1))
        mu, inv, logdet = self._mu[:k], self._inv[:k], self._logdet[:k]
        for i in range(0, X.shape[0], step):
            d = X[i : i + step, None, :] - mu[None]
            maha = np.einsum("mki,kij,mkj->mk", d, inv, d)
            out[i : i + step] = -0.5 * (self.n * LOG_2PI + logdet[None] + maha)
        return out

    def logpdf(self, x, s) -> float:
        return float(self.logpdf_rows(x, [self.row(s)])[0])

    def p_init_peak(self) -> float:
        return math.exp(-0.5 * (self.n * LOG_2PI + np.linalg.slogdet(self.p_init_sigma)[1]))


def likelihood(pt: PerceptionTable, x, s) -> float:
    return math.exp(pt.logpdf(x, s))


def max_p_init(pt: PerceptionTable) -> float:
    """Peak density of a fresh p_init Gaussian, ((2 pi)^n det Sigma)^(-1/2)."""
    return pt.p_init_peak()


def _pick(cands: list, predicted):
    if predicted in cands:
        return predicted
    return min(cands)


def exact_argmax(pt: PerceptionTable, x, predicted=None) -> tuple:
    if not len(pt):
        raise InvalidState("empty state set")
    lp = pt.logpdf_all(x)
    best = lp.max()
    idx = np.flatnonzero(lp == best)
    if len(idx) == 1:
        s = pt.states[idx[0]]
    else:
        s = _pick([pt.states[i] for i in idx], predicted)
    return s, float(best)


def _neighbors(s, gamma, cardinalities) -> set:
    out = set()
    if gamma is not None:
        out.update(gamma.successors(s).values())
        out.update(gamma.predecessors(s))
    for i, c in enumerate(cardinalities):
        head, tail = s[:i], s[i + 1 :]
        for v in range(c):
            if v != s[i]:
                out.add(head + (v,) + tail)
    out.discard(s)
    return out


def greedy_argmax(pt: PerceptionTable, x, start, gamma, cardinalities) -> tuple:
    """Hill-climb on likelihood from ``start`` over gamma edges and one-variable changes."""
    if not len(pt):
        raise InvalidState("empty state set")
    cur = start
    cur_lp = pt.logpdf(x, cur)
    while True:
        nbrs = sorted(_neighbors(cur, gamma, cardinalities))
        if not nbrs:
            break
        lps = pt.logpdf_rows(x, [pt.row(t) for t in nbrs])
        best = lps.max()
        if not best > cur_lp:
            break
        # nbrs is sorted, so argmax picks the lexicographically smallest tie
        cur = nbrs[int(np.argmax(lps))]
        cur_lp = float(best)
    return cur, cur_lp


def max_likelihood_state(
    pt: PerceptionTable,
    gamma,
    x,
    predicted,
    cardinalities: Iterable[int] | None = None,
    mode: str = "auto",
    exact_limit: int = EXACT_ARGMAX_LIMIT,
) -> tuple:
    """State maximizing f(x, s), and its likelihood.

    ``mode`` is ``"exact"``, ``"greedy"`` or ``"auto"`` (exact up to
    ``exact_limit`` states). Greedy search starts from ``predicted``. Exact
    ties prefer ``predicted``, then the lexicographically smallest state.
    """
    if not len(pt):
        raise InvalidState("empty state set")
    if mode not in ("exact", "greedy", "auto"):
        raise InvalidParameter(f"unknown argmax mode {mode!r}")
    if mode == "exact" or (mode == "auto" and len(pt) <= exact_limit):
        s, lp = exact_argmax(pt, x, predicted)
    else:
        if cardinalities is None:
            raise InvalidParameter("greedy argmax needs the schema cardinalities")
        s, lp = greedy_argmax(pt, x, predicted, gamma, tuple(cardinalities))
    return s, math.exp(lp)


def update_perception(pt: PerceptionTable, s, x, obs_count: int, beta: float) -> GaussianPerception:
    """Blend the current parameters with the incremental ML estimate.

    ``obs_count`` is the number of observations of ``s`` including ``x``.
    Returns the stored result.
    """
    if not 0.0 <= beta <= 1.0:
        raise InvalidParameter(f"beta must be in [0, 1], got {beta}")
    if obs_count < 1:
        raise InvalidParameter("obs_count must be >= 1")
    x = pt._check_x(x)
    g = pt[s]
    if beta == 1.0:
        g.count += 1
        pt.set(s, g)
        return g
    n = float(obs_count)
    mu, sigma = g.mu, g.sigma
    dmu = (x - mu) / n
    mu_ml = mu + dmu
    r = x - mu_ml
    dsigma = np.outer(r, r) / n + (n - 1.0) / n * np.outer(dmu, dmu) - sigma / n
    new_mu = beta * mu + (1.0 - beta) * mu_ml
    new_sigma = beta * sigma + (1.0 - beta) * (sigma + dsigma)
    out = GaussianPerception(new_mu, floor_covariance(new_sigma, pt.sigma_floor), g.count + 1)
    pt.set(s, out)
    return out
