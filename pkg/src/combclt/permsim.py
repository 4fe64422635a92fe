"""Random permutations, realizations of W, the swap exchangeable pair, the
conditional-permutation coupling, and Monte Carlo Kolmogorov distance.

Random streams
--------------
All randomness goes through :func:`stream`, which maps ``(seed, index)`` to an
independent Philox counter-based generator keyed by
``SeedSequence([seed, index])``.  Monte Carlo runs split their replicates into
fixed blocks of :data:`BLOCK` and block ``b`` always uses ``stream(seed, b)``,
so results do not depend on how blocks are scheduled.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .arraymodel import ArraySpec
from .exceptions import InvalidArguments
from .steinfn import normal_cdf

BLOCK = 8192
_SEED_MAX = 2**64

_POINT, _RADEMACHER, _UNIFORM, _NORMAL, _DISCRETE = range(5)
_CODES = {"point": _POINT, "rademacher": _RADEMACHER, "uniform": _UNIFORM, "normal": _NORMAL, "discrete": _DISCRETE}


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Independent generator for replicate block ``index`` of a run seeded ``seed``."""
    if not 0 <= seed < _SEED_MAX:
        raise InvalidArguments("seed must be a 64-bit unsigned integer")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


# -- permutations -------------------------------------------------------------


@dataclass(frozen=True)
class PermutationState:
    """A bijection on ``{0, ..., n-1}``; ``map[i]`` is the image of ``i``."""

    map: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.map) != list(range(len(self.map))):
            raise InvalidArguments(f"{self.map} is not a permutation of 0..{len(self.map) - 1}")

    @classmethod
    def identity(cls, n: int) -> "PermutationState":
        return cls(tuple(range(n)))

    @property
    def n(self) -> int:
        return len(self.map)

    def __getitem__(self, i: int) -> int:
        return self.map[i]

    def inverse(self) -> tuple[int, ...]:
        inv = [0] * self.n
        for i, v in enumerate(self.map):
            inv[v] = i
        return tuple(inv)


def sample_permutation(n: int, rng: np.random.Generator) -> PermutationState:
    """Uniform permutation by Fisher-Yates with unbiased bounded integer draws."""
    if n < 1:
        raise InvalidArguments("n must be >= 1")
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return PermutationState(tuple(perm))


def sample_permutations(n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` independent uniform permutations as rows of an int array."""
    return rng.permuted(np.tile(np.arange(n), (size, 1)), axis=1)


def couple_permutation(p: PermutationState, i: int, j: int, k: int, l: int) -> PermutationState:
    """Rewire ``p`` so that ``i -> k`` and ``j -> l``.

    Two value transpositions: first swap the images of ``i`` and
    ``p^-1(k)``, then those of ``j`` and the current preimage of ``l``.  When
    ``{i, j, p^-1(k), p^-1(l)}`` are distinct this is exactly
    ``i->k, j->l, p^-1(k)->p(i), p^-1(l)->p(j)``; the sequential form also
    resolves the overlapping cases.  Pushing a uniform ``p`` through this map
    gives the uniform law conditioned on ``p(i)=k, p(j)=l``.
    """
    n = p.n
    if not all(0 <= x < n for x in (i, j, k, l)) or i == j or k == l:
        raise InvalidArguments(f"need distinct i, j and distinct k, l in [0, {n}); got {(i, j, k, l)}")
    perm = list(p.map)
    a = perm.index(k)
    perm[i], perm[a] = perm[a], perm[i]
    b = perm.index(l)
    perm[j], perm[b] = perm[b], perm[j]
    return PermutationState(tuple(perm))


# -- sampling array cells -------------------------------------------------------


class _Compiled:
    """Array parameters laid out as numpy matrices for vectorized sampling."""

    def __init__(self, a: ArraySpec):
        n = a.n
        self.n = n
        self.kind = np.empty((n, n), dtype=np.int8)
        self.p1 = np.zeros((n, n))
        self.p2 = np.zeros((n, n))
        self.shift = np.zeros((n, n))
        width = max((len(d.params) for row in a.cells for d in row if d.kind == "discrete"), default=0)
        # discrete cells: atom values and inner cumulative cut points, padded with +inf
        self.values = np.zeros((n, n, max(width, 1)))
        self.cuts = np.full((n, n, max(width - 1, 1)), np.inf)
        self.has_discrete = width > 0
        for i, row in enumerate(a.cells):
            for j, d in enumerate(row):
                self.kind[i, j] = _CODES[d.kind]
                self.shift[i, j] = d.shift
                if d.kind == "discrete":
                    k = len(d.params)
                    self.values[i, j, :k] = [v for v, _ in d.params]
                    self.cuts[i, j, : k - 1] = np.cumsum([q for _, q in d.params])[:-1]
                elif d.kind == "point":
                    self.p1[i, j] = d.params[0]
                else:
                    self.p1[i, j], self.p2[i, j] = d.params

    def sample(self, rows: np.ndarray, cols: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        shape = np.broadcast(rows, cols).shape
        u = rng.random(shape)
        z = rng.standard_normal(shape)
        kind = self.kind[rows, cols]
        p1 = self.p1[rows, cols]
        p2 = self.p2[rows, cols]
        out = np.select(
            [kind == _POINT, kind == _RADEMACHER, kind == _UNIFORM, kind == _NORMAL],
            [p1, p2 + p1 * np.where(u < 0.5, -1.0, 1.0), p1 + (p2 - p1) * u, p1 + p2 * z],
            default=0.0,
        )
        if self.has_discrete:
            disc = kind == _DISCRETE
            if disc.any():
                r, c = np.broadcast_to(rows, shape)[disc], np.broadcast_to(cols, shape)[disc]
                idx = np.sum(u[disc][:, None] >= self.cuts[r, c], axis=1)
                out[disc] = self.values[r, c, idx]
        return out + self.shift[rows, cols]


@lru_cache(maxsize=64)
def _compile(a: ArraySpec) -> _Compiled:
    return _Compiled(a)


def realize_w(a: ArraySpec, rng: np.random.Generator, size: int | None = None):
    """Draw ``W = sum_i X_{i pi(i)}``; only the n cells hit by pi are sampled."""
    comp = _compile(a)
    m = 1 if size is None else size
    perms = sample_permutations(a.n, m, rng)
    rows = np.broadcast_to(np.arange(a.n), perms.shape)
    w = comp.sample(rows, perms, rng).sum(axis=1)
    return float(w[0]) if size is None else w


@dataclass(frozen=True)
class ExchangeablePairSample:
    w: float
    w_prime: float
    i: int
    j: int

    def __post_init__(self):
        if self.i == self.j:
            raise InvalidArguments("swapped positions must differ")

    @classmethod
    def from_realization(cls, x_diag, x_ipj: float, x_jpi: float, i: int, j: int) -> "ExchangeablePairSample":
        """Build from the realized ``X_{r pi(r)}`` and the two cross cells, checking the swap identity."""
        x_diag = np.asarray(x_diag, dtype=float)
        w = float(x_diag.sum())
        swapped = x_diag.copy()
        swapped[i], swapped[j] = x_ipj, x_jpi
        w_prime = float(swapped.sum())
        incr = x_ipj + x_jpi - x_diag[i] - x_diag[j]
        if not math.isclose(w_prime - w, incr, rel_tol=1e-9, abs_tol=1e-9 * (1 + np.abs(x_diag).sum())):
            raise ArithmeticError("swap increment mismatch")
        return cls(w, w_prime, int(i), int(j))


class PairBatch(NamedTuple):
    w: np.ndarray
    w_prime: np.ndarray
    i: np.ndarray
    j: np.ndarray


def exchangeable_steps(a: ArraySpec, size: int, rng: np.random.Generator) -> PairBatch:
    """``size`` independent draws of ``(W, W', I, J)``; each draws fresh X and pi."""
    n = a.n
    if n < 2:
        raise InvalidArguments("need n >= 2")
    comp = _compile(a)
    perms = sample_permutations(n, size, rng)
    i = rng.integers(0, n, size)
    j = rng.integers(0, n - 1, size)
    j = j + (j >= i)
    rows = np.broadcast_to(np.arange(n), perms.shape)
    x = comp.sample(rows, perms, rng)
    idx = np.arange(size)
    pi_i, pi_j = perms[idx, i], perms[idx, j]
    cross = comp.sample(np.stack([i, j], axis=1), np.stack([pi_j, pi_i], axis=1), rng)
    w = x.sum(axis=1)
    w_prime = w - x[idx, i] - x[idx, j] + cross[:, 0] + cross[:, 1]
    return PairBatch(w, w_prime, i, j)


def exchangeable_step(a: ArraySpec, rng: np.random.Generator) -> ExchangeablePairSample:
    comp = _compile(a)
    n = a.n
    p = sample_permutation(n, rng)
    pairs = rng.choice(n, size=2, replace=False)
    i, j = int(pairs[0]), int(pairs[1])
    perm = np.array(p.map)
    x = comp.sample(np.arange(n), perm, rng)
    cross = comp.sample(np.array([i, j]), np.array([perm[j], perm[i]]), rng)
    return ExchangeablePairSample.from_realization(x, cross[0], cross[1], i, j)


# -- Kolmogorov distance --------------------------------------------------------


@dataclass(frozen=True)
class EmpiricalSample:
    values: np.ndarray
    seed: int

    def __post_init__(self):
        if len(self.values) < 1:
            raise InvalidArguments("empty sample")
        if np.any(np.diff(self.values) < 0):
            raise InvalidArguments("values must be sorted ascending")

    @property
    def count(self) -> int:
        return len(self.values)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["w"])
            writer.writerows([repr(float(v))] for v in self.values)


class KSEstimate(NamedTuple):
    ks: float
    dkw_eps: float
    sample: EmpiricalSample


def dkw_epsilon(count: int, alpha: float) -> float:
    """DKW radius: P(sup |F_N - F| > eps) <= alpha."""
    if not 0 < alpha < 1:
        raise InvalidArguments("alpha must lie in (0, 1)")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * count))


def ks_to_normal(sorted_values: np.ndarray) -> float:
    """sup_z |F_N(z) - Phi(z)| for an empirical CDF, checking both sides of each jump."""
    x = np.asarray(sorted_values, dtype=float)
    count = len(x)
    phi = normal_cdf(x)
    ranks = np.arange(1, count + 1)
    return float(max(np.max(np.abs(ranks / count - phi)), np.max(np.abs((ranks - 1) / count - phi))))


def simulate_w(a: ArraySpec, count: int, seed: int) -> np.ndarray:
    """``count`` draws of W in replicate order, block ``b`` from ``stream(seed, b)``."""
    if count < 1:
        raise InvalidArguments("need at least one replicate")
    chunks = []
    for b, start in enumerate(range(0, count, BLOCK)):
        chunks.append(realize_w(a, stream(seed, b), size=min(BLOCK, count - start)))
    return np.concatenate(chunks)


def mc_ks_distance(a: ArraySpec, count: int, seed: int = 0, alpha: float = 0.05) -> KSEstimate:
    """Monte Carlo estimate of sup_z |P(W <= z) - Phi(z)| with its DKW radius."""
    eps = dkw_epsilon(count, alpha)
    sample = EmpiricalSample(np.sort(simulate_w(a, count, seed)), seed)
    return KSEstimate(ks_to_normal(sample.values), eps, sample)
