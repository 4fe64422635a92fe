"""Brute-force ground truth for small deterministic arrays.

Every function here enumerates all permutations (and, where relevant, all
swap pairs) of a real matrix ``c``, so results are exact up to floating
point summation.  Sizes are capped at ``MAX_N = 10``.
"""
from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .arraymodel import is_centered
from .bounds import C0, concentration_constants
from .exceptions import InternalCheckFailure, InvalidArguments, NotCentered, SizeLimitExceeded
from .permsim import PermutationState, couple_permutation
from .steinfn import normal_cdf

MAX_N = 10
LINEARITY_MAX_N = 8
CONCENTRATION_MAX_N = 9
MERGE_TOL = 1e-12
ES2_TOL = 1e-10


@dataclass(frozen=True)
class AtomicDistribution:
    """Finite law: strictly increasing ``values`` with positive ``probs`` summing to one."""

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        v, p = np.asarray(self.values, dtype=float), np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", p)
        if v.shape != p.shape or v.ndim != 1 or len(v) == 0:
            raise InvalidArguments("values and probs must be equal-length nonempty vectors")
        if np.any(p <= 0) or abs(math.fsum(p) - 1.0) > 1e-12:
            raise InvalidArguments("probabilities must be positive and sum to 1")
        if np.any(np.diff(v) <= 0):
            raise InvalidArguments("values must be strictly increasing")

    @classmethod
    def from_weighted(cls, values, weights=None, tol: float = MERGE_TOL) -> "AtomicDistribution":
        """Collapse values closer than ``tol`` (chained) into single atoms."""
        values = np.asarray(values, dtype=float).ravel()
        weights = np.ones_like(values) if weights is None else np.asarray(weights, dtype=float).ravel()
        labels, order = _group_labels(values, tol)
        total = weights.sum()
        w = np.bincount(labels, weights=weights[order])
        v = np.bincount(labels, weights=values[order] * weights[order]) / w
        return cls(v, w / total)

    def __iter__(self):
        return iter(zip(self.values.tolist(), self.probs.tolist()))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    @property
    def variance(self) -> float:
        return float(np.dot((self.values - self.mean) ** 2, self.probs))

    def cdf(self, x: float) -> float:
        return float(self.probs[self.values <= x].sum())

    def prob_between(self, a: float, b: float) -> float:
        return float(self.probs[(self.values >= a) & (self.values <= b)].sum())

    def to_list(self) -> list[list[float]]:
        return [[v, p] for v, p in self]

    def to_json(self) -> str:
        return json.dumps(self.to_list())

    @classmethod
    def from_json(cls, text: str) -> "AtomicDistribution":
        pairs = json.loads(text)
        return cls(np.array([v for v, _ in pairs]), np.array([p for _, p in pairs]))


def _group_labels(values: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Labels (in sorted order) for chains of values no more than ``tol`` apart."""
    order = np.argsort(values, kind="stable")
    sv = values[order]
    breaks = np.concatenate([[0], (np.diff(sv) > tol).astype(np.int64)])
    return np.cumsum(breaks), order


def _labels_unsorted(values: np.ndarray, tol: float = MERGE_TOL) -> tuple[np.ndarray, int]:
    labels_sorted, order = _group_labels(values, tol)
    labels = np.empty_like(labels_sorted)
    labels[order] = labels_sorted
    return labels, int(labels_sorted[-1]) + 1


def _matrix(c, max_n: int) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise InvalidArguments("c must be a square matrix")
    if c.shape[0] > max_n:
        raise SizeLimitExceeded(f"n = {c.shape[0]} exceeds the enumeration cap {max_n}")
    return c


def all_permutations(n: int) -> np.ndarray:
    """All n! permutations as rows, lexicographic order."""
    if n > MAX_N:
        raise SizeLimitExceeded(f"n = {n} exceeds the enumeration cap {MAX_N}")
    return np.array(list(itertools.permutations(range(n))), dtype=np.int8).reshape(-1, n)


def _perm_sums(c: np.ndarray) -> np.ndarray:
    n = c.shape[0]
    if n <= 8:
        perms = all_permutations(n)
        return c[np.arange(n), perms].sum(axis=1)
    # partition by the image of 0 to bound memory
    rest = all_permutations(n - 1)
    parts = []
    for first in range(n):
        cols = np.delete(np.arange(n), first)[rest]
        parts.append(c[0, first] + c[np.arange(1, n), cols].sum(axis=1))
    return np.concatenate(parts)


def exact_w_distribution(c) -> AtomicDistribution:
    """Law of ``sum_i c[i, pi(i)]`` for uniform pi."""
    c = _matrix(c, MAX_N)
    return AtomicDistribution.from_weighted(_perm_sums(c))


def exact_ks(d: AtomicDistribution) -> float:
    """sup_z |F(z) - Phi(z)|, checking F(v) and F(v-) at every atom."""
    phi = normal_cdf(d.values)
    upper = np.cumsum(d.probs)
    lower = upper - d.probs
    return float(max(np.max(np.abs(upper - phi)), np.max(np.abs(lower - phi))))


def _swap_increments(c: np.ndarray, perms: np.ndarray, ordered: bool) -> np.ndarray:
    """``S' - S`` for every permutation (rows) and swap pair (columns)."""
    k = perms.shape[1]
    pairs = list(itertools.permutations(range(k), 2) if ordered else itertools.combinations(range(k), 2))
    i = np.array([p[0] for p in pairs])
    j = np.array([p[1] for p in pairs])
    pi_i, pi_j = perms[:, i], perms[:, j]
    return c[i, pi_j] + c[j, pi_i] - c[i, pi_i] - c[j, pi_j]


def conditional_increment(c) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact ``E(W' - W | W)``: returns (w atoms, probabilities, conditional means)."""
    c = _matrix(c, LINEARITY_MAX_N)
    n = c.shape[0]
    perms = all_permutations(n)
    w = c[np.arange(n), perms].sum(axis=1)
    mean_incr = _swap_increments(c, perms, ordered=False).mean(axis=1)
    labels, groups = _labels_unsorted(w)
    counts = np.bincount(labels, minlength=groups)
    w_atoms = np.bincount(labels, weights=w, minlength=groups) / counts
    cond = np.bincount(labels, weights=mean_incr, minlength=groups) / counts
    return w_atoms, counts / len(w), cond


def verify_linearity(c) -> float:
    """max over atoms w of |E(W' - W | W = w) + lambda w| with lambda = 2/(n-1)."""
    c = _matrix(c, LINEARITY_MAX_N)
    if not is_centered(c):
        raise NotCentered("row and column means must vanish")
    n = c.shape[0]
    w, _, cond = conditional_increment(c)
    return float(np.max(np.abs(cond + 2.0 / (n - 1) * w)))


def es2_expansion(c, m: int, sigma2=None) -> float:
    """Closed-form E S^2 for a centered array with the last m rows/columns removed."""
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    k = n - m
    blk = c[:k, :k]
    s2 = 0.0 if sigma2 is None else float(np.asarray(sigma2)[:k, :k].sum())
    corner = c[k:, k:].sum()
    row_tail = c[:k, k:].sum(axis=1)  # sum over removed columns, per kept row
    col_tail = c[k:, :k].sum(axis=0)  # sum over removed rows, per kept column
    cross = np.sum(blk * (corner + row_tail[:, None] + col_tail[None, :]))
    return float(s2 / k + np.sum(blk**2) / (k - 1) + cross / (k * (k - 1)))


class SStatistics(NamedTuple):
    es2: float
    e_abs3_increment: float
    es2_formula: float


def _check_m(n: int, m: int) -> None:
    if m not in (2, 3, 4):
        raise InvalidArguments(f"m must be 2, 3 or 4, got {m}")
    if n < m + 2:
        raise InvalidArguments(f"need n >= m + 2, got n={n}, m={m}")


def exact_s_statistics(c, m: int) -> SStatistics:
    """E S^2 and E|S' - S|^3 for S = sum_{i < n-m} c[i, tau(i)].

    For centered input the enumerated E S^2 is cross-checked against
    :func:`es2_expansion`; otherwise ``es2_formula`` is NaN.
    """
    c = _matrix(c, MAX_N)
    n = c.shape[0]
    _check_m(n, m)
    k = n - m
    perms = all_permutations(k)
    s = c[np.arange(k), perms].sum(axis=1)
    es2 = float(np.mean(s * s))
    e3 = float(np.mean(np.abs(_swap_increments(c, perms, ordered=True)) ** 3))
    formula = math.nan
    if is_centered(c):
        formula = es2_expansion(c, m)
        if abs(formula - es2) > ES2_TOL * max(1.0, abs(es2)):
            raise InternalCheckFailure(f"enumerated E S^2 = {es2!r} but expansion gives {formula!r}")
    return SStatistics(es2, e3, formula)


class ConcentrationCheck(NamedTuple):
    lhs: float
    rhs_lemma: float
    applicable: bool
    lam: float
    delta: float
    remainder: float
    denominator: float
    prop_rhs: float
    prop_premises: bool


def exact_concentration_check(c, m: int, a: float, b: float, c0: float = C0) -> ConcentrationCheck:
    """Compare the exact P(S in [a, b]) with the exchangeable-pair concentration bound.

    ``R`` in E(S' - S | S) = -lambda S + R is computed exactly rather than
    assumed zero (for a deterministic centered array it is the constant
    ``2 * corner_sum / ((n-m)(n-m-1))``).  When the bound's premise
    ``E S^2 - E|SR|/lambda - 1/2 > 0`` holds, a violation raises
    InternalCheckFailure.
    """
    c = _matrix(c, CONCENTRATION_MAX_N)
    n = c.shape[0]
    _check_m(n, m)
    if not a < b:
        raise InvalidArguments("need a < b")
    k = n - m
    lam = 2.0 / (k - 1)
    perms = all_permutations(k)
    s = c[np.arange(k), perms].sum(axis=1)
    incr = _swap_increments(c, perms, ordered=True)
    p_perm = 1.0 / len(s)

    labels, groups = _labels_unsorted(s)
    counts = np.bincount(labels, minlength=groups)
    probs = counts * p_perm
    s_atoms = np.bincount(labels, weights=s, minlength=groups) / counts
    cond_incr = np.bincount(labels, weights=incr.mean(axis=1), minlength=groups) / counts
    r = cond_incr + lam * s_atoms

    e_abs_s = float(np.dot(probs, np.abs(s_atoms)))
    es2 = float(np.dot(probs, s_atoms**2))
    e_abs_r = float(np.dot(probs, np.abs(r)))
    e_abs_sr = float(np.dot(probs, np.abs(s_atoms * r)))
    delta = float(np.mean(np.abs(incr) ** 3)) / lam

    g = np.where(np.abs(incr) <= delta, incr**2, 0.0).mean(axis=1) / (2 * lam)
    cond_g = np.bincount(labels, weights=g, minlength=groups) / counts
    var_cond = float(np.dot(probs, (cond_g - np.dot(probs, cond_g)) ** 2))

    denom = es2 - e_abs_sr / lam - 0.5
    applicable = denom > 0
    lhs = float(probs[(s_atoms >= a) & (s_atoms <= b)].sum())
    if applicable:
        rhs = (e_abs_s + e_abs_r / lam) / denom * ((b - a) / 2 + delta) + math.sqrt(var_cond) / denom
        if lhs > rhs + 1e-12:
            raise InternalCheckFailure(f"P(S in [{a}, {b}]) = {lhs} exceeds the bound {rhs}")
    else:
        rhs = math.inf

    gamma = float(np.sum(np.abs(c) ** 3) / n)
    prop_rhs, premises = math.nan, False
    if n >= 6:
        kc = concentration_constants(n, m, c0)
        prop_rhs = kc.c1 * (b - a) + kc.c2 * gamma
        premises = kc.theta > 0 and gamma <= 1 / c0
    return ConcentrationCheck(lhs, rhs, applicable, lam, delta, float(np.mean(r)), denom, prop_rhs, premises)


def coupling_pushforward(n: int, i: int, j: int, k: int, l: int) -> Counter:
    """Image counts of all n! permutations under ``couple_permutation(., i, j, k, l)``."""
    if n > MAX_N:
        raise SizeLimitExceeded(f"n = {n} exceeds the enumeration cap {MAX_N}")
    return Counter(
        couple_permutation(PermutationState(p), i, j, k, l).map for p in itertools.permutations(range(n))
    )


def coupling_law_exact(n: int, i: int, j: int, k: int, l: int) -> bool:
    """True iff the pushforward is uniform on {pi : pi(i)=k, pi(j)=l}."""
    counts = coupling_pushforward(n, i, j, k, l)
    admissible = {p for p in itertools.permutations(range(n)) if p[i] == k and p[j] == l}
    return set(counts) == admissible and set(counts.values()) == {n * (n - 1)}


def exact_srs_distribution(values, k: int) -> AtomicDistribution:
    """Law of the sum of k values drawn without replacement from ``values``."""
    values = np.asarray(values, dtype=float)
    if not 1 <= k <= len(values):
        raise InvalidArguments("k must lie in [1, n]")
    sums = [math.fsum(values[list(idx)]) for idx in itertools.combinations(range(len(values)), k)]
    return AtomicDistribution.from_weighted(sums)
