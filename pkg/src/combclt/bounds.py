"""Explicit constants of the Berry-Esseen bound for W = sum_i X_{i pi(i)}.

Everything here is a closed-form evaluation in double precision:

* ``theorem_bound``: the headline ``451 * gamma``.
* ``srs_bound``: the sampling-without-replacement specialization, plus the
  row-copy array construction it is derived from (``row_copy_array``).
* ``concentration_constants`` / ``es2_envelope``: theta, c1, c2, c3, the
  second-moment envelope and the increment bound coefficient for the
  truncated statistic S (last ``m`` rows and columns removed).
* ``final_coefficient``: the coefficient multiplying gamma at the end of the
  argument; it must come out below 451 at n = 203000.
* ``trivial_threshold``: below this n, gamma <= 1/c0 is impossible for a
  standardized array, so the bound is trivially true there.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from .arraymodel import (
    DEGENERATE_VAR,
    ArraySpec,
    CellDistribution,
    MomentSummary,
    cell_moments,
    prepare,
)
from .exceptions import DegenerateVariance, InvalidArguments, SchemaError, ThetaNonpositive

C0 = 451
STANDARDIZED_TOL = 1e-8


@dataclass(frozen=True)
class BoundReport:
    n: int
    gamma: float
    varW: float
    bound: float
    centered_ok: bool
    standardized_ok: bool
    trivial_case: bool

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def theorem_bound(ms: MomentSummary, c0: float = C0) -> BoundReport:
    bound = c0 * ms.gamma
    return BoundReport(
        n=ms.n,
        gamma=ms.gamma,
        varW=ms.varW,
        bound=bound,
        centered_ok=ms.centered,
        standardized_ok=abs(ms.varW - 1.0) <= STANDARDIZED_TOL,
        trivial_case=bound >= 1.0,
    )


# -- concentration constants --------------------------------------------------


def _check_nm(n: int, m: int) -> None:
    if int(n) != n or n < 6:
        raise InvalidArguments(f"n must be an integer >= 6, got {n}")
    if m not in (2, 3, 4):
        raise InvalidArguments(f"m must be 2, 3 or 4, got {m}")


def es2_envelope(n: int, m: int = 2, c0: float = C0) -> tuple[float, float]:
    """Lower and upper envelope for E S^2 when gamma <= 1/c0.

    The lower end goes negative for moderate n and is returned as is.
    """
    _check_nm(n, m)
    tail = 24 * n / (n - 5) ** 2
    lo = (n - 1) / (n - 2) - 2 * n / ((n - 4) * c0 ** (2 / 3)) - tail
    hi = n / (n - 5) + tail
    return lo, hi


def _c3(n: int) -> float:
    return math.sqrt(n / (n - 5) + 24 * n / (n - 5) ** 2)


@dataclass(frozen=True)
class ConcentrationConstants:
    """Constants of the concentration inequality P(S in [a,b]) <= c1 (b-a) + c2 gamma.

    ``delta_max`` is the coefficient of gamma in the bound on
    ``delta = E|S'-S|^3 / lambda``, i.e. ``delta <= delta_max * gamma``.
    ``c1`` and ``c2`` are only meaningful when ``theta > 0``.
    """

    n: int
    m: int
    c0: float
    lambda_: float
    theta: float
    c1: float
    c2: float
    c3: float
    delta_max: float
    es2_lo: float
    es2_hi: float

    @property
    def applicable(self) -> bool:
        return self.theta > 0

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["lambda"] = d.pop("lambda_")
        d["applicable"] = self.applicable
        return d


def concentration_constants(n: int, m: int = 2, c0: float = C0) -> ConcentrationConstants:
    _check_nm(n, m)
    if not c0 > 0:
        raise InvalidArguments("c0 must be positive")
    n = int(n)
    es2_lo, es2_hi = es2_envelope(n, m, c0)
    root_hi = math.sqrt(es2_hi)
    theta = (
        0.5
        - 2 * n / ((n - 4) * c0 ** (2 / 3))
        - 24 * n / (n - 5) ** 2
        - 4 * math.sqrt(n) / (n - 4) * root_hi
    )
    c1 = (0.5 * root_hi + 2 * math.sqrt(n) / (n - 4)) / theta
    b0_coef = 8 * n / (n - 4) ** 2 + 16 * n / (n - 4) + 32 * (n / (n - 4)) ** 3
    delta_max = 32 * n / (n - 4)
    c2 = 64 * n / (n - 4) * c1 + math.sqrt(b0_coef * delta_max) / theta
    return ConcentrationConstants(
        n=n,
        m=m,
        c0=float(c0),
        lambda_=2 / (n - m - 1),
        theta=theta,
        c1=c1,
        c2=c2,
        c3=_c3(n),
        delta_max=delta_max,
        es2_lo=es2_lo,
        es2_hi=es2_hi,
    )


def final_coefficient(n: int, c0: float = C0, m: int = 2) -> float:
    """Coefficient of gamma in the assembled Kolmogorov bound."""
    k = concentration_constants(n, m, c0)
    if k.theta <= 0:
        raise ThetaNonpositive(f"theta = {k.theta:.6g} <= 0 at n = {n}, c0 = {c0}")
    return (
        40 * k.c1
        + 2 * (1 + 1 / math.sqrt(n)) * k.c2
        + 14 * math.sqrt(2 * math.pi)
        + 56 * k.c3
        + 2 * (n / (n - 1)) ** 1.5
    )


def _gamma_impossible(n: int, c0: float) -> bool:
    # standardized arrays satisfy n - 1 <= n^{4/3} gamma^{2/3}
    return (n - 1) / n ** (4 / 3) > c0 ** (-2 / 3)


def trivial_threshold(c0: float = C0) -> int:
    """Largest n in [2, 4 c0^2] with (n-1)/n^{4/3} > c0^{-2/3}; 1 if there is none.

    (n-1)/n^{4/3} rises up to n = 4 and decreases afterwards, so the
    largest solution is found by bisection on the decreasing branch.
    """
    if not c0 > 0:
        raise InvalidArguments("c0 must be positive")
    top = max(4, int(math.floor(4 * c0 * c0)))
    candidates = [n for n in (2, 3, 4) if _gamma_impossible(n, c0)]
    if not _gamma_impossible(4, c0):
        return max(candidates, default=1)
    if _gamma_impossible(top, c0):
        return top
    lo, hi = 4, top  # predicate true at lo, false at hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _gamma_impossible(mid, c0):
            lo = mid
        else:
            hi = mid
    return lo


def gamma_premise_feasible(n: int, c0: float = C0) -> bool:
    """Whether some standardized n x n array can have gamma <= 1/c0."""
    return not _gamma_impossible(n, c0)


# -- simple random sampling ---------------------------------------------------


@dataclass(frozen=True)
class SrsSpec:
    """k draws without replacement from independent Y_1..Y_n; V is their sum."""

    k: int
    y: tuple[CellDistribution, ...]
    mu: np.ndarray = field(init=False, repr=False, compare=False)
    sigma2_i: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.y)
        if n < 2:
            raise InvalidArguments("need at least two variables")
        if not 1 <= self.k <= n:
            raise InvalidArguments(f"k must lie in [1, {n}]")
        moments = np.array([cell_moments(d) for d in self.y])
        object.__setattr__(self, "mu", moments[:, 0])
        object.__setattr__(self, "sigma2_i", moments[:, 1])

    @classmethod
    def from_cells(cls, k: int, y: Sequence[CellDistribution]) -> "SrsSpec":
        return cls(int(k), tuple(y))

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def mu_bar(self) -> float:
        return float(self.mu.mean())

    @property
    def sigma2(self) -> float:
        n, k = self.n, self.k
        return float(
            k / n * self.sigma2_i.sum() + k * (n - k) / (n * (n - 1)) * np.sum((self.mu - self.mu_bar) ** 2)
        )

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "k": self.k, "y": [d.to_dict() for d in self.y]}

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "SrsSpec":
        if not isinstance(doc, dict) or "y" not in doc or "k" not in doc:
            raise SchemaError("SrsSpec document needs 'k' and 'y'")
        if "n" in doc and doc["n"] != len(doc["y"]):
            raise SchemaError("'n' disagrees with the length of 'y'")
        try:
            return cls.from_cells(doc["k"], [CellDistribution.from_dict(c) for c in doc["y"]])
        except InvalidArguments as exc:
            raise SchemaError(str(exc)) from exc


def srs_bound(s: SrsSpec, c0: float = C0) -> float:
    n, k = s.n, s.k
    sigma2 = s.sigma2
    if sigma2 <= DEGENERATE_VAR:
        raise DegenerateVariance(f"Var(V) = {sigma2:.3g} is too small")
    mu_bar = s.mu_bar
    # (k/n)(Y - mu_i) + ((n-k)/n)(Y - mu_bar) = Y - (k/n) mu_i - ((n-k)/n) mu_bar
    inner = math.fsum(
        cell_moments(d.shifted(-(k / n) * mu - ((n - k) / n) * mu_bar))[2] for d, mu in zip(s.y, s.mu)
    )
    outer = float(np.sum(np.abs(k / n * (s.mu - mu_bar)) ** 3))
    return c0 / (n * sigma2**1.5) * (k * inner + (n - k) * outer)


def row_copy_array(s: SrsSpec) -> ArraySpec:
    """First k rows are copies of (Y_1..Y_n), the rest are zero."""
    zero = CellDistribution.point(0.0)
    rows = [list(s.y) if i < s.k else [zero] * s.n for i in range(s.n)]
    return ArraySpec.from_cells(rows)


def srs_bound_via_array(s: SrsSpec, c0: float = C0) -> float:
    """Same bound obtained by centering/standardizing the row-copy array."""
    _, ms = prepare(row_copy_array(s))
    return theorem_bound(ms, c0).bound
