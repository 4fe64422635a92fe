"""Independent random arrays, per-cell moments, centering and standardization.

An array is an ``n x n`` grid of independent cells.  Each cell is one of a
small closed set of distribution families plus an additive ``shift``; the
shift is what centering adjusts.  ``summarize`` turns an array into the
mean / variance / third-absolute-moment matrices together with ``Var(W)``
and ``gamma = sum(E|X_ij|^3) / n``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Iterable, Sequence

import numpy as np
from scipy import integrate

from .exceptions import DegenerateVariance, InvalidArguments, QuadratureFailure, SchemaError

KINDS = ("point", "rademacher", "uniform", "normal", "discrete")

QUAD_TOL = 1e-10
QUAD_BUDGET = 10**6
CENTER_TOL = 1e-10
DEGENERATE_VAR = 1e-14

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_Z_MAX = 40.0


@dataclass(frozen=True)
class CellDistribution:
    """Law of one entry ``X_ij``: a tagged family plus an additive shift.

    Use the classmethod constructors rather than building ``params`` by hand.
    ``params`` layout per kind:

    ``point``       ``(value,)``
    ``rademacher``  ``(scale, center)``, values ``center +/- scale``
    ``uniform``     ``(lo, hi)``
    ``normal``      ``(mean, sd)``
    ``discrete``    ``((value, prob), ...)``
    """

    kind: str
    params: tuple
    shift: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArguments(f"unknown cell kind {self.kind!r}")
        p = self.params
        if not math.isfinite(self.shift):
            raise InvalidArguments("shift must be finite")
        if self.kind == "point":
            if len(p) != 1 or not math.isfinite(p[0]):
                raise InvalidArguments("point needs one finite value")
        elif self.kind == "rademacher":
            if len(p) != 2 or p[0] < 0 or not all(map(math.isfinite, p)):
                raise InvalidArguments("rademacher needs scale >= 0 and a finite center")
        elif self.kind == "uniform":
            if len(p) != 2 or not p[0] < p[1] or not all(map(math.isfinite, p)):
                raise InvalidArguments("uniform needs finite lo < hi")
        elif self.kind == "normal":
            if len(p) != 2 or p[1] < 0 or not all(map(math.isfinite, p)):
                raise InvalidArguments("normal needs sd >= 0 and a finite mean")
        else:
            if not p:
                raise InvalidArguments("discrete needs at least one atom")
            probs = [q for _, q in p]
            if any(q <= 0 for q in probs) or abs(math.fsum(probs) - 1.0) > 1e-12:
                raise InvalidArguments("discrete probabilities must be > 0 and sum to 1")
            if not all(math.isfinite(v) for v, _ in p):
                raise InvalidArguments("discrete values must be finite")

    # constructors ---------------------------------------------------------

    @classmethod
    def point(cls, value: float, shift: float = 0.0) -> "CellDistribution":
        return cls("point", (float(value),), float(shift))

    @classmethod
    def rademacher(cls, scale: float = 1.0, center: float = 0.0, shift: float = 0.0):
        return cls("rademacher", (float(scale), float(center)), float(shift))

    @classmethod
    def uniform(cls, lo: float, hi: float, shift: float = 0.0):
        return cls("uniform", (float(lo), float(hi)), float(shift))

    @classmethod
    def normal(cls, mean: float = 0.0, sd: float = 1.0, shift: float = 0.0):
        return cls("normal", (float(mean), float(sd)), float(shift))

    @classmethod
    def discrete(cls, atoms: Iterable[tuple[float, float]], shift: float = 0.0):
        return cls("discrete", tuple((float(v), float(q)) for v, q in atoms), float(shift))

    # transforms -----------------------------------------------------------

    def shifted(self, delta: float) -> "CellDistribution":
        return CellDistribution(self.kind, self.params, self.shift + float(delta))

    def scaled(self, k: float) -> "CellDistribution":
        """Law of ``k * X`` for ``k > 0``."""
        if not k > 0:
            raise InvalidArguments("scale factor must be positive")
        if self.kind == "discrete":
            params = tuple((v * k, q) for v, q in self.params)
        else:
            params = tuple(v * k for v in self.params)
        return CellDistribution(self.kind, params, self.shift * k)

    @property
    def is_deterministic(self) -> bool:
        if self.kind == "point":
            return True
        if self.kind in ("rademacher", "normal"):
            return self.params[1 if self.kind == "normal" else 0] == 0
        if self.kind == "discrete":
            return len(self.params) == 1
        return False

    def atoms(self) -> list[tuple[float, float]] | None:
        """Finite support as ``(value, prob)`` pairs, shift included; None if continuous."""
        s = self.shift
        if self.kind == "point":
            return [(self.params[0] + s, 1.0)]
        if self.kind == "rademacher":
            a, c = self.params
            if a == 0:
                return [(c + s, 1.0)]
            return [(c - a + s, 0.5), (c + a + s, 0.5)]
        if self.kind == "discrete":
            return [(v + s, q) for v, q in self.params]
        if self.kind == "normal" and self.params[1] == 0:
            return [(self.params[0] + s, 1.0)]
        return None

    def moments(self) -> tuple[float, float, float]:
        return cell_moments(self)

    # serialization --------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        p = self.params
        if self.kind == "point":
            d = {"type": "point", "value": p[0]}
        elif self.kind == "rademacher":
            d = {"type": "rademacher", "scale": p[0], "center": p[1]}
        elif self.kind == "uniform":
            d = {"type": "uniform", "lo": p[0], "hi": p[1]}
        elif self.kind == "normal":
            d = {"type": "normal", "mean": p[0], "sd": p[1]}
        else:
            d = {"type": "discrete", "atoms": [[v, q] for v, q in p]}
        d["shift"] = self.shift
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CellDistribution":
        try:
            kind = d["type"]
            shift = float(d.get("shift", 0.0))
            if kind == "point":
                return cls.point(d["value"], shift)
            if kind == "rademacher":
                return cls.rademacher(d.get("scale", 1.0), d.get("center", 0.0), shift)
            if kind == "uniform":
                return cls.uniform(d["lo"], d["hi"], shift)
            if kind == "normal":
                return cls.normal(d.get("mean", 0.0), d.get("sd", 1.0), shift)
            if kind == "discrete":
                return cls.discrete([(v, q) for v, q in d["atoms"]], shift)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidArguments):
                raise SchemaError(str(exc)) from exc
            raise SchemaError(f"malformed cell {d!r}: {exc}") from exc
        raise SchemaError(f"unknown cell type {kind!r}")


def _quad_abs3(func, pieces: Sequence[tuple[float, float]]) -> float:
    total = 0.0
    for lo, hi in pieces:
        if lo == hi:
            continue
        val, err, info = integrate.quad(
            func, lo, hi, epsabs=QUAD_TOL / 4, epsrel=1e-13, limit=500, full_output=1
        )[:3]
        if info["neval"] > QUAD_BUDGET or not err <= max(QUAD_TOL / 2, 1e-13 * abs(val)):
            raise QuadratureFailure(f"quad reached error {err:.3g} after {info['neval']} evaluations")
        total += val
    return total


def _normal_abs3(mean: float, sd: float) -> float:
    # E|mean + sd*Z|^3 over |z| <= 40 (the rest weighs < e^-800), split at 0 and at the kink
    kink = -mean / sd
    cuts = sorted({-_Z_MAX, 0.0, _Z_MAX, *([kink] if abs(kink) < _Z_MAX else [])})

    def integrand(z):
        return abs(mean + sd * z) ** 3 * math.exp(-0.5 * z * z) / _SQRT_2PI

    return _quad_abs3(integrand, list(zip(cuts[:-1], cuts[1:])))


def _uniform_abs3(lo: float, hi: float) -> float:
    width = hi - lo
    pieces = [(lo, min(hi, 0.0)), (max(lo, 0.0), hi)] if lo < 0 < hi else [(lo, hi)]
    return _quad_abs3(lambda x: abs(x) ** 3 / width, pieces)


@lru_cache(maxsize=65536)
def cell_moments(d: CellDistribution) -> tuple[float, float, float]:
    """Return ``(mean, variance, E|X|^3)`` of a cell, shift included."""
    atoms = d.atoms()
    if atoms is not None:
        mean = math.fsum(v * q for v, q in atoms)
        var = math.fsum(q * (v - mean) ** 2 for v, q in atoms)
        abs3 = math.fsum(q * abs(v) ** 3 for v, q in atoms)
        return mean, var, abs3
    if d.kind == "uniform":
        lo, hi = d.params[0] + d.shift, d.params[1] + d.shift
        mean = 0.5 * (lo + hi)
        var = (hi - lo) ** 2 / 12.0
        if mean == 0.0:
            return 0.0, var, hi**3 / 4.0
        return mean, var, _uniform_abs3(lo, hi)
    mu, sd = d.params[0] + d.shift, d.params[1]
    if mu == 0.0:
        return 0.0, sd * sd, 2.0 * math.sqrt(2.0 / math.pi) * sd**3
    return mu, sd * sd, _normal_abs3(mu, sd)


@dataclass(frozen=True)
class ArraySpec:
    """The ``n x n`` array of independent cells."""

    n: int
    cells: tuple[tuple[CellDistribution, ...], ...]

    def __post_init__(self):
        if self.n < 2:
            raise InvalidArguments("array needs n >= 2")
        if len(self.cells) != self.n or any(len(row) != self.n for row in self.cells):
            raise InvalidArguments(f"cells must form an exact {self.n}x{self.n} grid")

    @classmethod
    def from_cells(cls, cells: Sequence[Sequence[CellDistribution]]) -> "ArraySpec":
        rows = tuple(tuple(row) for row in cells)
        return cls(len(rows), rows)

    @classmethod
    def from_means(cls, matrix) -> "ArraySpec":
        """Deterministic array with ``X_ij = matrix[i][j]``."""
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidArguments("matrix must be square")
        return cls.from_cells([[CellDistribution.point(v) for v in row] for row in m])

    def map(self, fn) -> "ArraySpec":
        return ArraySpec.from_cells([[fn(i, j, d) for j, d in enumerate(row)] for i, row in enumerate(self.cells)])

    def scaled(self, k: float) -> "ArraySpec":
        return self.map(lambda i, j, d: d.scaled(k))

    @property
    def is_deterministic(self) -> bool:
        return all(d.is_deterministic for row in self.cells for d in row)

    def mean_matrix(self) -> np.ndarray:
        return np.array([[cell_moments(d)[0] for d in row] for row in self.cells])

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "cells": [[d.to_dict() for d in row] for row in self.cells]}

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ArraySpec":
        if not isinstance(doc, dict) or "cells" not in doc:
            raise SchemaError("ArraySpec document needs a 'cells' grid")
        cells = doc["cells"]
        if not isinstance(cells, list) or not all(isinstance(r, list) for r in cells):
            raise SchemaError("'cells' must be a list of lists")
        n = doc.get("n", len(cells))
        if n != len(cells) or any(len(r) != n for r in cells):
            raise SchemaError(f"'cells' is not an exact {n}x{n} grid")
        try:
            return cls.from_cells([[CellDistribution.from_dict(c) for c in row] for row in cells])
        except InvalidArguments as exc:
            raise SchemaError(str(exc)) from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ArraySpec":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(doc)


def variance_formula(c: np.ndarray, sigma2: np.ndarray) -> float:
    """``Var(W) = sum(sigma2)/n + sum(c**2)/(n-1)``; valid for centered arrays."""
    n = c.shape[0]
    return float(np.sum(sigma2) / n + np.sum(c * c) / (n - 1))


def is_centered(c: np.ndarray, tol: float = CENTER_TOL) -> bool:
    return bool(np.all(np.abs(c.mean(axis=1)) <= tol) and np.all(np.abs(c.mean(axis=0)) <= tol))


@dataclass(frozen=True)
class MomentSummary:
    n: int
    c: np.ndarray
    sigma2: np.ndarray
    rho3: np.ndarray
    varW: float
    gamma: float

    @property
    def centered(self) -> bool:
        return is_centered(self.c)

    @property
    def second_moment_total(self) -> float:
        """``sum_ij E X_ij^2``."""
        return float(np.sum(self.sigma2 + self.c**2))

    def scaled(self, k: float) -> "MomentSummary":
        """Summary of the array multiplied by ``k > 0``."""
        return MomentSummary(
            self.n, self.c * k, self.sigma2 * k**2, self.rho3 * k**3, self.varW * k**2, self.gamma * k**3
        )


def summarize(a: ArraySpec) -> MomentSummary:
    n = a.n
    moments = np.array([[cell_moments(d) for d in row] for row in a.cells])
    c, sigma2, rho3 = moments[..., 0], moments[..., 1], moments[..., 2]
    return MomentSummary(n, c, sigma2, rho3, variance_formula(c, sigma2), float(rho3.sum() / n))


@dataclass(frozen=True)
class CenteredArray:
    base: ArraySpec

    def __post_init__(self):
        if not is_centered(self.base.mean_matrix()):
            raise InvalidArguments("row/column means of the cell means are not zero")

    @property
    def n(self) -> int:
        return self.base.n


def center(a: ArraySpec) -> CenteredArray:
    """Shift ``Y_ij`` to ``Y_ij - mu_i. - mu_.j + mu_..`` so rows and columns average to zero."""
    mu = a.mean_matrix()
    adj = -mu.mean(axis=1)[:, None] - mu.mean(axis=0)[None, :] + mu.mean()
    # exact zeros keep already-centered input bit-identical
    centered = a.map(lambda i, j, d: d if adj[i, j] == 0.0 else d.shifted(adj[i, j]))
    return CenteredArray(centered)


def standardize(ca: CenteredArray) -> ArraySpec:
    var_w = summarize(ca.base).varW
    if var_w <= DEGENERATE_VAR:
        raise DegenerateVariance(f"Var(W) = {var_w:.3g} is too small to standardize")
    return ca.base.scaled(1.0 / math.sqrt(var_w))


def prepare(a: ArraySpec) -> tuple[ArraySpec, MomentSummary]:
    """Center and standardize ``a``; return the new array and its summary."""
    std = standardize(center(a))
    return std, summarize(std)
