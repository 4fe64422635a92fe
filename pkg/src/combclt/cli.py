"""``combclt`` command line: bound, mc, verify, constants, srs.

Reports are JSON (sorted keys, two-space indent) written to ``--output`` or
stdout.  Exit codes: 0 ok, 1 schema error, 2 precondition violation,
3 internal check failure.
"""
from __future__ import annotations

import argparse
import itertools
import json
import logging
import math
import sys
from dataclasses import dataclass

import numpy as np

from .arraymodel import ArraySpec, center, prepare, summarize
from .bounds import (
    C0,
    SrsSpec,
    concentration_constants,
    final_coefficient,
    row_copy_array,
    srs_bound,
    srs_bound_via_array,
    theorem_bound,
)
from .exactoracle import (
    CONCENTRATION_MAX_N,
    LINEARITY_MAX_N,
    MAX_N,
    coupling_law_exact,
    exact_concentration_check,
    exact_ks,
    exact_s_statistics,
    exact_srs_distribution,
    exact_w_distribution,
    verify_linearity,
)
from .exceptions import (
    CombCLTError,
    InternalCheckFailure,
    InvalidArguments,
    SchemaError,
    SizeLimitExceeded,
    ThetaNonpositive,
)
from .permsim import mc_ks_distance

log = logging.getLogger("combclt")

COMMANDS = ("bound", "mc", "verify", "constants", "srs")
EXIT_OK, EXIT_SCHEMA, EXIT_PRECONDITION, EXIT_CHECK = 0, 1, 2, 3
SRS_REL_TOL = 1e-9


@dataclass
class RunConfig:
    command: str
    input_path: str | None = None
    output_path: str | None = None
    seed: int = 0
    replicates: int = 10_000
    alpha: float = 0.05
    n: int | None = None
    m: int = 2
    c0: float = C0
    dump_samples: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InvalidArguments(f"unknown command {self.command!r}")
        if self.replicates < 1:
            raise InvalidArguments("--replicates must be >= 1")
        if not 0 < self.alpha < 1:
            raise InvalidArguments("--alpha must lie in (0, 1)")


def _read_json(path: str | None):
    if path is None:
        raise SchemaError("--input is required for this command")
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from exc


def _clean(obj):
    # JSON has no NaN/inf; numpy scalars are not serializable
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _bound(cfg: RunConfig) -> tuple[int, dict]:
    a = ArraySpec.from_dict(_read_json(cfg.input_path))
    _, ms = prepare(a)
    return EXIT_OK, theorem_bound(ms, cfg.c0).to_dict()


def _mc(cfg: RunConfig) -> tuple[int, dict]:
    a = ArraySpec.from_dict(_read_json(cfg.input_path))
    std, ms = prepare(a)
    report = theorem_bound(ms, cfg.c0)
    est = mc_ks_distance(std, cfg.replicates, cfg.seed, cfg.alpha)
    if cfg.dump_samples:
        est.sample.to_csv(cfg.dump_samples)
    return EXIT_OK, {
        "n": a.n,
        "gamma": report.gamma,
        "bound": report.bound,
        "ks": est.ks,
        "dkw_eps": est.dkw_eps,
        "alpha": cfg.alpha,
        "replicates": cfg.replicates,
        "seed": cfg.seed,
        "within_certificate": est.ks - est.dkw_eps <= report.bound,
    }


def _verify_checks(c: np.ndarray, gamma: float, var_w: float, c0: float) -> list[dict]:
    n = c.shape[0]
    checks = []

    def record(name, passed, **detail):
        checks.append({"name": name, "passed": bool(passed), **detail})

    dist = exact_w_distribution(c)
    record("mean_zero", abs(dist.mean) <= 1e-12, mean=dist.mean)
    record("variance_formula", abs(dist.variance - var_w) <= 1e-10, exact=dist.variance, formula=var_w)
    ks = exact_ks(dist)
    record("ks_within_bound", ks <= c0 * gamma, ks=ks, bound=c0 * gamma)
    if n <= LINEARITY_MAX_N:
        resid = verify_linearity(c)
        record("linearity", resid <= 1e-10, residual=resid)
    for m in (2, 3, 4):
        if n >= m + 2:
            try:
                st = exact_s_statistics(c, m)
                record(f"es2_expansion_m{m}", True, enumerated=st.es2, formula=st.es2_formula)
            except InternalCheckFailure as exc:
                record(f"es2_expansion_m{m}", False, error=str(exc))
    if 4 <= n <= CONCENTRATION_MAX_N:
        for a, b in ((-0.5, 0.5), (-1.0, 0.0), (0.0, 2.0)):
            try:
                res = exact_concentration_check(c, 2, a, b, c0)
                record(f"concentration[{a},{b}]", True, lhs=res.lhs, rhs=res.rhs_lemma, applicable=res.applicable)
            except InternalCheckFailure as exc:
                record(f"concentration[{a},{b}]", False, error=str(exc))
    if n <= 5:
        ok = all(
            coupling_law_exact(n, i, j, k, l)
            for i, j in itertools.permutations(range(n), 2)
            for k, l in itertools.permutations(range(n), 2)
        )
        record("coupling_law", ok)
    return checks


def _verify(cfg: RunConfig) -> tuple[int, dict]:
    a = ArraySpec.from_dict(_read_json(cfg.input_path))
    if a.n > MAX_N:
        raise SizeLimitExceeded(f"n = {a.n} exceeds the enumeration cap {MAX_N}")
    if not a.is_deterministic:
        raise InvalidArguments("verify needs a deterministic array (all cells point masses)")
    _, ms = prepare(a)
    checks = _verify_checks(ms.c, ms.gamma, ms.varW, cfg.c0)
    passed = all(ch["passed"] for ch in checks)
    return (EXIT_OK if passed else EXIT_CHECK), {"n": a.n, "checks": checks, "all_passed": passed}


def _constants(cfg: RunConfig) -> tuple[int, dict]:
    if cfg.n is None:
        raise InvalidArguments("constants needs --n")
    k = concentration_constants(cfg.n, cfg.m, cfg.c0)
    report = k.to_dict()
    try:
        coef = final_coefficient(cfg.n, cfg.c0, cfg.m)
    except ThetaNonpositive as exc:
        log.warning("%s", exc)
        coef = None
    report["final_coefficient"] = coef
    report["certificate_ok"] = coef is not None and coef < cfg.c0
    return EXIT_OK, report


def _srs(cfg: RunConfig) -> tuple[int, dict]:
    s = SrsSpec.from_dict(_read_json(cfg.input_path))
    direct = srs_bound(s, cfg.c0)
    via_array = srs_bound_via_array(s, cfg.c0)
    rel = abs(direct - via_array) / max(abs(direct), 1e-300)
    report = {
        "n": s.n,
        "k": s.k,
        "sigma2": s.sigma2,
        "srs_bound": direct,
        "row_copy_bound": via_array,
        "relative_difference": rel,
        "consistent": rel <= SRS_REL_TOL,
    }
    ok = report["consistent"]
    if all(d.is_deterministic for d in s.y) and s.n <= MAX_N:
        law_v = exact_srs_distribution(s.mu, s.k)
        law_w = exact_w_distribution(row_copy_array(s).mean_matrix())
        match = len(law_v) == len(law_w) and np.allclose(law_v.values, law_w.values, atol=1e-12) and np.allclose(
            law_v.probs, law_w.probs, atol=1e-12
        )
        report["exact_law_match"] = bool(match)
        ok = ok and match
    return (EXIT_OK if ok else EXIT_CHECK), report


_HANDLERS = {"bound": _bound, "mc": _mc, "verify": _verify, "constants": _constants, "srs": _srs}


def run(cfg: RunConfig) -> tuple[int, dict | None]:
    """Execute one command; returns the exit status and the report (None on error)."""
    try:
        status, report = _HANDLERS[cfg.command](cfg)
    except SchemaError as exc:
        log.error("schema error: %s", exc)
        return EXIT_SCHEMA, None
    except InternalCheckFailure as exc:
        log.error("internal check failed: %s", exc)
        return EXIT_CHECK, None
    except CombCLTError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_PRECONDITION, None
    report = _clean(report)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if cfg.output_path:
        with open(cfg.output_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status, report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="combclt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "bound": "center/standardize an ArraySpec and report c0*gamma",
        "mc": "Monte Carlo Kolmogorov distance with a DKW band",
        "verify": "exact enumeration checks for a small deterministic array",
        "constants": "concentration constants and the final coefficient",
        "srs": "sampling-without-replacement bound and its row-copy cross-check",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--input", dest="input_path")
        p.add_argument("--output", dest="output_path")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--replicates", type=int, default=10_000)
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--n", type=int)
        p.add_argument("--m", type=int, default=2)
        p.add_argument("--c0", type=float, default=float(C0))
        p.add_argument("--dump-samples", dest="dump_samples")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="combclt: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(**vars(args))
    except InvalidArguments as exc:
        log.error("%s", exc)
        return EXIT_PRECONDITION
    status, _ = run(cfg)
    return status
