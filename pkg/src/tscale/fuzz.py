"""Seeded batches of generated instances run through a rule checker."""
from __future__ import annotations

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

from .generators import SplitMix64, rule_instance
from .rules import DEFAULT_TOLERANCES, Tolerances, canonical_rule, check

MAX_LISTED_FAILURES = 20


def instance_seeds(seed: int, n: int) -> list[int]:
    """The ``n`` per-instance seeds derived from a batch seed."""
    rng = SplitMix64(seed)
    return [rng.next_u64() >> 1 for _ in range(n)]


def run_instance(rule: str, seed: int, case=None, alpha=None,
                 tolerances: Tolerances = DEFAULT_TOLERANCES) -> dict:
    """Generate and check one instance; returns a JSON-ready summary."""
    inst = rule_instance(rule, seed, case=case, alpha=alpha)
    p = inst.params
    rep = check(rule, inst.pair, anchor=p.get("anchor", "alpha"), case=p.get("case"),
                p_split=p.get("p_split"), alpha=p.get("alpha"), tolerances=tolerances)
    out = {
        "instance_seed": seed,
        "outcome": rep.outcome,
        "statement": getattr(rep.conclusion, "statement", "") if rep.conclusion else "",
        "counterexample": rep.counterexample,
        "failed_checks": [c.name for c in rep.failed_checks()],
        "residuals": {},
    }
    res = rep.residuals or (rep.conclusion.to_dict() if rep.conclusion is not None
                            and getattr(rep.conclusion, "max_residual", None) is not None
                            else None)
    if res:
        out["residuals"]["max_relative_residual"] = res["max_residual"]
        for key, val in res.get("extra", {}).items():
            if isinstance(val, float) and key.endswith("max_relative_residual"):
                out["residuals"][key] = val
    return out


def _job(args):
    return run_instance(*args)


def run_fuzz(rule: str, n: int, seed: int, jobs: int = 1, case: Optional[int] = None,
             alpha=None, tolerances: Tolerances = DEFAULT_TOLERANCES) -> dict:
    """Summary of ``n`` instances; identical for any ``jobs`` (results kept in seed order)."""
    rule = canonical_rule(rule)
    tasks = [(rule, s, case, alpha, tolerances) for s in instance_seeds(seed, n)]
    if jobs > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_job, tasks, chunksize=max(1, n // (4 * jobs))))
    else:
        results = [_job(t) for t in tasks]
    outcomes = Counter(r["outcome"] for r in results)
    statements = Counter(r["statement"] for r in results if r["statement"])
    maxima: dict[str, float] = {}
    for r in results:
        for key, val in r["residuals"].items():
            maxima[key] = max(maxima.get(key, 0.0), val)
    failures = [
        {k: r[k] for k in ("instance_seed", "outcome", "counterexample", "failed_checks")}
        for r in results if r["outcome"] != "VERIFIED"
    ][:MAX_LISTED_FAILURES]
    return {
        "rule": rule,
        "seed": seed,
        "instances": n,
        "outcomes": {k: outcomes[k] for k in sorted(outcomes)},
        "statements": {k: statements[k] for k in sorted(statements)},
        "max_residuals": {k: maxima[k] for k in sorted(maxima)},
        "failures": failures,
    }
