"""Monte-Carlo sweeps: sample, estimate the joint, recover, score.

Each (n, rep) cell is an isolated computation keyed by a derived seed, so
results do not depend on how cells are scheduled across workers.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ProbeExhausted, RankCollapse
from .metrics import component_error, l2_error, pi_error, slope_fit
from .model import MixtureSpec, empirical_tensor, joint_tensor, sample, sim1_spec, sim2_spec
from .recovery import recover_all

CSV_HEADER = ["n", "rep", "status", "joint_l2", "comp_err", "pi_err", "redraws", "seed"]
DESK_GRID = (14, 20)
FULL_GRID = (17, 24)


@dataclass
class SweepConfig:
    model: str
    m: int = 3
    d: int = 5
    n_exponents: tuple = DESK_GRID
    reps: int = 10
    seed: int = 0
    out: Optional[str] = None
    scaled: bool = True

    def __post_init__(self):
        lo, hi = self.n_exponents
        if lo > hi or lo < 0:
            raise ValueError(f"empty exponent range {lo}:{hi}")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")

    @property
    def sizes(self) -> list:
        lo, hi = self.n_exponents
        return [2**e for e in range(lo, hi + 1)]


def build_spec(model: str, m: int, d: int) -> MixtureSpec:
    """Resolve ``ci``, ``bmm`` or a model JSON path to a spec with the given m and d."""
    if model == "ci":
        if m != 3:
            raise ValueError("the conditional i.i.d. benchmark is defined for m = 3")
        return sim1_spec(d)
    if model == "bmm":
        return sim2_spec(m, d)
    from .io import load_model

    spec = load_model(model)
    if (spec.m, spec.d) != (m, d):
        raise ValueError(f"model file has m={spec.m}, d={spec.d}; requested m={m}, d={d}")
    return spec


def derive_seed(base: int, n: int, rep: int) -> int:
    digest = hashlib.blake2b(f"{n}:{rep}".encode(), digest_size=8).digest()
    return (int(base) ^ int.from_bytes(digest, "little")) & (2**63 - 1)


def run_rep(spec: MixtureSpec, exact: np.ndarray, n: int, rep: int, base_seed: int) -> dict:
    seed = derive_seed(base_seed, n, rep)
    row = {"n": n, "rep": rep, "status": "ok", "joint_l2": math.nan, "comp_err": math.nan,
           "pi_err": math.nan, "redraws": 0, "seed": seed}
    emp = empirical_tensor(sample(spec, n, seed))
    row["joint_l2"] = l2_error(emp, exact)
    try:
        res = recover_all(emp, spec.m, seed=seed, truth=spec)
    except RankCollapse:
        row["status"] = "rank_collapse"
        return row
    except ProbeExhausted:
        row["status"] = "probe_exhausted"
        return row
    row["comp_err"] = component_error(res, spec, 0)
    row["pi_err"] = pi_error(res, spec)
    row["redraws"] = res.diagnostics.redraws
    return row


def _star(args):
    return run_rep(*args)


def worker_count() -> int:
    env = os.environ.get("MIXREC_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(4, os.cpu_count() or 1))


def run_sweep(config: SweepConfig, spec: Optional[MixtureSpec] = None, workers: Optional[int] = None) -> list:
    spec = build_spec(config.model, config.m, config.d) if spec is None else spec
    exact = joint_tensor(spec).values
    tasks = [(spec, exact, n, r, config.seed) for n in config.sizes for r in range(config.reps)]
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_star, tasks))
    else:
        rows = [run_rep(*t) for t in tasks]
    return sorted(rows, key=lambda r: (r["n"], r["rep"]))


def _fmt(x) -> str:
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def rows_to_csv(rows: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([_fmt(r[k]) for k in CSV_HEADER])
    return buf.getvalue()


def monotone_nonincreasing(values, max_inversions: int = 1, rel_tol: float = 0.05) -> bool:
    """True if consecutive values never rise, except up to ``max_inversions`` rises of at most ``rel_tol``."""
    inversions = 0
    for prev, cur in zip(values, values[1:]):
        if cur > prev:
            if cur > prev * (1 + rel_tol):
                return False
            inversions += 1
    return inversions <= max_inversions


def summarize(rows: list) -> dict:
    by_n = {}
    for r in rows:
        by_n.setdefault(r["n"], []).append(r)
    per_n = []
    for n in sorted(by_n):
        ok = [r for r in by_n[n] if r["status"] == "ok"]
        entry = {"n": n, "log2_n": int(round(math.log2(n))), "reps": len(by_n[n]), "ok": len(ok)}
        for key in ("comp_err", "joint_l2", "pi_err"):
            vals = np.array([r[key] for r in ok], dtype=float)
            entry[f"{key}_mean"] = float(vals.mean()) if vals.size else None
            entry[f"{key}_var"] = float(vals.var(ddof=1)) if vals.size > 1 else None
        per_n.append(entry)
    out = {"per_n": per_n}
    for key in ("comp_err", "joint_l2"):
        pts = [(e["log2_n"], math.log2(e[f"{key}_mean"])) for e in per_n
               if e[f"{key}_mean"] is not None and e[f"{key}_mean"] > 0]
        fit = slope_fit(pts) if len(pts) >= 3 else None
        out[f"{key}_slope"] = None if fit is None else {"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2}
    means = [e["comp_err_mean"] for e in per_n if e["comp_err_mean"] is not None]
    out["comp_err_monotone"] = monotone_nonincreasing(means)
    out["statuses"] = {s: sum(1 for r in rows if r["status"] == s) for s in sorted({r["status"] for r in rows})}
    return out


def summary_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.stem + ".summary.json")


def write_outputs(rows: list, config: SweepConfig) -> dict:
    summary = summarize(rows)
    summary["config"] = {
        "model": config.model, "m": config.m, "d": config.d,
        "n_exponents": list(config.n_exponents), "reps": config.reps, "seed": config.seed,
    }
    if config.out:
        Path(config.out).write_text(rows_to_csv(rows))
        summary_path(config.out).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary
