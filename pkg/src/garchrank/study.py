"""Monte Carlo harness reproducing the simulation design at desk scale.

A study sweeps a grid of (phi, n, score) cells for one data-generating
process: group 1 draws standard normal innovations, group 2 a normal
mixture, group 3 a Student t (phi = 0 collapses all three to the standard
normal, i.e. the null).  The mixture follows the simulation design's
scale-only standardization (unit second moment, mean retained): that
location component is what the reported power levels against phi > 0 come
from.  Every trial owns a pre-split random stream keyed by (seed, cell,
trial, group), so reports are identical regardless of the worker count.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import FitError, StudyError
from .garch import (GarchSpec, InnovationDist, MixtureNormal, StandardNormal,
                    StudentT, simulate)
from .ksample import asymptotic_test, bootstrap_test
from .ranks import score_by_name
from .rng import stream

SCHEMA = "garchrank.study/1"

DGP_SPECS = {
    "dgp1": GarchSpec(0.1, (0.1,), (0.1,)),
    "dgp2": GarchSpec(0.5, (0.4,), (0.4,)),
}

WORKERS_ENV = "GARCHRANK_WORKERS"


def study_innovation(name: str, phi: float) -> InnovationDist:
    """Innovation family for the study design; the mixture keeps its mean
    (scale-only standardization to E(eps^2) = 1)."""
    name = name.lower()
    if name in ("normal", "gaussian"):
        return StandardNormal()
    if name == "mixture":
        return StandardNormal() if phi == 0.0 else MixtureNormal(phi, center=False)
    if name in ("student_t", "student", "t"):
        return StandardNormal() if phi == 0.0 else StudentT(phi)
    raise ValueError(f"unknown study innovation family {name!r}")


@dataclass(frozen=True)
class StudyConfig:
    """One data-generating process swept over (phi, n, score) cells."""

    dgp: str = "dgp1"
    specs: tuple[GarchSpec, ...] | None = None
    dists: tuple[str, ...] = ("normal", "mixture", "student_t")
    phis: tuple[float, ...] = (0.0, 1 / 9, 1 / 5, 1 / 3)
    ns: tuple[tuple[int, ...], ...] = ((100, 100, 100),)
    scores: tuple[str, ...] = ("wilcoxon", "vdw")
    trials: int = 500
    mode: str = "asymptotic"
    B: int = 199
    level: float = 0.05
    n0: int = 500
    orders: tuple[int, int] = (1, 1)
    starts: int = 3
    workers: int = 1
    persist_trials: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie in (0, 1)")
        if self.mode not in ("asymptotic", "bootstrap", "both"):
            raise ValueError("mode must be asymptotic, bootstrap or both")
        if self.dgp not in ("dgp1", "dgp2", "custom"):
            raise ValueError("dgp must be dgp1, dgp2 or custom")
        if self.dgp == "custom" and self.specs is None:
            raise ValueError("custom dgp requires explicit specs")
        for phi in self.phis:
            if not 0.0 <= phi < 0.5:
                raise ValueError("phi must lie in [0, 1/2) for Student-t validity")
        for ns in self.ns:
            if len(ns) != len(self.dists):
                raise ValueError("each cell needs one length per group")

    def group_specs(self) -> tuple[GarchSpec, ...]:
        if self.dgp == "custom":
            return tuple(self.specs)
        return tuple([DGP_SPECS[self.dgp]] * len(self.dists))


@dataclass
class CellResult:
    dgp: str
    phi: float
    n: tuple[int, ...]
    score: str
    trials: int
    failures: int
    rate_asymptotic: float | None = None
    rate_bootstrap: float | None = None
    rejections_asymptotic: int | None = None
    rejections_bootstrap: int | None = None
    per_trial: list | None = None

    def mc_se(self, rate: float | None) -> float | None:
        if rate is None:
            return None
        eff = self.trials - self.failures
        return float(np.sqrt(rate * (1.0 - rate) / eff)) if eff else None


@dataclass
class StudyReport:
    schema: str
    seed: int
    config: dict
    cells: list[CellResult]
    runtime_seconds: float = field(default=0.0, compare=False)

    def to_dict(self, include_runtime: bool = False) -> dict:
        doc = {
            "schema": self.schema,
            "seed": self.seed,
            "config": self.config,
            "cells": [],
        }
        for c in self.cells:
            entry = {
                "dgp": c.dgp, "phi": c.phi, "n": list(c.n), "score": c.score,
                "trials": c.trials, "failures": c.failures,
                "rate_asymptotic": c.rate_asymptotic,
                "se_asymptotic": c.mc_se(c.rate_asymptotic),
                "rate_bootstrap": c.rate_bootstrap,
                "se_bootstrap": c.mc_se(c.rate_bootstrap),
                "rejections_asymptotic": c.rejections_asymptotic,
                "rejections_bootstrap": c.rejections_bootstrap,
            }
            if c.per_trial is not None:
                entry["per_trial"] = c.per_trial
            doc["cells"].append(entry)
        if include_runtime:
            doc["runtime_seconds"] = self.runtime_seconds
        return doc

    def to_json(self, include_runtime: bool = False) -> str:
        # runtime is excluded by default so identical (config, seed) runs
        # produce identical bytes
        return json.dumps(self.to_dict(include_runtime), indent=2, sort_keys=True)

    def text_table(self) -> str:
        """Rendering in the simulation table's layout: rows phi, columns
        (n x score), one section per mode."""
        lines = []
        ns = sorted({c.n for c in self.cells})
        scores = list(dict.fromkeys(c.score for c in self.cells))
        phis = sorted({c.phi for c in self.cells})
        by_key = {(c.phi, c.n, c.score): c for c in self.cells}
        modes = []
        if any(c.rate_asymptotic is not None for c in self.cells):
            modes.append(("asymptotic", lambda c: c.rate_asymptotic))
        if any(c.rate_bootstrap is not None for c in self.cells):
            modes.append(("bootstrap", lambda c: c.rate_bootstrap))
        dgp = self.cells[0].dgp if self.cells else "?"
        for mode_name, getter in modes:
            lines.append(f"Proportion of rejections of H0 - {dgp.upper()}, "
                         f"{mode_name} test, r={self.config.get('level')}")
            header = ["phi".ljust(8)]
            for n in ns:
                label = "n=" + "/".join(str(v) for v in n) if len(set(n)) > 1 \
                    else f"n={n[0]}"
                for s in scores:
                    header.append(f"{label} {s}".rjust(16))
            lines.append("".join(header))
            for phi in phis:
                row = [f"{phi:.4f}".ljust(8)]
                for n in ns:
                    for s in scores:
                        c = by_key.get((phi, n, s))
                        rate = getter(c) if c else None
                        row.append(("-" if rate is None else f"{rate:.3f}").rjust(16))
                lines.append("".join(row))
            lines.append("")
        return "\n".join(lines)

    def cells_csv(self) -> str:
        """Delimited per-cell summary (one row per cell and mode column)."""
        rows = ["dgp,phi,n,score,trials,failures,rate_asymptotic,"
                "se_asymptotic,rate_bootstrap,se_bootstrap"]
        for c in self.cells:
            n_label = "/".join(str(v) for v in c.n)
            fields = [c.dgp, f"{c.phi:.17g}", n_label, c.score, str(c.trials),
                      str(c.failures)]
            for rate in (c.rate_asymptotic, c.rate_bootstrap):
                se = c.mc_se(rate)
                fields.append("" if rate is None else f"{rate:.17g}")
                fields.append("" if se is None else f"{se:.17g}")
            rows.append(",".join(fields))
        return "\n".join(rows) + "\n"


def _trial(task: tuple) -> dict:
    (thetas, orders_pq, dist_names, phi, n_list, score_name, level, mode,
     B, n0, starts, seed, cell_idx, trial_idx) = task
    specs = [GarchSpec.from_theta(np.asarray(t), p, q)
             for t, (p, q) in zip(thetas, orders_pq)]
    score = score_by_name(score_name)
    try:
        xs = []
        for j, (spec, dn, n) in enumerate(zip(specs, dist_names, n_list)):
            dist = study_innovation(dn, phi)
            rng = stream(seed, cell_idx, trial_idx, j)
            xs.append(simulate(spec, dist, n, n0, rng).values)
        out = {"failed": None}
        if mode in ("asymptotic", "both"):
            res = asymptotic_test(xs, orders_pq, score, level, starts=starts)
            out["reject_asym"] = bool(res.reject)
            out["L"] = res.L_N
            out["p"] = res.p_asymptotic
        if mode in ("bootstrap", "both"):
            boot = bootstrap_test(xs, orders_pq, score, level, B=B, n0=n0,
                                  seed=int(np.random.SeedSequence(
                                      seed, spawn_key=(cell_idx, trial_idx, 97)
                                  ).generate_state(1)[0]),
                                  starts=starts)
            out["reject_boot"] = bool(boot.reject)
            out["p_boot"] = boot.p_bootstrap
            if mode == "bootstrap":
                out["L"] = boot.observed.L_N
                out["p"] = boot.observed.p_asymptotic
        return out
    except (FitError, ValueError, RuntimeError) as exc:
        return {"failed": f"{type(exc).__name__}: {exc}"}


def run_study(config: StudyConfig, seed: int) -> StudyReport:
    """Run the configured size/power study; deterministic given (config, seed)
    regardless of the worker count."""
    t0 = time.time()
    specs = config.group_specs()
    orders_pq = [config.orders] * len(config.dists)
    thetas = [tuple(s.theta) for s in specs]

    cells = []
    tasks = []
    cell_meta = []
    idx = 0
    for phi in config.phis:
        for n in config.ns:
            for score_name in config.scores:
                cell_meta.append((phi, tuple(n), score_name))
                for trial in range(config.trials):
                    tasks.append((thetas, orders_pq, config.dists, phi, n,
                                  score_name, config.level, config.mode,
                                  config.B, config.n0, config.starts,
                                  seed, idx, trial))
                idx += 1

    workers = int(os.environ.get(WORKERS_ENV, config.workers))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial, tasks, chunksize=8))
    else:
        results = [_trial(t) for t in tasks]

    total_failures = 0
    for c_idx, (phi, n, score_name) in enumerate(cell_meta):
        chunk = results[c_idx * config.trials:(c_idx + 1) * config.trials]
        failures = sum(1 for r in chunk if r["failed"])
        total_failures += failures
        ok = [r for r in chunk if not r["failed"]]
        cell = CellResult(dgp=config.dgp, phi=phi, n=n, score=score_name,
                          trials=config.trials, failures=failures)
        if ok and "reject_asym" in ok[0]:
            cell.rejections_asymptotic = sum(r["reject_asym"] for r in ok)
            cell.rate_asymptotic = cell.rejections_asymptotic / len(ok)
        if ok and "reject_boot" in ok[0]:
            cell.rejections_bootstrap = sum(r["reject_boot"] for r in ok)
            cell.rate_bootstrap = cell.rejections_bootstrap / len(ok)
        if config.persist_trials:
            cell.per_trial = [
                {"failed": r["failed"], "L": r.get("L"), "p": r.get("p"),
                 "p_boot": r.get("p_boot")} for r in chunk]
        cells.append(cell)

    if total_failures > 0.2 * len(tasks):
        raise StudyError(
            f"{total_failures} of {len(tasks)} trials failed to fit (>20%); "
            "study aborted — check model orders and sample sizes")

    cfg_echo = asdict(config)
    cfg_echo["specs"] = None if config.specs is None else [
        list(s.theta) for s in config.specs]
    return StudyReport(schema=SCHEMA, seed=seed, config=cfg_echo, cells=cells,
                       runtime_seconds=time.time() - t0)


def parse_study_config(path: str) -> StudyConfig:
    """Flat key=value study configuration file.

    Keys: dgp, phi, n, score, trials, mode, bootstrap, level, warmup,
    orders, starts, workers, persist_trials, dist, specN (custom dgp,
    pipe-separated "omega|a1,a2|b1").  '#' starts a comment.
    """
    raw: dict[str, str] = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected key = value")
            key, value = line.split("=", 1)
            raw[key.strip().lower()] = value.strip()

    def floats(s):
        return tuple(float(v) for v in s.split(",") if v.strip())

    def strs(s):
        return tuple(v.strip() for v in s.split(",") if v.strip())

    kwargs: dict = {}
    if "dgp" in raw:
        kwargs["dgp"] = raw["dgp"].lower()
    if "dist" in raw:
        kwargs["dists"] = strs(raw["dist"])
    n_groups = len(kwargs.get("dists", ("normal", "mixture", "student_t")))
    if "phi" in raw:
        kwargs["phis"] = tuple(_parse_phi(v) for v in raw["phi"].split(","))
    if "n" in raw:
        ns = []
        for tok in raw["n"].split(","):
            parts = [int(v) for v in tok.split(":") if v.strip()]
            ns.append(tuple(parts) * n_groups if len(parts) == 1 else tuple(parts))
        kwargs["ns"] = tuple(ns)
    if "score" in raw:
        kwargs["scores"] = strs(raw["score"])
    for key, cast in (("trials", int), ("bootstrap", int), ("level", float),
                      ("warmup", int), ("starts", int), ("workers", int)):
        if key in raw:
            target = {"bootstrap": "B", "warmup": "n0"}.get(key, key)
            kwargs[target] = cast(raw[key])
    if "mode" in raw:
        kwargs["mode"] = raw["mode"].lower()
    if "orders" in raw:
        p, q = (int(v) for v in raw["orders"].split(","))
        kwargs["orders"] = (p, q)
    if "persist_trials" in raw:
        kwargs["persist_trials"] = raw["persist_trials"].lower() in ("1", "true", "yes")
    spec_keys = sorted(k for k in raw if k.startswith("spec"))
    if spec_keys:
        specs = []
        for k in spec_keys:
            parts = raw[k].split("|")
            omega = float(parts[0])
            alpha = floats(parts[1]) if len(parts) > 1 and parts[1].strip() else ()
            beta = floats(parts[2]) if len(parts) > 2 and parts[2].strip() else ()
            specs.append(GarchSpec(omega, alpha, beta))
        kwargs["specs"] = tuple(specs)
        kwargs.setdefault("dgp", "custom")
    return StudyConfig(**kwargs)


def _parse_phi(token: str) -> float:
    token = token.strip()
    if "/" in token:
        num, den = token.split("/")
        return float(num) / float(den)
    return float(token)
