"""Command-line front end: ``shrinking-targets {cf,criterion,measure,simulate,build-theta}``.

Every command reads an INI config (see :mod:`shrinking_targets.config`),
writes its primary outputs under ``--out`` and a ``run.meta.json`` sidecar
holding the volatile facts (timestamps, wall time, versions).  Primary files
depend only on the effective config, so reruns are byte-identical.

Exit codes: 0 success, 1 other failure, 2 config error, 3 resource cap,
4 precision failure, 5 audit failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
import time
from datetime import datetime, timezone
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import __version__, certified
from .certified import CertifiedReal, render_decimal, render_rational
from .cf_core import DEFAULT_CAP_K, ConvergentTable
from .config import ExperimentConfig
from .criterion import (condition_i_check, condition_ii_check, main_series, prop2_series, render_int,
                        shifted_series)
from .errors import (ConfigError, ConstructionError, InternalConsistencyError, LabError, PrecisionError,
                     ResourceCapError, ValidationError)
from .measure_lab import (DEFAULT_CAP_ARCS, audit_k, build_Ek, build_Gk, denjoy_koksma_batch, gk_sum_trend,
                          quasi_independence)
from .simulate import (PRNG_NAME, borel_cantelli_statistic, minkowski_check, run_liminf_experiment,
                       theta_builder_remark_i)

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_CAP, EXIT_PRECISION, EXIT_AUDIT = 0, 1, 2, 3, 4, 5


class AuditFailure(Exception):
    pass


class Run:
    """Output directory bookkeeping for one command."""

    def __init__(self, out: str, cfg: ExperimentConfig, command: str, args: argparse.Namespace):
        self.out = out
        self.cfg = cfg
        self.command = command
        self.args = args
        self.files: List[str] = []
        os.makedirs(out, exist_ok=True)
        self.cap_k = args.cap_k
        self.cap_arcs = args.cap_arcs

    def table(self, theta=None) -> ConvergentTable:
        return ConvergentTable(theta or self.cfg.theta, cap_k=self.cap_k)

    def path(self, name: str) -> str:
        self.files.append(name)
        p = os.path.join(self.out, name)
        os.makedirs(os.path.dirname(p), exist_ok=True)
        return p

    def write_json(self, name: str, obj) -> None:
        with open(self.path(name), "w", encoding="utf-8", newline="\n") as fh:
            json.dump(obj, fh, indent=2, ensure_ascii=False)
            fh.write("\n")

    def write_csv(self, name: str, columns: Sequence[str], rows: Sequence[Dict[str, str]]) -> None:
        with open(self.path(name), "w", encoding="utf-8", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)

    def write_text(self, name: str, text: str) -> None:
        with open(self.path(name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)

    def provenance(self) -> Dict:
        return {
            "command": self.command,
            "theta": self.cfg.theta_text,
            "phi": self.cfg.phi_text,
            "seed": self.cfg.seed,
            "precision_floor_bits": certified.precision_floor(),
            "cap_k": self.cap_k,
            "cap_arcs": self.cap_arcs,
        }


# ---------------------------------------------------------------------------
# Commands


def cmd_cf(run: Run) -> int:
    """Convergent table a_k, p_k, q_k and successive ratios."""
    K = run.cfg.get("cf", "k_max")
    table = run.table()
    table.ensure(K + 1)
    rows = []
    for k in range(K + 1):
        ratio = Fraction(table.q(k + 1), table.q(k))
        rows.append({
            "k": str(k),
            "a_k": str(table.a(k)) if k else "0",
            "p_k": render_int(table.p(k)),
            "q_k": render_int(table.q(k)),
            "ratio_next": CertifiedReal.exact(ratio).render(),
            "ratio_next_exact": render_rational(ratio) if ratio.denominator.bit_length() < 4096 else "",
        })
    run.write_csv("cf.csv", ("k", "a_k", "p_k", "q_k", "ratio_next", "ratio_next_exact"), rows)
    bad = table.check_invariants(K)
    print(f"cf: {K + 1} rows, q_{K} = {render_int(table.q(K))}, invariants {'ok' if not bad else 'FAILED'}")
    if bad:
        for b in bad:
            print(f"  violated: {b}", file=sys.stderr)
        raise AuditFailure("convergent table invariants violated")
    return EXIT_OK


def cmd_criterion(run: Run) -> int:
    """Certified partial sums of the criterion series and conditions (i), (ii)."""
    cfg = run.cfg
    K = cfg.get("criterion", "k_max")
    wanted = cfg.get("criterion", "series")
    table = run.table()
    summary = {"provenance": run.provenance(), "K_max": K}
    for name, fn in (("main", main_series), ("shifted", shifted_series)):
        if name in wanted:
            rep = fn(cfg.theta, cfg.phi, K, table)
            run.write_json(f"{name}_series.json", rep.to_dict())
            run.write_csv(f"{name}_series.csv", rep.columns, rep.rows)
            summary[f"{name}_series"] = rep.classification
            print(f"{name}_series: {rep.classification} (S_K = {rep.partial_sums[-1][1].render()})")
    if "condition_i" in wanted:
        r1 = condition_i_check(cfg.theta, max(K, 2), table)
        run.write_json("condition_i.json", r1.to_dict())
        summary["condition_i"] = r1.trend_label
        print(f"condition_i: fitted C = {r1.fitted_C.render()}, {r1.trend_label}")
    if "condition_ii" in wanted:
        r2 = condition_ii_check(cfg.theta, max(K, 3), cfg.get("criterion", "d"), table)
        run.write_json("condition_ii.json", r2.to_dict())
        summary["condition_ii_fitted_D"] = r2.fitted_D.render()
        print(f"condition_ii: fitted D = {r2.fitted_D.render()}, violations {len(r2.violations)}")
    if "prop2" in wanted:
        r3 = prop2_series(cfg.theta, max(K, 2), table)
        run.write_json("prop2_series.json", r3.to_dict())
        run.write_csv("prop2_series.csv", r3.columns, r3.rows)
        summary["prop2_series"] = r3.classification
        print(f"prop2_series: {r3.classification}")
    run.write_json("summary.json", summary)
    return EXIT_OK


def _random_arcs(seed: int, count: int) -> List[tuple]:
    gen = np.random.Generator(np.random.Philox(seed))
    raw = gen.integers(0, 1 << 64, size=(count, 2), dtype=np.uint64, endpoint=False)
    out = []
    for a, b in raw.tolist():
        l = Fraction(int(a), 1 << 64)
        out.append((l, l + Fraction(int(b), 1 << 64)))
    return out


def cmd_measure(run: Run) -> int:
    """Exact measures of E_k and G_k, inequality audit, quasi-independence, Denjoy-Koksma counts."""
    cfg = run.cfg
    k_min, k_max = cfg.get("measure", "k_min"), cfg.get("measure", "k_max")
    table = run.table()
    cache = {}
    audits, failures = [], []
    for k in range(k_min, k_max + 1):
        G = cache[k] = build_Gk(cfg.theta, cfg.phi, k, table, run.cap_arcs)
        rows = audit_k(cfg.theta, cfg.phi, k, table, run.cap_arcs, G=G)
        audits.extend(r.to_dict() for r in rows)
        failures.extend(f"{r.inequality_id}@k={k}" for r in rows if not r.holds)
        if cfg.get("measure", "export_sets"):
            with open(run.path(f"sets/G_{k}.csv"), "w", encoding="utf-8", newline="") as fh:
                G.union.write_csv(fh)
            with open(run.path(f"sets/E_{k}.csv"), "w", encoding="utf-8", newline="") as fh:
                build_Ek(cfg.theta, cfg.phi, k, table, run.cap_arcs).write_csv(fh)
    pairs = cfg.get("measure", "pairs") or tuple(
        (l, k) for k in range(k_min, k_max + 1) for l in range(k_min, k))
    quasi = quasi_independence(cfg.theta, cfg.phi, pairs, table, run.cap_arcs, cache)
    failures.extend(f"quasi@({q.ell},{q.k})" for q in quasi if not q.holds)
    koksma = []
    arcs = _random_arcs(cfg.seed, cfg.get("measure", "koksma_arcs"))
    for k in cfg.get("measure", "koksma_k"):
        for (l, r), res in zip(arcs, denjoy_koksma_batch(cfg.theta, arcs, k, table=table)):
            koksma.append({"k": k, "arc": [render_rational(l), render_rational(r)], "count": res.count,
                           "bound_low": render_decimal(res.bound_low), "bound_high": render_decimal(res.bound_high),
                           "holds": res.holds})
            if not res.holds:
                failures.append(f"koksma@k={k}")
    trend = gk_sum_trend(cfg.theta, cfg.phi, k_max, table, run.cap_arcs) if k_min == 1 else None
    run.write_json("audit.json", {
        "provenance": run.provenance(),
        "structures": [cache[k].to_dict() for k in range(k_min, k_max + 1)],
        "inequalities": audits,
        "quasi_independence": [q.to_dict() for q in quasi],
        "denjoy_koksma": koksma,
        "gk_sum_trend": trend.to_dict() if trend else None,
        "failures": failures,
    })
    print(f"measure: {len(audits)} inequality rows, {len(quasi)} pairs, {len(koksma)} arc counts, "
          f"{len(failures)} failures")
    if failures:
        raise AuditFailure("audit failures: " + ", ".join(failures[:20]))
    return EXIT_OK


def cmd_simulate(run: Run) -> int:
    """Seeded orbit experiments: liminf, minkowski or borel_cantelli mode."""
    cfg = run.cfg
    mode = cfg.get("simulate", "mode")
    M = cfg.get("simulate", "m")
    table = run.table()
    if mode == "liminf":
        res = run_liminf_experiment(cfg.theta, cfg.phi, M, cfg.get("simulate", "checkpoints"), cfg.seed, table=table)
        run.write_json("simulation.json", res.to_dict())
        run.write_csv("quantiles.csv", ("N", "min", "q25", "median", "q75", "max"), res.quantile_rows())
        med = ", ".join(f"{v:.6g}" for v in res.median_series())
        print(f"simulate: M={res.M}, median R_N at checkpoints: {med}")
    elif mode == "minkowski":
        res = minkowski_check(cfg.theta, M, cfg.get("simulate", "n_max"), cfg.seed, table=table)
        run.write_json("minkowski.json", res.to_dict())
        zero = sum(1 for c in res.counts if c[-1] == 0)
        print(f"minkowski: M={M}, samples with no hit by N={res.checkpoints[-1]}: {zero}")
    else:
        ks = cfg.get("simulate", "k_range")
        k_range = range(ks[0], ks[-1] + 1)
        res = borel_cantelli_statistic(cfg.theta, cfg.phi, k_range, M, cfg.seed, cap_arcs=run.cap_arcs)
        run.write_json("borel_cantelli.json", res.to_dict())
        print(f"borel_cantelli: M={M}, fraction of k within Wilson 95%: {res.fraction_within:.3f}")
    return EXIT_OK


def cmd_build_theta(run: Run) -> int:
    """Greedy partial quotients with phi(q_k) > k^2."""
    K = run.cfg.get("build-theta", "k_max")
    spec = theta_builder_remark_i(run.cfg.phi, K)
    run.write_text("theta.txt", spec.to_config() + "\n")
    table = run.table(spec)
    run.write_json("build_theta.json", {
        "provenance": run.provenance(),
        "K": K,
        "theta": spec.to_config(),
        "q_k_bits": [table.q(k).bit_length() for k in range(1, K + 1)],
        "verified": True,
    })
    print(f"build-theta: K={K}, a_1..a_{min(K, 6)} = {list(spec.prefix[:6])}, q_K has {table.q(K).bit_length()} bits")
    return EXIT_OK


COMMANDS: Dict[str, Callable[[Run], int]] = {
    "cf": cmd_cf,
    "criterion": cmd_criterion,
    "measure": cmd_measure,
    "simulate": cmd_simulate,
    "build-theta": cmd_build_theta,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shrinking-targets", description="Inhomogeneous shrinking-target experiments.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__.strip().splitlines()[0], description=fn.__doc__.strip())
        p.add_argument("--config", required=True, metavar="PATH", help="experiment INI file")
        p.add_argument("--out", default="out", metavar="DIR", help="output directory (default: out)")
        p.add_argument("--seed", type=int, default=None, metavar="U64", help="override [experiment] seed")
        p.add_argument("--precision-bits", type=int, default=None, metavar="N",
                       help="working precision floor for interval evaluation")
        p.add_argument("--cap-k", type=int, default=DEFAULT_CAP_K, metavar="N", help="max continued-fraction depth")
        p.add_argument("--cap-arcs", type=int, default=DEFAULT_CAP_ARCS, metavar="N", help="max balls per set")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    code = EXIT_OTHER
    error = None
    run = None
    saved_floor = certified.precision_floor()
    try:
        if args.precision_bits is not None:
            try:
                certified.set_precision_floor(args.precision_bits)
            except ValidationError as exc:
                raise ConfigError(f"--precision-bits: {exc}") from None
        cfg = ExperimentConfig.load(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 1 << 64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg.seed = args.seed
        run = Run(args.out, cfg, args.command, args)
        run.write_text("config.ini", cfg.to_text())
        code = COMMANDS[args.command](run)
    except ConfigError as exc:
        code, error = EXIT_CONFIG, f"config error: {exc}"
    except ValidationError as exc:
        code, error = EXIT_CONFIG, f"invalid input: {exc}"
    except ResourceCapError as exc:
        code, error = EXIT_CAP, f"resource cap exceeded: {exc}"
    except PrecisionError as exc:
        code, error = EXIT_PRECISION, f"precision failure: {exc}"
    except (AuditFailure, InternalConsistencyError) as exc:
        code, error = EXIT_AUDIT, f"audit failure: {exc}"
    except ConstructionError as exc:
        code, error = EXIT_OTHER, f"construction failed: {exc}"
    except LabError as exc:
        code, error = EXIT_OTHER, str(exc)
    finally:
        certified.set_precision_floor(saved_floor)
    if error:
        print(error, file=sys.stderr)
    if run is not None:
        meta = {
            "command": args.command,
            "argv": list(sys.argv[1:] if argv is None else argv),
            "finished_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "elapsed_s": round(time.perf_counter() - started, 3),
            "exit_code": code,
            "error": error,
            "files": run.files,
            "prng": PRNG_NAME,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "package": __version__,
        }
        with open(os.path.join(run.out, "run.meta.json"), "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2)
            fh.write("\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
