"""Command-line front end: configuration, suite orchestration, and reports.

Commands:

- ``qlab verify``   run identity-verification suites, exit 0 iff all pass
- ``qlab spectrum`` per-sector eigenvalue/root/energy table (JSON or CSV)
- ``qlab bethe``    per-state root systems, equation residuals, refinement
- ``qlab hasse``    subset-lattice dump (nodes, edges, quadrilaterals, chains)
- ``qlab report``   verify + spectrum + hasse in one JSON document

Configuration may come from a JSON file with flat keys mirroring the flags
(``--config file.json``); explicit flags override file values.  Exit codes:
0 all-pass, 1 identity/tolerance failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import cmath
import csv
import io
import itertools
import json
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

DEFAULT_PHIS: Dict[int, Tuple[float, ...]] = {
    2: (0.7, -0.7),
    3: (0.7, -0.4, -0.3),
    4: (0.9, 0.4, -0.5, -0.8),
}

DEFAULT_TOLS: Dict[str, float] = {
    "anchors": 1e-13,
    "rll": 1e-12,
    "factorization": 1e-12,
    "fusion": 1e-12,
    "hirota": 1e-10,
    "determinant": 1e-10,
    "plucker": 1e-10,
    "commuting": 1e-10,
    "bgg": 1e-6,
    "trace": 1e-6,
}

SUITES = tuple(DEFAULT_TOLS)


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    n: int = 2
    length: int = 2
    phis: Tuple[float, ...] = ()
    n_max: int = 8
    buffer: int = 4
    tol: Optional[float] = None
    seed: int = 0
    suites: Tuple[str, ...] = SUITES
    out: Optional[str] = None
    fmt: str = "json"

    def __post_init__(self):
        if not 2 <= self.n <= 4:
            raise ConfigError("n must be between 2 and 4")
        if not 0 <= self.length <= 5:
            raise ConfigError("L must be between 0 and 5")
        if self.fmt not in ("json", "csv"):
            raise ConfigError("format must be json or csv")
        for s in self.suites:
            if s not in SUITES:
                raise ConfigError("unknown suite %r (choose from %s)"
                                  % (s, ", ".join(SUITES)))
        if not self.phis:
            self.phis = DEFAULT_PHIS[self.n]
        if len(self.phis) != self.n:
            raise ConfigError("phi must list %d angles" % self.n)
        total = sum(self.phis)
        if abs(total) > 1e-9:
            print("warning: twist angles sum to %g; renormalizing to zero sum"
                  % total, file=sys.stderr)
            self.phis = tuple(p - total / self.n for p in self.phis)

    def tolerance(self, suite: str) -> float:
        return self.tol if self.tol is not None else DEFAULT_TOLS[suite]

    def twist(self):
        from .transfer import TwistConfig
        return TwistConfig(self.phis)


def _apply_thread_cap() -> None:
    cap = os.environ.get("QLAB_THREADS")
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ.setdefault(var, cap)


# -- verification suites -----------------------------------------------------------


def _record(suite: str, name: str, residual: float, tol: float,
            t0: float) -> dict:
    return {
        "suite": suite,
        "name": name,
        "residual": float(residual),
        "tolerance": tol,
        "passed": bool(residual < tol),
        "seconds": round(time.time() - t0, 3),
    }


def _suite_anchors(cfg: RunConfig) -> List[dict]:
    from .transfer import build_Q
    tw = cfg.twist()
    out = []
    dim = cfg.n ** cfg.length
    eye = np.eye(dim)
    for name, I, ref in [("empty-set member is identity", (),
                          lambda z: eye),
                         ("full-set member is z^L",
                          tuple(range(1, cfg.n + 1)),
                          lambda z: z ** cfg.length * eye)]:
        t0 = time.time()
        q = build_Q(cfg.n, cfg.length, I, tw)
        r = max(float(np.max(np.abs(q.at(z).to_dense() - ref(z))))
                for z in (0.83, -0.27))
        out.append(_record("anchors", name, r, cfg.tolerance("anchors"), t0))
    return out


def _suite_rll(cfg: RunConfig) -> List[dict]:
    from .glrep import fundamental_rep, trivial_rep, verma_rep
    from .lax import canonical_lax, eval_lax, partonic_lax, rll_residual
    rng = np.random.default_rng(cfg.seed)
    pairs = [(complex(rng.normal(), rng.normal()),
              complex(rng.normal(), rng.normal())) for _ in range(5)]
    labels = tuple(range(1, cfg.n + 1))
    cases = [("defining evaluation", eval_lax(fundamental_rep(labels)))]
    wt = tuple(0.3 - 0.17 * a for a in range(cfg.n))
    wt = tuple(w - sum(wt) / cfg.n for w in wt)
    cases.append(("highest-weight evaluation",
                  eval_lax(verma_rep(wt, labels=labels, tag="v"))))
    for a in labels:
        cases.append(("degenerate factor %d" % a, partonic_lax(cfg.n, a)))
    cases.append(("oscillator-traced block (1,)",
                  canonical_lax(cfg.n, (1,), trivial_rep((1,)))))
    if cfg.n >= 3:
        cases.append(("oscillator-traced block (1,2)",
                      canonical_lax(cfg.n, (1, 2), trivial_rep((1, 2)))))
    out = []
    for name, L in cases:
        t0 = time.time()
        r = max(rll_residual(L, z1, z2, n_max=cfg.n_max) for z1, z2 in pairs)
        out.append(_record("rll", name, r, cfg.tolerance("rll"), t0))
    return out


def _suite_factorization(cfg: RunConfig) -> List[dict]:
    from .fusion import factorize_partons
    rng = np.random.default_rng(cfg.seed + 1)
    wt = tuple(complex(rng.normal(), rng.normal()) for _ in range(cfg.n))
    fac = factorize_partons(cfg.n, wt)
    out = []
    for z in (0.31, -0.74 + 0.2j):
        t0 = time.time()
        r = fac.residual(z, n_max=cfg.n_max, buffer=cfg.buffer)
        out.append(_record("factorization", "ordered product at z=%s" % z, r,
                           cfg.tolerance("factorization"), t0))
    from .glrep import gl_relation_residual
    t0 = time.time()
    out.append(_record("factorization", "triangular-core algebra relations",
                       gl_relation_residual(fac.generator_rep()),
                       cfg.tolerance("factorization"), t0))
    return out


def _suite_fusion(cfg: RunConfig) -> List[dict]:
    from .fusion import fuse
    from .glrep import gl_relation_residual, scalar_rep, verma_rep
    out = []
    specs = [((1,), (2,), scalar_rep(1, 0.23), scalar_rep(2, -0.41), 0.6)]
    if cfg.n >= 3:
        specs.append(((1,), (2, 3), scalar_rep(1, 0.23),
                      verma_rep((0.4, -0.2), labels=(2, 3), tag="v"), 0.6))
    for I, J, r1, r2, lam in specs:
        t0 = time.time()
        res = fuse(cfg.n, I, J, r1, r2, lam)
        r = max(res.residual(z, n_max=cfg.n_max, buffer=cfg.buffer)
                for z in (0.37, -0.58))
        out.append(_record("fusion", "blocks %s + %s" % (I, J), r,
                           cfg.tolerance("fusion"), t0))
        t0 = time.time()
        out.append(_record("fusion", "merged algebra relations %s+%s" % (I, J),
                           gl_relation_residual(res.fused_rep),
                           cfg.tolerance("fusion"), t0))
    return out


def _suite_hirota(cfg: RunConfig) -> List[dict]:
    from .relations import QFamily, enumerate_hasse, hirota_residual
    tw = cfg.twist()
    qf = QFamily(cfg.n, cfg.length, tw)
    out = []
    for I, a, b in enumerate_hasse(cfg.n).quadrilaterals:
        t0 = time.time()
        r = hirota_residual(cfg.n, cfg.length, I, a, b, tw, family=qf)
        out.append(_record("hirota", "quadrilateral I=%s a=%d b=%d" % (I, a, b),
                           r, cfg.tolerance("hirota"), t0))
    return out


def _suite_determinant(cfg: RunConfig) -> List[dict]:
    from .relations import (QFamily, q_determinant_residual,
                            t_determinant_residual)
    tw = cfg.twist()
    qf = QFamily(cfg.n, cfg.length, tw)
    out = []
    for I in itertools.combinations(range(1, cfg.n + 1), 2):
        t0 = time.time()
        r = q_determinant_residual(cfg.n, cfg.length, I, tw, family=qf)
        out.append(_record("determinant", "pair form I=%s" % (I,), r,
                           cfg.tolerance("determinant"), t0))
    t0 = time.time()
    out.append(_record("determinant", "defining transfer form",
                       t_determinant_residual(cfg.n, cfg.length, tw, family=qf),
                       cfg.tolerance("determinant"), t0))
    return out


def _suite_plucker(cfg: RunConfig) -> List[dict]:
    from .relations import QFamily, plucker_residual
    tw = cfg.twist()
    qf = QFamily(cfg.n, cfg.length, tw)
    chain = tuple(range(1, cfg.n + 1))
    rng = np.random.default_rng(cfg.seed + 2)
    out = []
    for k in range(2, cfg.n + 1):
        pts = tuple(np.round(rng.uniform(-0.8, 0.8, size=k + 1), 3))
        t0 = time.time()
        r = plucker_residual(cfg.n, cfg.length, chain, k, pts, tw, family=qf)
        out.append(_record("plucker", "exchange relation k=%d" % k, r,
                           cfg.tolerance("plucker"), t0))
    return out


def _suite_commuting(cfg: RunConfig) -> List[dict]:
    from .relations import QFamily, enumerate_hasse
    from .spectral import build_hamiltonian
    from .tensor import comm_norm
    from .transfer import build_T_box
    tw = cfg.twist()
    qf = QFamily(cfg.n, cfg.length, tw)
    ops = [("hamiltonian", build_hamiltonian(cfg.n, cfg.length, tw))]
    ops.append(("defining transfer", build_T_box(cfg.n, cfg.length, tw).at(0.29)))
    for I in enumerate_hasse(cfg.n).nodes:
        if 0 < len(I) < cfg.n:
            ops.append(("member %s" % (I,), qf.q(I).at(0.37)))
    t0 = time.time()
    worst = max(comm_norm(x, y)
                for i, (_, x) in enumerate(ops) for _, y in ops[i + 1:])
    return [_record("commuting", "max pairwise commutator (%d ops)" % len(ops),
                    worst, cfg.tolerance("commuting"), t0)]


def _suite_bgg(cfg: RunConfig) -> List[dict]:
    from .transfer import bgg_eigen_check
    tw = cfg.twist()
    weight = (1.0,) + (0.0,) * (cfg.n - 1)
    length = min(cfg.length, 2) or 1
    t0 = time.time()
    r = bgg_eigen_check(cfg.n, length, weight, tw)
    return [_record("bgg", "signed resolution, weight %s, L=%d"
                    % (weight, length), r, cfg.tolerance("bgg"), t0)]


def _suite_trace(cfg: RunConfig) -> List[dict]:
    from .oscillator import (NormalOrderedOp as Op, extrapolated_trace,
                             weighted_trace)
    rng = np.random.default_rng(cfg.seed + 3)
    modes = [("m", 1, 2), ("m", 2, 1), ("m", 1, 3)]
    qs = {m: cmath.exp(1j * a) for m, a in zip(modes, (0.9, -1.4, 0.55))}
    t0 = time.time()
    worst = 0.0
    for _ in range(50):
        x = Op.scalar(complex(rng.normal(), rng.normal()))
        for m in modes:
            k = int(rng.integers(0, 3))
            x = x * (Op.creator(m) ** k) * (Op.annihilator(m) ** k)
        worst = max(worst, abs(weighted_trace(x, qs) - extrapolated_trace(x, qs)))
    return [_record("trace", "closed form vs damped extrapolation (50 draws)",
                    worst, cfg.tolerance("trace"), t0)]


SUITE_RUNNERS: Dict[str, Callable[[RunConfig], List[dict]]] = {
    "anchors": _suite_anchors,
    "rll": _suite_rll,
    "factorization": _suite_factorization,
    "fusion": _suite_fusion,
    "hirota": _suite_hirota,
    "determinant": _suite_determinant,
    "plucker": _suite_plucker,
    "commuting": _suite_commuting,
    "bgg": _suite_bgg,
    "trace": _suite_trace,
}


def run_verify(cfg: RunConfig) -> dict:
    records = []
    for suite in cfg.suites:
        records.extend(SUITE_RUNNERS[suite](cfg))
    return {
        "command": "verify",
        "config": _config_dict(cfg),
        "records": records,
        "all_passed": all(r["passed"] for r in records),
    }


# -- spectrum / bethe --------------------------------------------------------------


def _cnum(x: complex) -> object:
    x = complex(x)
    if abs(x.imag) < 1e-12:
        return x.real
    return {"re": x.real, "im": x.imag}


def _cstr(x: complex) -> str:
    x = complex(x)
    if abs(x.imag) < 1e-12:
        return "%.12g" % x.real
    return "%.12g%+.12gj" % (x.real, x.imag)


def run_spectrum(cfg: RunConfig) -> dict:
    from .spectral import SpectralAnalysis
    if cfg.length < 1:
        raise ConfigError("spectrum needs L >= 1")
    sa = SpectralAnalysis(cfg.n, cfg.length, cfg.twist(), seed=cfg.seed + 5)
    rows = []
    for r in sa.all_records():
        rows.append({
            "sector": list(r.sector),
            "state_index": r.state,
            "E_direct": _cnum(r.energy_direct),
            "E_roots": _cnum(r.energy_roots),
            "E_TBox": _cnum(r.energy_tbox),
            "max_bethe_residual": r.max_bethe_residual,
        })
    return {"command": "spectrum", "config": _config_dict(cfg), "rows": rows}


def run_bethe(cfg: RunConfig) -> dict:
    from .spectral import SpectralAnalysis, solve_bethe_newton
    if cfg.length < 1:
        raise ConfigError("bethe needs L >= 1")
    sa = SpectralAnalysis(cfg.n, cfg.length, cfg.twist(), seed=cfg.seed + 5)
    sigmas = [sa.q_polys[I].sigma for I in sa.sets]
    states = []
    for r in sa.all_records():
        refined, res, iters = solve_bethe_newton(r.level_roots, sigmas)
        states.append({
            "sector": list(r.sector),
            "state_index": r.state,
            "levels": [{"index_set": list(I),
                        "roots": [_cstr(z) for z in roots]}
                       for I, roots in zip(sa.sets, r.level_roots)],
            "max_residual": r.max_bethe_residual,
            "refined_max_residual": res,
            "newton_iterations": iters,
        })
    return {"command": "bethe", "config": _config_dict(cfg),
            "chain": list(sa.path), "states": states}


def run_hasse(cfg: RunConfig) -> dict:
    from .relations import enumerate_hasse
    h = enumerate_hasse(cfg.n)
    return {
        "command": "hasse",
        "n": cfg.n,
        "nodes": [list(x) for x in h.nodes],
        "edges": [[list(a), list(b)] for a, b in h.edges],
        "quadrilaterals": [[list(I), a, b] for I, a, b in h.quadrilaterals],
        "chains": [list(c) for c in h.chains],
        "counts": {"nodes": len(h.nodes), "edges": len(h.edges),
                   "quadrilaterals": len(h.quadrilaterals),
                   "chains": len(h.chains)},
    }


def run_report(cfg: RunConfig) -> dict:
    verify = run_verify(cfg)
    report = {
        "command": "report",
        "config": _config_dict(cfg),
        "verify": verify,
        "hasse": run_hasse(cfg),
    }
    if cfg.length >= 1:
        report["spectrum"] = run_spectrum(cfg)
    report["all_passed"] = verify["all_passed"]
    return report


# -- plumbing ----------------------------------------------------------------------


def _config_dict(cfg: RunConfig) -> dict:
    return {
        "n": cfg.n, "L": cfg.length, "phi": list(cfg.phis),
        "nmax": cfg.n_max, "buffer": cfg.buffer, "tol": cfg.tol,
        "seed": cfg.seed, "suite": list(cfg.suites),
    }


def _emit(doc: dict, cfg: RunConfig) -> str:
    if cfg.fmt == "csv":
        buf = io.StringIO()
        if doc.get("command") == "spectrum":
            w = csv.writer(buf)
            w.writerow(["sector", "state_index", "E_direct", "E_roots",
                        "E_TBox", "max_bethe_residual"])
            for row in doc["rows"]:
                w.writerow(["+".join(map(str, row["sector"])),
                            row["state_index"],
                            _csv_num(row["E_direct"]),
                            _csv_num(row["E_roots"]),
                            _csv_num(row["E_TBox"]),
                            "%.3e" % row["max_bethe_residual"]])
        elif "records" in doc:
            w = csv.writer(buf)
            w.writerow(["suite", "name", "residual", "tolerance", "passed"])
            for r in doc["records"]:
                w.writerow([r["suite"], r["name"], "%.3e" % r["residual"],
                            "%.1e" % r["tolerance"], r["passed"]])
        else:
            raise ConfigError("csv format is only available for tabular output")
        return buf.getvalue()
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _csv_num(x: object) -> str:
    if isinstance(x, dict):
        return "%.12g%+.12gj" % (x["re"], x["im"])
    return "%.12g" % x


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qlab",
        description="Finite-matrix laboratory for twisted chains: construct "
                    "the commuting operator family and verify its relations.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, doc in [("verify", "run identity-verification suites"),
                      ("spectrum", "per-sector spectral table"),
                      ("bethe", "root systems and equation residuals"),
                      ("hasse", "subset-lattice dump"),
                      ("report", "combined verification report")]:
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", help="JSON config file (flat keys)")
        p.add_argument("--n", type=int)
        p.add_argument("--L", type=int)
        p.add_argument("--phi", help="comma-separated twist angles")
        p.add_argument("--nmax", type=int)
        p.add_argument("--buffer", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--suite", help="comma-separated suite names")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", choices=["json", "csv"])
    return ap


def _load_config(args: argparse.Namespace) -> RunConfig:
    values: Dict[str, object] = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                values.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("cannot read config file: %s" % exc) from exc
    flags = {
        "n": args.n, "L": args.L, "phi": args.phi, "nmax": args.nmax,
        "buffer": args.buffer, "tol": args.tol, "seed": args.seed,
        "suite": args.suite, "out": args.out, "format": args.format,
    }
    for k, v in flags.items():
        if v is not None:
            values[k] = v
    phis: Tuple[float, ...] = ()
    if "phi" in values and values["phi"] is not None:
        raw = values["phi"]
        try:
            if isinstance(raw, str):
                phis = tuple(float(x) for x in raw.split(","))
            else:
                phis = tuple(float(x) for x in raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError("phi must be a comma-separated number list") from exc
    suites: Tuple[str, ...] = SUITES
    if "suite" in values and values["suite"] is not None:
        raw = values["suite"]
        suites = tuple(raw.split(",")) if isinstance(raw, str) else tuple(raw)
    try:
        return RunConfig(
            n=int(values.get("n", 2)),
            length=int(values.get("L", 2)),
            phis=phis,
            n_max=int(values.get("nmax", 8)),
            buffer=int(values.get("buffer", 4)),
            tol=(float(values["tol"]) if values.get("tol") is not None else None),
            seed=int(values.get("seed", 0)),
            suites=suites,
            out=values.get("out"),
            fmt=str(values.get("format", "json")),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def main(argv: Sequence[str] | None = None) -> int:
    _apply_thread_cap()
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = _load_config(args)
        runner = {"verify": run_verify, "spectrum": run_spectrum,
                  "bethe": run_bethe, "hasse": run_hasse,
                  "report": run_report}[args.command]
        doc = runner(cfg)
        text = _emit(doc, cfg)
    except ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.command in ("verify", "report") and not doc["all_passed"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
