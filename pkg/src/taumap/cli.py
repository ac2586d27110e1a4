"""taumap command line: coeffs, verify, moments, map."""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import combinatorics, hirota, riemann, taucoeffs
from .exactring import FormalSeries

log = logging.getLogger("taumap")


@dataclass(frozen=True)
class RunConfig:
    cutoff: int = 8
    n_quad: int = riemann.DEFAULT_NQUAD
    korder: int | None = None
    jorder: int | None = None
    out: str | None = None
    curve: str | None = None
    csv: str | None = None
    samples: int = 1024
    mutate: bool = False
    seed: int = 0

    @property
    def k(self) -> int:
        return self.cutoff if self.korder is None else self.korder

    @property
    def j(self) -> int:
        return self.k if self.jorder is None else self.jorder

    def validate(self) -> None:
        if self.cutoff < 1:
            raise ValueError(f"--cutoff must be >= 1, got {self.cutoff}")
        if not 1 <= self.k <= self.cutoff:
            raise ValueError(f"--korder must be in 1..{self.cutoff}, got {self.k}")
        if not 0 <= self.j <= self.k:
            raise ValueError(f"--jorder must be in 0..{self.k}, got {self.j}")
        if self.n_quad < 4:
            raise ValueError("--nquad must be >= 4")


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("TAUMAP_THREADS", "1")))
    except ValueError:
        return 1


def write_atomic(path: str | None, text: str) -> None:
    """Write text to path via temp file + rename; stdout if path is None."""
    if path is None:
        sys.stdout.write(text)
        return
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


# -- subcommands -----------------------------------------------------------------

def cmd_coeffs(cfg: RunConfig, memo_dump: str | None = None) -> int:
    table = taucoeffs.coefficient_table(cfg.cutoff)
    write_atomic(cfg.out, dumps(taucoeffs.table_to_json_obj(table)))
    if memo_dump:
        write_atomic(memo_dump, dumps(combinatorics.cache_info()))
    return 0


def _run_check(task):
    kind, args, series_json = task
    v = FormalSeries.from_json(series_json)
    if kind == "toda":
        return hirota.toda_field_residual(v)
    if kind == "hirota":
        return hirota.hirota_residual(v, *args)
    if kind == "dkp":
        i, j, seed = args
        return hirota.dkp_consistency(i, j, v, rng=random.Random(seed))
    return hirota.homogeneity_check(v)


def verification_tasks(v: FormalSeries, seed: int) -> list:
    text = v.to_json()
    tasks = [("toda", (), text)] + [("hirota", (eq,), text) for eq in (1, 2, 3)]
    w = v.cutoff
    for i in range(1, w):
        for j in range(i, w - i + 1):
            tasks.append(("dkp", (i, j, seed * 1000 + 10 * i + j), text))
    tasks.append(("homogeneity", (), text))
    return tasks


def cmd_verify(cfg: RunConfig) -> int:
    v = taucoeffs.tau_series(cfg.cutoff)
    mutation = None
    if cfg.mutate:
        v, mono, delta = hirota.perturb_series(v, random.Random(cfg.seed))
        mutation = {"unbarred": list(mono.unbarred), "barred": list(mono.barred), "delta": str(delta)}
    tasks = verification_tasks(v, cfg.seed)
    workers = min(thread_cap(), len(tasks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_run_check, tasks))
    else:
        reports = [_run_check(t) for t in tasks]
    passed = hirota.all_passed(reports)
    payload = {"cutoff": cfg.cutoff, "passed": passed, "mutation": mutation,
               "reports": [r.to_json_obj() for r in reports]}
    write_atomic(cfg.out, dumps(payload))
    failed = [r.equation for r in reports if not r.passed]
    print(f"verify W={cfg.cutoff}: {'PASS' if passed else 'FAIL ' + ','.join(failed)}", file=sys.stderr)
    return 0 if passed else 1


def cmd_moments(cfg: RunConfig) -> int:
    curve = riemann.load_curve(cfg.curve)
    m = riemann.moments_from_curve(curve, cfg.k, cfg.n_quad)
    write_atomic(cfg.out, dumps(m.to_json_obj()))
    return 0


def cmd_map(cfg: RunConfig) -> int:
    curve = riemann.load_curve(cfg.curve)
    m = riemann.moments_from_curve(curve, cfg.k, cfg.n_quad)
    v = taucoeffs.tau_series(cfg.cutoff)
    w = riemann.map_series(v, m, cfg.j)
    err = riemann.boundary_unimodularity(curve, w, cfg.samples)
    payload = w.to_json_obj()
    payload["boundary_error"] = err
    payload["moments"] = m.to_json_obj()
    write_atomic(cfg.out, dumps(payload))
    if cfg.csv:
        write_atomic(cfg.csv, riemann.boundary_csv(curve, w, cfg.samples))
    print(f"map W={cfg.cutoff} K={cfg.k} J={cfg.j}: r={w.r:.15g} "
          f"max||w|-1|={err:.3e}", file=sys.stderr)
    return 0


# -- argument parsing ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="taumap", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, cutoff):
        p.add_argument("--cutoff", type=int, default=cutoff, help="series level cutoff W")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("coeffs", help="N-coefficient table up to level W")
    common(p, 8)
    p.add_argument("--memo-dump", help="write memo table statistics as JSON")

    p = sub.add_parser("verify", help="exact Hirota/dKP/homogeneity residuals")
    common(p, 6)
    p.add_argument("--mutate", action="store_true", help="perturb one coefficient (test hook)")

    for name, help_ in (("moments", "harmonic moments of a curve"),
                        ("map", "exterior conformal map of a curve")):
        p = sub.add_parser(name, help=help_)
        common(p, 8)
        p.add_argument("--curve", required=True, help='JSON {"fourier": [[m, re, im], ...]}')
        p.add_argument("--korder", type=int, help="moment order K (default W)")
        p.add_argument("--nquad", type=int, default=riemann.DEFAULT_NQUAD)
        if name == "map":
            p.add_argument("--jorder", type=int, help="map order J (default K)")
            p.add_argument("--csv", help="boundary samples CSV path")
            p.add_argument("--samples", type=int, default=1024)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = RunConfig(cutoff=args.cutoff, n_quad=getattr(args, "nquad", riemann.DEFAULT_NQUAD),
                    korder=getattr(args, "korder", None), jorder=getattr(args, "jorder", None),
                    out=args.out, curve=getattr(args, "curve", None), csv=getattr(args, "csv", None),
                    samples=getattr(args, "samples", 1024), mutate=getattr(args, "mutate", False),
                    seed=args.seed)
    try:
        cfg.validate()
    except ValueError as exc:
        parser.error(str(exc))
    try:
        if args.command == "coeffs":
            return cmd_coeffs(cfg, args.memo_dump)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "moments":
            return cmd_moments(cfg)
        return cmd_map(cfg)
    except (riemann.CurveError, OSError, ValueError, KeyError) as exc:
        print(f"taumap {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
