"""``prmt`` command line: tabulate, moments, verify, simulate.

Exit codes: 0 ok, 1 verification failure, 2 usage error, 3 convergence
failure, 4 route disagreement, 5 tolerance failure.
"""
from __future__ import annotations

import argparse
import io
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import fredholm, models, painleve, verify
from .errors import InvalidParams, NotConverged, PrmtError, QuadratureNotConverged, SingularSystem

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_CONVERGENCE = 3
EXIT_ROUTES = 4
EXIT_TOLERANCE = 5

ROUTE_TOL = 1e-6

CONFIG_KEYS = {
    "quad.n": int,
    "quad.L": float,
    "painleve.xmin": float,
    "painleve.xmax": float,
    "painleve.tol": float,
    "sim.seed": int,
    "sim.samples": int,
    "sim.threads": int,
}

# Printed table values and the truncated-digit intervals they define.
MOMENT_BOUNDS = {
    0: ((-1.772, -1.771), (0.90, 0.91)),
    1: ((-0.495, -0.494), (1.11, 1.12)),
    2: ((0.543, 0.544), (1.18, 1.19)),
    3: ((1.445, 1.446), (1.21, 1.22)),
}

# KS tolerances for the Monte Carlo scenarios, keyed by comparison target.
SIM_TOL = {"f0": 0.10, "f1": 0.12, "f2": 0.12, "f3": 0.12, "fk": 0.12, "gk": 0.08, "duality": 0.02}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}") from exc
    return out


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def _emit(header: list[str], rows, out: str | None) -> None:
    buf = io.StringIO(newline="\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    if out:
        Path(out).write_text(buf.getvalue(), encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(buf.getvalue())


def _grid(xmin: float, xmax: float, step: float) -> np.ndarray:
    if not step > 0 or not xmax > xmin:
        raise UsageError("need xmax > xmin and step > 0")
    n = int(math.floor((xmax - xmin) / step + 1e-9))
    return xmin + step * np.arange(n + 1)


def five_point_derivative(xs: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Centered 5-point differences; 3-point and one-sided rules at the ends."""
    h = xs[1] - xs[0]
    d = np.empty_like(F)
    d[2:-2] = (F[:-4] - 8 * F[1:-3] + 8 * F[3:-1] - F[4:]) / (12 * h)
    d[1] = (F[2] - F[0]) / (2 * h)
    d[-2] = (F[-1] - F[-3]) / (2 * h)
    d[0] = (-3 * F[0] + 4 * F[1] - F[2]) / (2 * h)
    d[-1] = (3 * F[-1] - 4 * F[-2] + F[-3]) / (2 * h)
    return d


def cmd_tabulate(args, cfg) -> int:
    xs = _grid(args.xmin, args.xmax, args.step)
    ws = _floats(args.w) if args.w else []
    if args.dist == "fk" and not ws:
        raise UsageError("--dist fk needs --w")
    if args.dist != "fk" and ws:
        raise UsageError("--w applies to --dist fk only")
    if args.density and xs.size < 5:
        raise UsageError("--density needs at least 5 grid points")
    routes = ["fredholm", "painleve"] if args.route == "both" else [args.route]
    vals = [fredholm.tabulate_cdf(args.dist, xs, ws, r) for r in routes]
    F = vals[-1]
    header = ["x", "F", "dFdx"] if args.density else ["x", "value"]
    cols = [xs, F] + ([five_point_derivative(xs, F)] if args.density else [])
    diff = None
    if args.route == "both":
        diff = vals[0] - vals[1]
        header.append("diff")
        cols.append(diff)
    _emit(header, zip(*cols), args.out)
    if diff is not None and np.max(np.abs(diff)) > ROUTE_TOL:
        print(f"route disagreement {np.max(np.abs(diff)):.3e}", file=sys.stderr)
        return EXIT_ROUTES
    return EXIT_OK


def moments_within(k: int, mean: float, sd: float) -> bool:
    (m_lo, m_hi), (s_lo, s_hi) = MOMENT_BOUNDS[k]
    return m_lo <= mean <= m_hi and s_lo <= sd < s_hi


def cmd_moments(args, cfg) -> int:
    mean, sd = fredholm.moments(args.k)
    _emit(["k", "mean", "sd"], [(args.k, mean, sd)], None)
    return EXIT_OK if moments_within(args.k, mean, sd) else EXIT_TOLERANCE


def cmd_verify(args, cfg) -> int:
    names = list(verify.SUITES) if args.suite == "all" else [args.suite]
    ok = True
    for name in names:
        checks = verify.run_suite(name, trials=args.trials, seed=args.seed)
        for c in checks:
            print(c.line())
        s = verify.summary(name, checks)
        print(s.line())
        ok &= s.passed
    return EXIT_OK if ok else EXIT_VERIFY


def _reference_cdf(dist: str, ws):
    lo, hi, step = fredholm.MOMENT_GRID
    xs = np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)
    F = fredholm.tabulate_cdf(dist, xs, ws, "painleve")
    return lambda x: np.interp(x, xs, F, left=0.0, right=1.0)


def cmd_simulate(args, cfg) -> int:
    seed = args.seed if args.seed is not None else cfg.get("sim.seed", 0)
    samples = args.samples if args.samples is not None else cfg.get("sim.samples", 2000)
    threads = args.threads if args.threads is not None else cfg.get("sim.threads", 1)
    streams = max(1, args.streams)
    if samples < 1 or threads < 1:
        raise UsageError("samples and threads must be positive")
    if args.model == "lpp":
        return _simulate_lpp(args, seed, samples, streams, threads)
    return _simulate_tasep(args, seed, samples, streams, threads)


def _simulate_lpp(args, seed, samples, streams, threads) -> int:
    if args.rows is None or args.cols is None:
        raise UsageError("lpp needs --rows and --cols")
    if args.rows < args.cols:
        raise UsageError("need rows >= cols (gamma >= 1)")
    spikes = _floats(args.spikes) if args.spikes else []
    bw = _floats(args.bbp2_w) if args.bbp2_w else None
    if spikes and bw is not None:
        raise UsageError("give --spikes or --bbp2-w, not both")
    res = models.simulate_lpp(args.rows, args.cols, spikes, bw, samples, seed, streams, threads)
    if args.out:
        res.to_csv(args.out)
    if not args.compare:
        print(f"n={samples}")
        return EXIT_OK
    target = args.compare
    regime = res.meta["regime"]
    k = len(bw) if bw is not None else len(spikes)
    if target == "gk":
        if regime != "supercritical":
            raise UsageError("--compare gk needs a supercritical spike")
        l1 = max(spikes)
        k = sum(1 for s in spikes if s == l1)
        gue = models.run_streams(lambda size, rng: models.gue_max_batch(k, size, rng),
                                 samples, seed + 1, streams, threads)
        ks = models.ks_two_sample(res.samples, gue)
    else:
        if target == "fk":
            if bw is None:
                raise UsageError("--compare fk needs --bbp2-w")
            ref = _reference_cdf("fk", bw)
        else:
            ref = _reference_cdf(target, ())
        ks = res.ks(ref)
    print(f"KS={ks:.6g} n={samples}")
    return EXIT_OK if ks <= SIM_TOL[target] else EXIT_TOLERANCE


def _simulate_tasep(args, seed, samples, streams, threads) -> int:
    slow = _floats(args.spikes) if args.spikes else []
    m, t_end = args.m, args.time
    if t_end is None or not t_end > 0:
        raise UsageError("tasep needs --time > 0")
    particles = args.particles

    def event(size, rng):
        return models.tasep_event_sim(particles, slow, t_end, rng, size, report_m=(m,))["counts"][m]

    counts = models.run_streams(event, samples, seed, streams, threads)
    if args.out:
        lines = [f"# seed={seed} streams={streams}", "index,count"]
        lines += [f"{i},{int(c)}" for i, c in enumerate(counts)]
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    if not args.compare:
        print(f"n={samples}")
        return EXIT_OK
    if args.compare != "duality":
        raise UsageError("tasep supports --compare duality only")

    def dual(size, rng):
        return models.duality_counts(m, t_end, slow, size, rng, max_particles=particles)

    ref = models.run_streams(dual, samples, seed + 1, streams, threads)
    ks = models.ks_two_sample(counts, ref)
    print(f"KS={ks:.6g} n={samples}")
    return EXIT_OK if ks <= SIM_TOL["duality"] else EXIT_TOLERANCE


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="prmt", description="Generalized Tracy-Widom distributions.")
    p.add_argument("--config", help="key = value config file (default: $PRMT_CONFIG)")
    p.add_argument("--quad-n", type=int, dest="quad_n")
    p.add_argument("--quad-L", type=float, dest="quad_L")
    p.add_argument("--painleve-xmin", type=float, dest="painleve_xmin")
    p.add_argument("--painleve-xmax", type=float, dest="painleve_xmax")
    p.add_argument("--painleve-tol", type=float, dest="painleve_tol")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("tabulate", help="CDF table on a grid")
    t.add_argument("--dist", choices=fredholm.DISTRIBUTIONS, required=True)
    t.add_argument("--w", help="comma-separated spikes (fk only)")
    t.add_argument("--xmin", type=float, default=-6.0)
    t.add_argument("--xmax", type=float, default=4.0)
    t.add_argument("--step", type=float, default=0.1)
    t.add_argument("--route", choices=("fredholm", "painleve", "both"), default="painleve")
    t.add_argument("--density", action="store_true")
    t.add_argument("--out")

    m = sub.add_parser("moments", help="mean and sd of F_k")
    m.add_argument("--k", type=int, choices=range(4), required=True)

    v = sub.add_parser("verify", help="identity suites")
    v.add_argument("--suite", choices=(*verify.SUITES, "all"), required=True)
    v.add_argument("--trials", type=int, default=20)
    v.add_argument("--seed", type=int, default=7)

    s = sub.add_parser("simulate", help="Monte Carlo samples and KS comparison")
    s.add_argument("model", choices=("lpp", "tasep"))
    s.add_argument("--rows", type=int, help="M (samples per population)")
    s.add_argument("--cols", type=int, help="N (population size)")
    s.add_argument("--spikes", help="comma-separated spike means (tasep: slow-start means)")
    s.add_argument("--bbp2-w", dest="bbp2_w", help="comma-separated critical-window offsets")
    s.add_argument("--samples", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--threads", type=int)
    s.add_argument("--streams", type=int, default=1)
    s.add_argument("--compare", choices=(*fredholm.DISTRIBUTIONS, "gk", "duality"))
    s.add_argument("--m", type=int, default=0, help="tasep: count particles right of site m")
    s.add_argument("--time", type=float, help="tasep: observation time")
    s.add_argument("--particles", type=int, default=40, help="tasep: simulated particles")
    s.add_argument("--out")
    return p


def _apply_config(args, cfg: dict) -> None:
    L = args.quad_L if args.quad_L is not None else cfg.get("quad.L")
    n = args.quad_n if args.quad_n is not None else cfg.get("quad.n")
    if L is not None or n is not None:
        fredholm.configure(L=L, n=n)
    hm = {"x_min": (args.painleve_xmin, "painleve.xmin"),
          "x_max": (args.painleve_xmax, "painleve.xmax"),
          "tol": (args.painleve_tol, "painleve.tol")}
    opts = {k: (flag if flag is not None else cfg.get(key)) for k, (flag, key) in hm.items()}
    opts = {k: v for k, v in opts.items() if v is not None}
    if opts:
        painleve.set_default_table(painleve.solve_hastings_mcleod(**opts))


_LIST_FLAGS = ("--w", "--spikes", "--bbp2-w")


def _join_list_flags(argv: list[str]) -> list[str]:
    # argparse takes "-0.3,0.5" for an option; glue it to its flag
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _LIST_FLAGS and i + 1 < len(argv) and argv[i + 1][:2] not in ("--", ""):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


COMMANDS = {
    "tabulate": cmd_tabulate,
    "moments": cmd_moments,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    try:
        argv = sys.argv[1:] if argv is None else list(argv)
        args = build_parser().parse_args(_join_list_flags(argv))
        path = args.config or os.environ.get("PRMT_CONFIG")
        cfg = read_config(path) if path else {}
        _apply_config(args, cfg)
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"prmt: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NotConverged, QuadratureNotConverged, SingularSystem) as exc:
        print(f"prmt: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (InvalidParams, PrmtError) as exc:
        print(f"prmt: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
