"""Batch command-line front end.

Every run is determined by its arguments; the parsed configuration and the
tool version are embedded in each output.  JSON is canonical (sorted keys,
fixed float formatting); CSV is a flattening for plotting.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from importlib import resources
from fractions import Fraction

import gmpy2
import numpy as np

from . import __version__
from .iet import Iet
from .lyap import PrecisionLoss, lyapunov_spectrum
from .perm import (Permutation, ReducibleError, genus, h_subspace, is_irreducible, rauzy_class,
                   singularity_data, standard_members)
from .renorm import (DivergenceGuard, HaltOnTie, InducedCocycle, NonPositiveWindow, Window, ZorichCocycle,
                     normalize, rauzy_step, shortest_positive_word, zorich_step)
from .scalars import (DEFAULT_PRECISION, format_scalar, parse_scalar, parse_vector, precision_of,
                      to_float_mode, working_precision)
from .wmlab import (LineJ, default_probe_line, hausdorff_estimate, orbit_log_norms, beta_delta,
                    veech_scan, wstable_probe)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PRECISION = 3
EXIT_TIE = 4

BETA_DELTAS = (1e-4, 1e-3, 1e-2, 1e-1)


class InputError(ValueError):
    pass


# --------------------------------------------------------------------------
# output


def _plain(obj):
    """Recursively convert to JSON-native values (exact scalars become strings)."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, np.generic):
        return _plain(obj.item())
    if isinstance(obj, Permutation):
        return str(obj)
    return format_scalar(obj)


def load_schema(command: str) -> dict:
    """The JSON Schema shipped for a subcommand's output."""
    text = resources.files("ietlab").joinpath("schemas", f"{command}.json").read_text("utf-8")
    return json.loads(text)


def dump_json(payload: dict) -> str:
    return json.dumps(_plain(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def dump_csv(header: list[str], rows: list[list], config: dict) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(_plain(config), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(_plain(row))
    return buf.getvalue()


def _config(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    cfg["version"] = __version__
    return cfg


def _emit(args, payload: dict, header: list[str], rows: list[list]) -> None:
    cfg = _config(args)
    if args.format == "csv":
        text = dump_csv(header, rows, cfg)
    else:
        text = dump_json({"config": cfg, "version": __version__, **payload})
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# argument helpers


def _perm(text: str) -> Permutation:
    try:
        pi = Permutation.parse(text)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if not is_irreducible(pi):
        raise InputError(f"permutation {pi} is reducible")
    return pi


def _vector(text: str, prec: int, d: int | None = None, name: str = "vector") -> tuple:
    try:
        v = parse_vector(text, prec)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if d is not None and len(v) != d:
        raise InputError(f"{name} has {len(v)} entries, expected {d}")
    return v


def _scalar(text: str, prec: int):
    try:
        return parse_scalar(text, prec)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _window(pi: Permutation, word: str | None) -> Window:
    try:
        return Window(pi, word or shortest_positive_word(pi))
    except (ValueError, NonPositiveWindow) as exc:
        raise InputError(str(exc)) from None


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise InputError("missing required option(s): " + ", ".join("--" + n.replace("_", "-")
                                                                     for n in missing))


# --------------------------------------------------------------------------
# subcommands


def cmd_class(args) -> int:
    _require(args, "perm")
    pi = _perm(args.perm)
    members = rauzy_class(pi)
    rows = []
    for m in members:
        sd = singularity_data(m)
        rows.append({"perm": str(m), "genus": sd.genus, "n_orbits": sd.n_orbits,
                     "dim_h": h_subspace(m).dim, "standard": m.is_standard})
    payload = {
        "perm": str(pi),
        "size": len(members),
        "genus": genus(pi),
        "n_orbits": singularity_data(pi).n_orbits,
        "dim_h": h_subspace(pi).dim,
        "members": rows,
        "standard": [str(m) for m in standard_members(members)],
    }
    _emit(args, payload, ["perm", "genus", "n_orbits", "dim_h", "standard"],
          [[r["perm"], r["genus"], r["n_orbits"], r["dim_h"], int(r["standard"])] for r in rows])
    return EXIT_OK


def cmd_lyapunov(args) -> int:
    _require(args, "perm")
    pi = _perm(args.perm)
    steps = args.steps if args.steps is not None else 100_000
    if steps < 100:
        raise InputError("--steps must be at least 100")
    est = lyapunov_spectrum(pi, steps, args.seed, args.prec)
    payload = {"spectrum": est.to_dict()}
    rows = [[i + 1, e, s, n, ns] for i, (e, s, n, ns) in
            enumerate(zip(est.exponents, est.stderr, est.normalized, est.normalized_stderr))]
    _emit(args, payload, ["index", "exponent", "stderr", "normalized", "normalized_stderr"], rows)
    return EXIT_OK


def _t_grid(args, rng):
    t_min = _scalar(args.t_min if args.t_min is not None else "0", args.prec)
    t_max = _scalar(args.t_max if args.t_max is not None else "1", args.prec)
    exact = isinstance(t_min, Fraction) and isinstance(t_max, Fraction)
    bits = None if exact else args.prec
    if args.t_random is not None:
        if args.t_random < 1:
            raise InputError("--t-random must be positive")
        from .scalars import random_fraction
        with working_precision(bits):
            grid = []
            for _ in range(args.t_random):
                u = random_fraction(rng, 53)
                if not exact:
                    u = gmpy2.mpfr(gmpy2.mpq(u.numerator, u.denominator))
                grid.append(t_min + u * (t_max - t_min))
        return grid
    steps = args.t_steps if args.t_steps is not None else 1
    if steps < 1:
        raise InputError("--t-steps must be positive")
    if steps == 1:
        return [t_min]
    with working_precision(bits):
        return [t_min + (t_max - t_min) * k / (steps - 1) for k in range(steps)]


def cmd_scan(args) -> int:
    _require(args, "perm", "lam", "h")
    pi = _perm(args.perm)
    lam = _vector(args.lam, args.prec, pi.d, "--lambda")
    h = _vector(args.h, args.prec, pi.d, "--h")
    if precision_of(h) is not None:
        raise InputError("--h must be rational (integers or p/q)")
    if any(x <= 0 for x in lam):
        raise InputError("--lambda entries must be positive")
    win = _window(pi, args.window)
    rng = np.random.default_rng(args.seed)
    grid = _t_grid(args, rng)
    try:
        report = veech_scan(lam, pi, h, grid, win.word, max_visits=args.visits or 60,
                            step_cap=args.step_cap, seed=args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if report.truncation == "tie" and not any(report.visits):
        raise HaltOnTie("tie before the first window visit")
    if report.truncation:
        print(f"warning: scan truncated ({report.truncation}) after {report.steps} steps",
              file=sys.stderr)
    _emit(args, {"scan": report.to_dict()}, ["t", "visit", "n", "dist"], report.csv_rows())
    return EXIT_OK


def _cocycle(args, pi: Permutation):
    win = _window(pi, args.window)
    if args.cocycle == "induced":
        return InducedCocycle(win, args.return_cap, args.prec)
    return ZorichCocycle(pi, win, args.prec)


def _line(args, dim: int, delta) -> LineJ:
    if args.offset is None and args.direction is None:
        return default_probe_line(dim, delta)
    offset = _vector(args.offset or ",".join(["0"] * dim), args.prec, dim, "--offset")
    direction = _vector(args.direction or ",".join(["1"] * dim), args.prec, dim, "--direction")
    if precision_of(offset) is not None or precision_of(direction) is not None:
        raise InputError("--offset and --direction must be rational")
    try:
        return LineJ.through(offset, direction)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_exclude(args) -> int:
    pi = _perm(args.perm or "4 3 2 1")
    delta = Fraction(args.delta or "0.05")
    if not 0 < delta < Fraction(1, 10):
        raise InputError("--delta must lie in (0, 1/10)")
    cocycle = _cocycle(args, pi)
    line = _line(args, cocycle.dim, delta)
    report = wstable_probe(cocycle, line, delta, args.block, args.blocks if args.blocks is not None else 8,
                           args.samples if args.samples is not None else 1000, args.seed)
    if report.truncated or report.overflow:
        print(f"warning: {report.truncated} truncated and {report.overflow} overflowing samples "
              "counted as surviving", file=sys.stderr)
    rows = [[m, e, c] for m, (e, c) in enumerate(zip(report.estimates, report.certified))]
    _emit(args, {"probe": report.to_dict()}, ["m", "estimate", "certified"], rows)
    return EXIT_OK


def cmd_dim(args) -> int:
    pi = _perm(args.perm or "4 3 2 1")
    delta = float(Fraction(args.delta or "0.001"))
    if not 0 < delta < 0.5:
        raise InputError("--delta must lie in (0, 1/2)")
    horizon = args.steps if args.steps is not None else 10_000
    if horizon < 100:
        raise InputError("--steps must be at least 100")
    cocycle = _cocycle(args, pi)
    spectrum = lyapunov_spectrum(pi, args.spectrum_steps, args.seed, args.prec)
    norms = orbit_log_norms(cocycle, horizon, args.seed)
    line = _line(args, cocycle.dim, Fraction(args.delta or "0.001"))
    est = hausdorff_estimate(cocycle, line, delta, horizon, args.seed, spectrum, norms)
    profile = [{"delta": d, "beta": beta_delta(norms, d, cocycle.dim)} for d in BETA_DELTAS]
    payload = {"dimension": est.to_dict(), "profile": profile, "spectrum": spectrum.to_dict(),
               "cocycle": cocycle.describe()}
    rows = [[p["delta"], p["beta"], p["beta"] / est.exponent] for p in profile]
    _emit(args, payload, ["delta", "beta", "dim_bound"], rows)
    return EXIT_OK


def _step_record(step, n=1) -> dict:
    return {"kind": step.kind, "count": n, "matrix": step.matrix, "perm": str(step.perm_after),
            "lambda": step.lengths_after}


def cmd_induct(args) -> int:
    _require(args, "perm", "lam")
    pi = _perm(args.perm)
    lam = _vector(args.lam, args.prec, pi.d, "--lambda")
    if any(x <= 0 for x in lam):
        raise InputError("--lambda entries must be positive")
    steps = args.steps if args.steps is not None else 1
    records = []
    truncation = None
    bits = precision_of(lam)
    with working_precision(bits):
        for _ in range(steps):
            try:
                if args.mode == "zorich":
                    step, n = zorich_step(lam, pi)
                else:
                    step, n = rauzy_step(lam, pi), 1
            except (HaltOnTie, DivergenceGuard) as exc:
                if not records:
                    raise
                truncation = "tie" if isinstance(exc, HaltOnTie) else "divergence"
                break
            records.append(_step_record(step, n))
            lam, pi = list(step.lengths_after), step.perm_after
            if bits is not None:
                normalize(lam)
    if truncation:
        print(f"warning: stopped early ({truncation})", file=sys.stderr)
    rows = [[i + 1, r["kind"], r["count"], r["perm"], " ".join(format_scalar(x) for x in r["lambda"]),
             ";".join(" ".join(map(str, row)) for row in r["matrix"])] for i, r in enumerate(records)]
    _emit(args, {"steps": records, "mode": args.mode, "truncation": truncation},
          ["step", "kind", "count", "perm", "lambda", "matrix"], rows)
    return EXIT_OK


def cmd_orbit(args) -> int:
    _require(args, "perm", "lam")
    pi = _perm(args.perm)
    lam = _vector(args.lam, args.prec, pi.d, "--lambda")
    try:
        iet = Iet(lam, pi)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    x0 = _scalar(args.x0 or "0", args.prec)
    if isinstance(x0, Fraction) and not iet.exact:
        x0 = to_float_mode([x0], args.prec)[0]
    elif not isinstance(x0, Fraction) and iet.exact:
        raise InputError("--x0 must be rational when --lambda is")
    steps = args.steps if args.steps is not None else 10
    try:
        points, symbols = iet.orbit(x0, steps)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    rows = [[k, p, s] for k, (p, s) in enumerate(zip(points, symbols))]
    _emit(args, {"points": points, "itinerary": symbols}, ["k", "x", "interval"], rows)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--perm", help='permutation, e.g. "4 3 2 1"')
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--prec", type=int, default=DEFAULT_PRECISION, help="float-mode bits")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--steps", type=int)

    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--window", help="positive Rauzy word (default: shortest one)")
    probe.add_argument("--cocycle", choices=("zorich", "induced"), default="zorich")
    probe.add_argument("--return-cap", type=int, default=20)
    probe.add_argument("--delta")
    probe.add_argument("--offset", help="a point of the line J (rational)")
    probe.add_argument("--direction", help="direction of J (rational, non-negative)")

    p = argparse.ArgumentParser(prog="ietlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("class", parents=[common], help="Rauzy class listing")
    s.set_defaults(func=cmd_class)

    s = sub.add_parser("lyapunov", parents=[common], help="Lyapunov spectrum of the Zorich cocycle")
    s.set_defaults(func=cmd_lyapunov)

    s = sub.add_parser("scan", parents=[common], help="Veech-criterion scan over t")
    s.add_argument("--lambda", dest="lam")
    s.add_argument("--h")
    s.add_argument("--t-min")
    s.add_argument("--t-max")
    s.add_argument("--t-steps", type=int)
    s.add_argument("--t-random", type=int, help="draw this many uniform t in [t-min, t-max)")
    s.add_argument("--window")
    s.add_argument("--visits", type=int)
    s.add_argument("--step-cap", type=int, default=10**6)
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("exclude", parents=[common, probe], help="weak-stable exclusion probe")
    s.add_argument("--block", type=int, default=10, help="cocycle steps per block")
    s.add_argument("--blocks", type=int)
    s.add_argument("--samples", type=int)
    s.set_defaults(func=cmd_exclude)

    s = sub.add_parser("dim", parents=[common, probe], help="dimension bound from covering numbers")
    s.add_argument("--spectrum-steps", type=int, default=100_000)
    s.set_defaults(func=cmd_dim)

    s = sub.add_parser("induct", parents=[common], help="dump Rauzy or Zorich steps")
    s.add_argument("--lambda", dest="lam")
    s.add_argument("--mode", choices=("rauzy", "zorich"), default="rauzy")
    s.set_defaults(func=cmd_induct)

    s = sub.add_parser("orbit", parents=[common], help="orbit and itinerary of a point")
    s.add_argument("--lambda", dest="lam")
    s.add_argument("--x0")
    s.set_defaults(func=cmd_orbit)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ReducibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (PrecisionLoss, DivergenceGuard) as exc:
        print(f"error: numeric degradation: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except HaltOnTie as exc:
        print(f"error: tie: {exc}", file=sys.stderr)
        return EXIT_TIE


if __name__ == "__main__":
    sys.exit(main())
