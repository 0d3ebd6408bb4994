"""Command-line front end: ``ginibre-lab <subcommand> [options]``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__, adiabatic, kernels, ledger, matchings, overlaps, reproduce
from .errors import GinibreLabError
from .sampling import MomentSignature, mc_moments, sample_ginibre

PROG = "ginibre-lab"

KERNELS = ("r1", "o1", "d", "g", "k", "r2", "c2", "edge-r1", "edge-o1", "edge-c2", "phi")
OVERLAPS = ("r1", "o1", "o2", "r2", "c2", "edge-r1", "edge-o1")

DEFAULTS = {
    "sample": {"n": "8", "samples": 1, "eigenvalues": False},
    "moments": {"n": "128", "samples": 1000, "sig": ["(1,1);(1,1)"]},
    "matchings": {"sig": None, "max_r": None},
    "overlap": {"n": "128", "samples": 200, "r_grid": "0:1.2:0.1", "u_grid": "-3:3:0.5"},
    "kernel": {"n": "1024", "r_grid": "0:1.2:0.01", "u_grid": "-3:3:0.1", "z2": "0", "u2": "0"},
    "ledger": {"n": "256,1024,4096", "p": "0", "pieces": False},
    "adiabatic": {"n": "1024,4096,16384", "r_grid": "0.3:0.7:0.2", "form": "derived", "jump": False},
    "reproduce": {"level": "desk", "out": "reproduce_out", "strict": False},
}
COMMON_DEFAULTS = {"seed": 0, "format": "csv", "threads": 1, "no_timestamp": False}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# parsing helpers

def parse_grid(text: str) -> np.ndarray:
    """``a:b:step`` (inclusive of ``b`` when it lies on the lattice) or a comma list."""
    if ":" not in text:
        return np.array([float(v) for v in text.split(",")])
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid {text!r} must look like start:stop:step")
    a, b, step = (float(v) for v in parts)
    if step <= 0 or b < a:
        raise UsageError(f"grid {text!r} needs step > 0 and stop >= start")
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    return a + step * np.arange(count)


def parse_int_list(text) -> list[int]:
    try:
        return [int(v) for v in str(text).split(",")]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def parse_complex(text: str) -> complex:
    try:
        return complex(str(text).replace(" ", ""))
    except ValueError:
        raise UsageError(f"cannot parse complex number {text!r}") from None


def parse_cell(text: str) -> overlaps.OrbitCell:
    vals = [float(v) for v in text.split(",")]
    if len(vals) != 6:
        raise UsageError("a pair cell is 'r1lo,r1hi,r2lo,r2hi,dthlo,dthhi'")
    return overlaps.OrbitCell((vals[0], vals[1]), (vals[2], vals[3]), (vals[4], vals[5]))


def read_config(path: str) -> dict[str, list[str]]:
    """Flat ``key = value`` file; ``#`` starts a comment; repeated keys accumulate."""
    out: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.lstrip("-").replace("-", "_")
            if key == "N":
                key = "n"
            out.setdefault(key, []).append(value)
    return out


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output file (directory for reproduce); stdout when omitted")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--threads", type=int)
    p.add_argument("--no-timestamp", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description="Complex Ginibre ensemble numerics.")
    parser.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw matrices; print entries or eigenvalues")
    p.add_argument("--n", "--N", dest="n")
    p.add_argument("--samples", type=int)
    p.add_argument("--eigenvalues", action="store_true", default=None)
    _common(p)

    p = sub.add_parser("moments", help="Monte Carlo mixed moments against their limits")
    p.add_argument("--n", "--N", dest="n")
    p.add_argument("--sig", action="append", help='signature "(p1,..);(q1,..)", repeatable')
    p.add_argument("--samples", type=int)
    _common(p)

    p = sub.add_parser("matchings", help="constrained non-crossing matching counts")
    p.add_argument("--sig", action="append")
    p.add_argument("--max-r", type=int, help="tabulate all balanced spin circles up to this length")
    _common(p)

    p = sub.add_parser("overlap", help="Monte Carlo overlap and correlation histograms")
    p.add_argument("quantity", choices=OVERLAPS)
    p.add_argument("--n", "--N", dest="n")
    p.add_argument("--samples", type=int)
    p.add_argument("--r-grid", help="radial bin edges start:stop:step")
    p.add_argument("--u-grid", help="edge bin edges in u = sqrt(n)(1-|z|)")
    p.add_argument("--cell", action="append", help="pair cell r1lo,r1hi,r2lo,r2hi,dthlo,dthhi")
    _common(p)

    p = sub.add_parser("kernel", help="exact finite-N kernels and edge limits on a grid")
    p.add_argument("name", choices=KERNELS)
    p.add_argument("--n", "--N", dest="n")
    p.add_argument("--r-grid")
    p.add_argument("--u-grid")
    p.add_argument("--z2", help="second point for r2/c2")
    p.add_argument("--u2", help="second edge coordinate for edge-c2")
    p.add_argument("--p", help="unused for kernels; accepted for config sharing")
    _common(p)

    p = sub.add_parser("ledger", help="moment-constraint ledger rows and divergence fits")
    p.add_argument("--n", "--N", dest="n", help="comma-separated N values")
    p.add_argument("--p", help="comma-separated p values")
    p.add_argument("--pieces", action="store_true", default=None)
    _common(p)

    p = sub.add_parser("adiabatic", help="perturbation ratio, main-term factors and jump series")
    p.add_argument("--n", "--N", dest="n", help="comma-separated N values")
    p.add_argument("--r-grid")
    p.add_argument("--jump", action="store_true", default=None, help="also evaluate the jump series")
    p.add_argument("--form", choices=adiabatic.FORMS)
    _common(p)

    p = sub.add_parser("reproduce", help="compute every acceptance metric into a directory")
    p.add_argument("--level", choices=tuple(reproduce.LEVELS))
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.add_argument("--strict", action="store_true", default=None, help="exit 1 when a criterion fails")
    _common(p)
    return parser


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


VALUE_FLAGS = ("--r-grid", "--u-grid", "--z2", "--u2")


def join_values(argv: list[str]) -> list[str]:
    """Attach values such as ``-3:3:0.5`` or ``-0.2+0.1j`` to their flag so argparse does not read them as options."""
    out = []
    i = 0
    while i < len(argv):
        if argv[i] in VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def resolve(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    """Parse flags, then fill unset values from the config file, then from defaults."""
    argv = join_values(list(sys.argv[1:] if argv is None else argv))
    args = parser.parse_args(argv)
    sp = _subparser(parser, args.command)
    actions = {a.dest: a for a in sp._actions if a.dest not in ("help", "config")}
    if args.config:
        try:
            cfg = read_config(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        for key, values in cfg.items():
            if key not in actions or key == "command":
                raise UsageError(f"unknown config key {key!r} for '{args.command}'")
            if getattr(args, key) is not None:
                continue
            action = actions[key]
            if isinstance(action, argparse._StoreTrueAction):
                value = values[-1].lower() in ("1", "true", "yes", "on")
            elif isinstance(action, argparse._AppendAction):
                value = values
            else:
                value = values[-1]
                if action.type is not None:
                    try:
                        value = action.type(value)
                    except ValueError:
                        raise UsageError(f"bad value for {key}: {value!r}") from None
                if action.choices is not None and value not in action.choices:
                    raise UsageError(f"{key} must be one of {list(action.choices)}")
            setattr(args, key, value)
    for key, value in {**COMMON_DEFAULTS, **DEFAULTS.get(args.command, {})}.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    return args


# ---------------------------------------------------------------------------
# output

def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def header_meta(args: argparse.Namespace, extra: dict | None = None) -> dict:
    params = {k: v for k, v in sorted(vars(args).items())
              if k not in ("command", "config", "out", "format", "no_timestamp", "threads", "seed")}
    meta = {"program": PROG, "version": __version__, "command": args.command, "seed": args.seed,
            "params": params}
    if extra:
        meta.update(extra)
    if not args.no_timestamp:
        meta["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return meta


def render(meta: dict, columns: list[str], rows: list[list], fmt_name: str, trailer: dict | None = None) -> str:
    if fmt_name == "json":
        doc = {"meta": meta, "columns": columns, "rows": [[_jsonable(v) for v in row] for row in rows]}
        if trailer:
            doc.update(trailer)
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    head = " ".join(f"{k}={json.dumps(v, sort_keys=True, default=str)}" for k, v in meta.items())
    buf.write(f"# {head}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows([fmt(v) for v in row] for row in rows)
    if trailer:
        for key, value in trailer.items():
            buf.write(f"# {key}={json.dumps(value, sort_keys=True, default=float)}\n")
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _single_n(args) -> int:
    vals = parse_int_list(args.n)
    if len(vals) != 1:
        raise UsageError("this subcommand takes a single --n")
    return vals[0]


# ---------------------------------------------------------------------------
# subcommands

def cmd_sample(args):
    n = _single_n(args)
    rows = []
    for i in range(args.samples):
        a = sample_ginibre(n, args.seed, i)
        if args.eigenvalues:
            for k, lam in enumerate(np.linalg.eigvals(a.entries)):
                rows.append([i, k, lam.real, lam.imag])
        else:
            for (j, k), v in np.ndenumerate(a.entries):
                rows.append([i, j * n + k, v.real, v.imag])
    cols = ["sample", "eigen_index" if args.eigenvalues else "flat_index", "re", "im"]
    return cols, rows, None


def cmd_moments(args):
    n = _single_n(args)
    sigs = [MomentSignature.parse(s) for s in args.sig]
    ests = mc_moments(n, sigs, args.samples, args.seed, args.threads)
    rows = [[str(s), n, e.samples, e.mean.real, e.mean.imag, e.std_error, e.variance, matchings.limiting_moment(s)]
            for s, e in zip(sigs, ests)]
    return ["signature", "n", "samples", "mean_re", "mean_im", "std_error", "variance", "limit"], rows, None


def cmd_matchings(args):
    rows = []
    if args.max_r is not None:
        for R in range(0, args.max_r + 1, 2):
            for spins in matchings.balanced_spin_circles(R):
                count = matchings.count_constrained_ncm(spins)
                rows.append(["", _spins_text(spins), R, count, matchings.pinch_recursion_value(spins) if R else 1,
                             matchings.brute_force_count(spins) if R <= 12 else ""])
    for text in args.sig or []:
        sig = MomentSignature.parse(text)
        spins = matchings.spin_circle(sig)
        R = len(spins)
        count = matchings.count_constrained_ncm(spins)
        rows.append([str(sig), _spins_text(spins), R, count,
                     matchings.pinch_recursion_value(spins) if R else 1,
                     matchings.brute_force_count(spins) if R <= 12 else ""])
    if not rows:
        raise UsageError("matchings needs --sig or --max-r")
    return ["signature", "spins", "R", "count", "pinch_value", "brute_force"], rows, None


def _spins_text(spins) -> str:
    return "".join("+" if s > 0 else "-" for s in spins)


def cmd_overlap(args):
    n = _single_n(args)
    q = args.quantity
    extra = {}
    if q in ("r1", "o1", "edge-r1", "edge-o1"):
        if q == "r1":
            h = overlaps.estimate_r1(n, args.samples, args.seed, parse_grid(args.r_grid), args.threads)
        elif q == "o1":
            h = overlaps.estimate_o1(n, args.samples, args.seed, parse_grid(args.r_grid), args.threads)
        else:
            h = overlaps.edge_profile(n, args.samples, args.seed, parse_grid(args.u_grid), q[5:], args.threads)
        extra = {"discarded": h.discarded, "discard_fraction": h.discard_fraction}
        return ["lower", "upper", "density", "std_error", "count"], [list(r) for r in h.rows()], extra
    cells = [parse_cell(c) for c in args.cell] if args.cell else list(reproduce.O2_CELLS)
    if q == "o2":
        h = overlaps.estimate_o2(n, args.samples, args.seed, cells, args.threads)
        dens = h.density
        refs = [reproduce.cell_average_cm(c) for c in cells]
    elif q == "r2":
        h = overlaps.estimate_r2(n, args.samples, args.seed, cells, args.threads)
        dens = h.density
        refs = [complex("nan")] * len(cells)
    else:
        c2, h = overlaps.estimate_c2(n, args.samples, args.seed, cells, args.threads)
        dens = c2.astype(complex)
        refs = [complex("nan")] * len(cells)
    rows = []
    for c, cell in enumerate(cells):
        rows.append([c, *cell.r1, *cell.r2, *cell.dtheta, dens[c].real, dens[c].imag, h.std_error[c],
                     int(h.counts[c]), refs[c].real, refs[c].imag])
    extra = {"discarded": h.discarded, "discard_fraction": h.discard_fraction}
    cols = ["cell", "r1_lo", "r1_hi", "r2_lo", "r2_hi", "dtheta_lo", "dtheta_hi", "density_re", "density_im",
            "std_error", "pairs", "reference_re", "reference_im"]
    return cols, rows, extra


def cmd_kernel(args):
    N = _single_n(args)
    name = args.name
    rows = []
    if name in ("r1", "o1"):
        r = parse_grid(args.r_grid)
        vals = kernels.r1_exact(N, r) if name == "r1" else kernels.o1_exact(N, r)
        return ["r", name], [[a, b] for a, b in zip(r, np.atleast_1d(vals))], None
    if name in ("d", "g"):
        f_rec, f_closed = ((kernels.d_recursion, kernels.d_closed) if name == "d"
                           else (kernels.g_recursion, kernels.g_closed))
        for r in parse_grid(args.r_grid):
            a, b = f_rec(N, r), f_closed(N, r)
            rows.append([r, a.log_magnitude, b.log_magnitude])
        return ["r", "log_recursion", "log_closed"], rows, None
    if name == "k":
        for w in parse_grid(args.r_grid):
            k = kernels.k_kernel(N, w)
            rows.append([w, k.log_magnitude, k.log_magnitude - N * w])
        return ["w", "log_K", "log_weighted"], rows, None
    if name in ("r2", "c2"):
        z2 = parse_complex(args.z2)
        f = kernels.r2_exact if name == "r2" else kernels.c2_exact
        return ["r", name], [[r, f(N, complex(r), z2)] for r in parse_grid(args.r_grid)], None
    if name == "phi":
        x = parse_grid(args.u_grid)
        return ["x", "phi"], [[a, b] for a, b in zip(x, kernels.phi(x))], None
    u = parse_grid(args.u_grid)
    if name == "edge-r1":
        exact = math.pi * kernels.r1_exact(N, 1.0 - u / math.sqrt(N))
        return ["u", "pi_edge_r1", "pi_r1_exact"], [[a, math.pi * kernels.edge_r1(a), b] for a, b in zip(u, exact)], None
    if name == "edge-o1":
        exact = kernels.o1_exact(N, 1.0 - u / math.sqrt(N))
        return ["u", "edge_o1", "o1_exact"], [[a, kernels.edge_o1(a, N), b] for a, b in zip(u, exact)], None
    u2 = parse_complex(args.u2)
    for a in u:
        z1, z2 = 1.0 - a / math.sqrt(N), 1.0 - u2 / math.sqrt(N)
        rows.append([a, kernels.edge_c2(a, u2), kernels.edge_c2_kernel(a, u2), kernels.c2_exact(N, z1, z2)])
    return ["u1", "edge_c2_literal", "edge_c2_kernel", "c2_exact"], rows, None


def cmd_ledger(args):
    Ns = parse_int_list(args.n)
    ps = parse_int_list(args.p)
    if len(set(Ns)) >= 3:
        rows, fits = ledger.ledger_report(ps, Ns, pieces=bool(args.pieces), threads=args.threads)
    else:
        rows = [ledger.ledger_row(N, p, bool(args.pieces)) for p in ps for N in Ns]
        fits = []
    cols = ["N", "p", "o1_moment_exact", "o1_asymptote", "o2_bulk_quadrature", "res1", "res2", "quadrature_error"]
    piece_names = ["k0_tail", "k2", "k4"] if args.pieces else []
    out = [[r.N, r.p, r.o1_moment_exact, r.o1_asymptote, r.o2_bulk_quadrature, r.res1, r.res2, r.quadrature_error]
           + [r.pieces[k] for k in piece_names] for r in rows]
    trailer = {f"fit_p{f.p}": {"a": f.a, "b": f.b, "c": f.c, "residual_norm": f.residual_norm} for f in fits}
    return cols + piece_names, out, trailer or None


def cmd_adiabatic(args):
    Ns = parse_int_list(args.n)
    rows = []
    for N in Ns:
        for r in parse_grid(args.r_grid):
            res = adiabatic.adiabatic_result(N, float(r))
            f = res.factors
            rows.append([N, r, res.perturbation_ratio, res.exact_product.log_magnitude, res.main_term.log_magnitude,
                         f["lambda_product"], f["w0_e2"], f["e2_v"], f["inner_products"],
                         adiabatic.lyapunov_exponent(N, float(r))])
    cols = ["N", "r", "P_N", "log_exact", "log_main", "log_lambda_product", "log_w0_e2", "log_e2_v",
            "log_inner_products", "lyapunov"]
    trailer = None
    if args.jump:
        js = adiabatic.jump_series(2, args.form)
        trailer = {"jump_series": {"form": js.form, "value": js.value, "I": list(js.terms), "errors": list(js.errors),
                                   "target": adiabatic.SQRT_2PI_OVER_E}}
    return cols, rows, trailer


def cmd_reproduce(args):
    only = parse_int_list(args.only) if args.only else None
    if only and any(k not in reproduce.CRITERIA for k in only):
        raise UsageError(f"criteria are numbered 1..{len(reproduce.CRITERIA)}")
    os.makedirs(args.out, exist_ok=True)
    results = reproduce.run(args.level, args.seed, args.threads, only,
                            progress=lambda k: print(f"[reproduce] criterion {k}", file=sys.stderr, flush=True))
    meta = header_meta(args)
    doc = {"meta": meta, "criteria": results}
    with open(os.path.join(args.out, "criteria.json"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(reproduce.to_json(doc) + "\n")
    rows = [list(r) for r in reproduce.summary_rows(results)]
    with open(os.path.join(args.out, "summary.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render(meta, ["criterion", "metric", "value"], rows, "csv"))
    failed = []
    for k, res in results.items():
        status = "PASS" if res["passed"] else "FAIL"
        if not res["passed"]:
            failed.append(k)
        print(f"criterion {k}: {status}")
    return 1 if (args.strict and failed) else 0


COMMANDS = {"sample": cmd_sample, "moments": cmd_moments, "matchings": cmd_matchings, "overlap": cmd_overlap,
            "kernel": cmd_kernel, "ledger": cmd_ledger, "adiabatic": cmd_adiabatic}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = resolve(parser, argv)
        if args.command == "reproduce":
            return cmd_reproduce(args)
        cols, rows, trailer = COMMANDS[args.command](args)
        meta = header_meta(args)
        emit(render(meta, cols, rows, args.format, trailer), args.out)
        return 0
    except (UsageError, ValueError) as exc:
        print(f"{PROG}: usage error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, GinibreLabError, np.linalg.LinAlgError) as exc:
        print(f"{PROG}: numerical error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
