"""Command-line driver: ``qeq <subcommand> [flags]``.

JSON goes to stdout for single-object results, CSV for row streams.  The
derived experiment parameters are echoed to stderr before any work starts,
and ``--manifest PATH`` writes a run manifest next to the output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from fractions import Fraction
from importlib import resources

import numpy as np

from . import __version__
from .bump import build_bump
from .counting import (
    QuadraticForm,
    equidist_histogram,
    gamma1_gamma3,
    gamma2,
    gamma_count,
    hl_density,
)
from .diophantine import THETA_MAX, convergents
from .errors import InvalidInput, PrecisionBudgetExceeded, QeqError, ScaleGuardExceeded
from .expsums import MinSumParams, direct_lambda_sum, exp_weight, min_sum_G, vaughan_decompose
from .precision import DEFAULT_BITS, FixedFrac, as_fixed, parse_spec, realize

EXIT_INVALID, EXIT_PRECISION, EXIT_GUARD = 1, 2, 3


class UsageError(InvalidInput):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --------------------------------------------------------------------------
# config files


def load_config(path) -> dict[str, str]:
    """Read ``key = value`` lines; ``#`` starts a comment.  Keys use ``_`` or ``-`` interchangeably."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip().replace("-", "_"), value.strip()
            if not sep or not key or not value:
                raise InvalidInput(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            if key in out:
                raise InvalidInput(f"{path}:{lineno}: duplicate key {key!r}")
            out[key] = value
    return out


# --------------------------------------------------------------------------
# argument helpers


def _real(text: str):
    """An exact real: a spec (``sqrt:2``, ``phi``, ...) or a decimal/fraction literal."""
    text = str(text).strip()
    if text == "phi" or ":" in text:
        return parse_spec(text)
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise InvalidInput(f"cannot read {text!r} as a real or irrational spec") from None


def _fixed(value, bits: int) -> FixedFrac:
    return as_fixed(value, bits)


def _int(text) -> int:
    """Integers, also written as ``1e6`` or ``10**6``."""
    text = str(text).strip()
    try:
        return int(text)
    except ValueError:
        pass
    if "**" in text:
        base, _, exp = text.partition("**")
        return int(base) ** int(exp)
    val = float(text)
    if not val.is_integer():
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    return int(val)


def _str(value) -> str:
    return str(value)


def _complex(z: complex) -> list[float]:
    return [z.real, z.imag]


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def load_schema(name: str) -> dict:
    """The checked-in JSON schema for a subcommand's output (or ``"manifest"``)."""
    return json.loads(resources.files("qeq").joinpath("schemas", f"{name}.json").read_text(encoding="utf-8"))


def dump_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _derived(x: float, theta: float, eta: float) -> dict:
    delta = x ** (-theta)
    return {"delta": delta, "K": math.floor(math.log(x) ** 2 / delta), "y": x ** (1 / 6 - 2 * theta - eta / 2)}


# --------------------------------------------------------------------------
# subcommands; each returns (text, params)


def cmd_convergents(a):
    spec = parse_spec(a.alpha)
    lo_val = realize(spec, a.precision)
    exact = spec.integer_part() + lo_val.as_fraction()
    rows = []
    for c in convergents(spec, a.qmax, a.precision):
        rows.append((c.a, c.q, repr(float(abs(exact - Fraction(c.a, c.q)) * c.q * c.q))))
    return dump_csv(("a", "q", "scaled_error"), rows), {}


def cmd_bump(a):
    chi = build_bump(a.delta, a.x, a.order)
    out = {
        "delta": chi.delta,
        "r": chi.r,
        "Delta": chi.Delta,
        "K": chi.K,
        "tail_bound": chi.tail(),
        "max_abs_coeff": chi.max_abs_coeff(),
    }
    if a.check_tail:
        ks = np.arange(chi.K + 1, 10 * chi.K + 1)
        numeric = 2 * math.fsum(np.abs(chi.coeffs(ks)))
        out["numeric_tail"] = numeric
        out["tail_ok"] = bool(numeric <= out["tail_bound"] <= 1 / a.x)
    return dump_json(out), {"K": chi.K, "r": chi.r}


def cmd_expsum(a):
    M = a.M if a.M is not None else math.ceil(a.x ** 0.25)
    J = a.J if a.J is not None else math.ceil(a.x ** 0.25)
    spec = parse_spec(a.alpha)
    convs = convergents(spec, math.isqrt(a.x), a.precision)
    idx = len(convs) - 1 if a.q_index is None else a.q_index
    if not -len(convs) <= idx < len(convs):
        raise InvalidInput(f"--q-index {idx} out of range; {len(convs)} convergents with q <= sqrt(x)")
    q = convs[idx].q
    p = MinSumParams(a.x, M, J, a.mu, a.zeta, a.power)
    rep = min_sum_G(p, _fixed(spec, a.precision), q, a.threads)
    out = {
        "x": a.x, "M": M, "J": J, "mu": a.mu, "zeta": a.zeta, "power": a.power, "q": q,
        "lhs": rep.lhs, "rhs": rep.rhs, "ratio": rep.ratio, "terms": list(rep.terms),
    }
    return dump_json(out), {"M": M, "J": J, "q": q}


def cmd_vaughan(a):
    U = a.U if a.U is not None else math.ceil(a.x ** (1 / 3))
    V = a.V if a.V is not None else math.ceil(a.x ** (1 / 3))
    w = exp_weight(_fixed(_real(a.alpha), a.precision))
    parts = vaughan_decompose(a.x, U, V, w, a.threads)
    direct = direct_lambda_sum(a.x, w)
    total = parts.total
    res = abs(total - direct)
    out = {
        "x": a.x, "U": U, "V": V,
        "smalls": _complex(parts.smalls), "typeI": _complex(parts.typeI),
        "typeI_log": _complex(parts.typeI_log), "typeII": _complex(parts.typeII),
        "total": _complex(total), "direct": _complex(direct),
        "residual": res, "relative_residual": res / abs(direct) if direct else res,
    }
    return dump_json(out), {"U": U, "V": V}


def cmd_gamma(a):
    if not 0 < a.theta < THETA_MAX:
        raise InvalidInput(f"theta must lie in (0, 1/108), got {a.theta}")
    der = _derived(a.x, a.theta, a.eta)
    y = a.y if a.y is not None else der["y"]
    alpha, beta = _fixed(_real(a.alpha), a.precision), _fixed(_real(a.beta), a.precision)
    rep = gamma_count(a.x, alpha, beta, a.theta, a.eta, a.max_witnesses, a.sieve_cache)
    g2 = gamma2(a.x, y)
    out = {
        "x": a.x, "y": y, "theta": a.theta, "eta": a.eta, "delta": der["delta"],
        "gamma": rep.gamma, "gamma2": g2.gamma2,
        "main_term": g2.main_term, "pnt_prediction": g2.pnt_prediction,
        "ratio_main": g2.ratio_main, "ratio_pnt": g2.ratio_pnt,
        "witnesses": [{"p": w.p, "a": w.a, "r": w.r} for w in rep.witnesses],
        "gamma1": None, "gamma3": None, "gamma3_raw": None, "T": None, "K": None,
        "tail_bound": None, "identity_residual": None, "residual_bound": None,
    }
    if a.fourier:
        f = gamma1_gamma3(a.x, y, a.theta, alpha, beta, a.threads)
        out.update(
            gamma1=f.gamma1, gamma3=f.gamma3, gamma3_raw=f.gamma3_raw, T=f.T, K=f.K,
            tail_bound=f.tail, identity_residual=f.identity_residual, residual_bound=f.residual_bound,
        )
    return dump_json(out), {**der, "y": y}


def cmd_hl(a):
    rep = hl_density(QuadraticForm(a.a, a.b, a.c), a.x, a.pcut)
    out = {
        "a": rep.a, "b": rep.b, "c": rep.c, "D": rep.D, "x": rep.x, "p_cut": rep.p_cut,
        "empirical": rep.empirical, "sigma": rep.sigma, "predicted": float(rep.predicted),
        "predicted_closed": rep.predicted_closed, "sides": rep.sides, "ratio": float(rep.ratio),
    }
    return dump_json(out), {"D": rep.D}


def cmd_equidist(a):
    alpha, beta = _fixed(_real(a.alpha), a.precision), _fixed(_real(a.beta), a.precision)
    h = equidist_histogram(a.x, alpha, beta, a.bins, a.sieve_cache)
    rows = []
    for i, ((lo, hi), c) in enumerate(zip(h.edges(), h.counts)):
        rows.append((i, repr(lo), repr(hi), c))
    print(f"total={h.total} discrepancy={h.discrepancy!r} max_bin_deviation={h.max_bin_deviation!r}", file=sys.stderr)
    stats = {"total": h.total, "discrepancy": h.discrepancy, "max_bin_deviation": h.max_bin_deviation}
    return dump_csv(("bin", "lo", "hi", "count"), rows), stats


# --------------------------------------------------------------------------
# parser


def _common() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    g = p.add_argument_group("common")
    g.add_argument("--precision", type=int, default=None, help=f"fractional bits (default {DEFAULT_BITS}, env QEQ_PRECISION)")
    g.add_argument("--threads", type=int, default=None, help="partition count (default 1, env QEQ_THREADS)")
    g.add_argument("--config", default=None, help="key = value file; flags override it")
    g.add_argument("--sieve-cache", default=None, help="prime bitset cache file")
    g.add_argument("--manifest", default=None, help="write a run manifest to this path")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qeq", description="Desk-scale experiments on primes p = a r^2 + 1 near a Beatty-type target.")
    parser.add_argument("--version", action="version", version=f"qeq {__version__}")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND", parser_class=_Parser)
    common = [_common()]

    p = sub.add_parser("convergents", parents=common, help="continued-fraction convergents as CSV")
    p.add_argument("--alpha", type=_str)
    p.add_argument("--qmax", type=_int)
    p.set_defaults(func=cmd_convergents, required=("alpha", "qmax"))

    p = sub.add_parser("bump", parents=common, help="bump-function parameters as JSON")
    p.add_argument("--delta", type=float)
    p.add_argument("--x", type=float)
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--check-tail", action="store_true")
    p.set_defaults(func=cmd_bump, required=("delta", "x"))

    p = sub.add_parser("expsum", parents=common, help="min-sum envelope report as JSON")
    p.add_argument("--power", type=int, choices=(2, 4), default=4)
    p.add_argument("--x", type=_int)
    p.add_argument("--M", type=_int, default=None)
    p.add_argument("--J", type=_int, default=None)
    p.add_argument("--mu", type=int, default=2)
    p.add_argument("--zeta", type=int, default=2)
    p.add_argument("--alpha", type=_str)
    p.add_argument("--q-index", type=int, default=None, help="index into convergents with q <= sqrt(x); default the last")
    p.set_defaults(func=cmd_expsum, required=("x", "alpha"))

    p = sub.add_parser("vaughan", parents=common, help="Vaughan decomposition of sum Lambda(n) e(alpha n)")
    p.add_argument("--x", type=_int)
    p.add_argument("--alpha", type=_str)
    p.add_argument("--U", type=_int, default=None)
    p.add_argument("--V", type=_int, default=None)
    p.set_defaults(func=cmd_vaughan, required=("x", "alpha"))

    p = sub.add_parser("gamma", parents=common, help="counts Gamma, Gamma1, Gamma2, Gamma3 as JSON")
    p.add_argument("--x", type=_int)
    p.add_argument("--theta", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--alpha", type=_str)
    p.add_argument("--beta", type=_str, default="0")
    p.add_argument("--y", type=float, default=None, help="default x^(1/6 - 2 theta - eta/2)")
    p.add_argument("--max-witnesses", type=int, default=100)
    p.add_argument("--no-fourier", dest="fourier", action="store_false", help="skip Gamma1 and Gamma3")
    p.set_defaults(func=cmd_gamma, required=("x", "theta", "eta", "alpha"))

    p = sub.add_parser("hl", parents=common, help="Hardy-Littlewood density of a quadratic form as JSON")
    for name in ("a", "b", "c"):
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--x", type=_int)
    p.add_argument("--pcut", type=_int, default=10**5)
    p.set_defaults(func=cmd_hl, required=("a", "b", "c", "x"))

    p = sub.add_parser("equidist", parents=common, help="histogram of {alpha p + beta} as CSV")
    p.add_argument("--x", type=_int)
    p.add_argument("--alpha", type=_str)
    p.add_argument("--beta", type=_str, default="0")
    p.add_argument("--bins", type=int, default=20)
    p.set_defaults(func=cmd_equidist, required=("x", "alpha"))
    return parser


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def parse_args(argv, env=None):
    """Resolve arguments with precedence defaults < config file < environment < flags."""
    env = os.environ if env is None else env
    parser = build_parser()
    first = parser.parse_args(argv)
    if first.subcommand is None:
        raise UsageError("qeq: a subcommand is required (see --help)")
    sp = _subparser(parser, first.subcommand)
    known = {a.dest for a in sp._actions} - {"help", "config"}
    overrides = {}
    if first.config:
        for key, value in load_config(first.config).items():
            if key not in known:
                raise InvalidInput(f"{first.config}: unknown key {key!r} for {first.subcommand}")
            overrides[key] = value
    for key, var in (("precision", "QEQ_PRECISION"), ("threads", "QEQ_THREADS")):
        if env.get(var):
            overrides[key] = env[var]
    if overrides:
        # string defaults go through each action's type conversion on re-parse;
        # switches need their booleans spelled out
        for action in sp._actions:
            if action.dest in overrides and isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                overrides[action.dest] = overrides[action.dest].lower() in ("1", "true", "yes", "on")
        sp.set_defaults(**overrides)
        args = parser.parse_args(argv)
    else:
        args = first
    if args.precision is None:
        args.precision = DEFAULT_BITS
    if args.threads is None:
        args.threads = 1
    if args.threads < 1:
        raise InvalidInput("--threads must be >= 1")
    missing = [k for k in args.required if getattr(args, k) is None]
    if missing:
        raise UsageError(f"qeq {args.subcommand}: missing " + ", ".join("--" + m.replace("_", "-") for m in missing))
    return args


def _params(args) -> dict:
    skip = {"func", "required", "subcommand", "manifest", "config", "threads", "precision"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _echo_derived(args) -> None:
    if args.subcommand == "gamma":
        d = _derived(args.x, args.theta, args.eta)
        y = args.y if args.y is not None else d["y"]
        print(f"delta={d['delta']!r} K={d['K']} y={y!r}", file=sys.stderr)


def manifest_argv(manifest: dict) -> list[str]:
    """Argument vector that reproduces the run recorded in ``manifest``."""
    argv = [manifest["subcommand"]]
    for key, value in manifest["arguments"].items():
        flag = "--" + key.replace("_", "-")
        if value is None:
            continue
        if isinstance(value, bool):
            if key == "fourier":
                if not value:
                    argv.append("--no-fourier")
            elif value:
                argv.append(flag)
            continue
        argv += [flag, str(value)]
    return argv + ["--precision", str(manifest["precision"]), "--threads", str(manifest["threads"])]


def run(argv, stdout=None, env=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    try:
        args = parse_args(argv, env)
        _echo_derived(args)
        t0 = time.perf_counter()
        text, derived = args.func(args)
        wall = time.perf_counter() - t0
        stdout.write(text)
        if args.manifest:
            manifest = {
                "subcommand": args.subcommand,
                "arguments": _params(args),
                "derived": derived,
                "precision": args.precision,
                "threads": args.threads,
                "version": __version__,
                "wall_time": wall,
            }
            with open(args.manifest, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(dump_json(manifest))
        return 0
    except SystemExit as exc:
        # --help and --version
        return exc.code if isinstance(exc.code, int) else 0
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except PrecisionBudgetExceeded as exc:
        print(f"precision budget exceeded: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except ScaleGuardExceeded as exc:
        print(f"scale guard exceeded: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (QeqError, ValueError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main(argv=None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
