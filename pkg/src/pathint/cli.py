"""Command-line entry point: ``pathint <subcommand> ...``.

Series are read and written as ``t,value`` CSV, structured results as
JSON carrying a schema version.  Exit codes: 0 success, 1 invalid input or
usage, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .convexbv import BVFunction, RadonMeasure
from .errors import NumericError, PathintError, ValidationError
from .fracops import (Reconstruction, besov_norm_w1, besov_norm_w2, frac_deriv_left,
                      frac_deriv_right, grr_check)
from .glsint import GlsConfig, gls_integral, rs_sum
from .harness import (SCHEMA_VERSION, dumps_strict, ito_convex_residual, ito_smooth_residual,
                      ito_tanaka_residual)
from .paths import ProcessSpec, generate, read_csv, write_csv
from .variation import (TaggedPartition, dyadic_partitions, p_variation, quadratic_variation,
                        sup_p_variation)

SEED_ENV = "PATHINT_SEED"

_SMOOTH_FUNCTIONS = {
    "square": (lambda x: x**2, lambda x: 2 * x),
    "cube": (lambda x: x**3, lambda x: 3 * x**2),
    "sin": (np.sin, np.cos),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _range(text: str) -> list[int]:
    """``"8..11"`` -> [8, 9, 10, 11]; ``"4,6"`` -> [4, 6]; ``"12"`` -> [12]."""
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split("..", 1))
            return list(range(lo, hi + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad level range {text!r}") from None


def _emit_json(obj: dict[str, Any], dest: str | None) -> None:
    obj = {"schema_version": SCHEMA_VERSION, **obj}
    text = dumps_strict(obj)
    if dest:
        Path(dest).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _load(path: str):
    if not Path(path).is_file():
        raise ValidationError(f"no such input file: {path}")
    return read_csv(path)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_simulate(a: argparse.Namespace) -> None:
    if a.spec:
        spec = ProcessSpec.from_json(Path(a.spec).read_text())
        spec = spec.with_grid(n=a.n or spec.n, seed=a.seed)
    else:
        n = a.n or 1025
        if a.kind == "fbm":
            spec = ProcessSpec.fbm(a.hurst, a.T, n, a.seed)
        elif a.kind == "brownian":
            spec = ProcessSpec.brownian(a.T, n, a.seed)
        else:
            spec = ProcessSpec.compound_poisson(a.rate, T=a.T, n=n, seed=a.seed)
    path = generate(spec)
    write_csv(path, a.out if a.out else sys.stdout)


def _cmd_frac_deriv(a: argparse.Namespace) -> None:
    f = _load(a.input)
    if a.side == "left":
        out = frac_deriv_left(f, a.beta, a.recon)
    else:
        out = frac_deriv_right(f, a.beta, a.t, a.recon)
    write_csv(out, a.output if a.output else sys.stdout)


def _cmd_besov_norm(a: argparse.Namespace) -> None:
    f = _load(a.input)
    fn = besov_norm_w1 if a.which == "w1" else besov_norm_w2
    _emit_json({"which": a.which, "beta": a.beta, "recon": Reconstruction.parse(a.recon).value,
                "norm": fn(f, a.beta, a.recon)}, a.json)


def _cmd_pvar(a: argparse.Namespace) -> None:
    f = _load(a.input)
    out: dict[str, Any] = {"p": a.p}
    if a.sup:
        out.update(sup_p_variation(f, a.p, cap=a.cap, preselect=a.preselect).to_dict())
    else:
        out["along_partition"] = p_variation(f, TaggedPartition.full(f), a.p)
    if a.dyadic_levels:
        parts = dyadic_partitions(f, a.dyadic_levels)
        out["dyadic"] = {str(lv): p_variation(f, part, a.p) for lv, part in zip(a.dyadic_levels, parts)}
        if a.p == 2:
            out["quadratic_variation"] = quadratic_variation(f, parts)
    _emit_json(out, a.json)


def _cmd_gls(a: argparse.Namespace) -> None:
    f, g = _load(a.f), _load(a.g)
    cfg = GlsConfig(a.beta, a.recon_f, a.recon_g, a.holder_f, a.holder_g)
    res = gls_integral(f, g, cfg, a.t, bound=not a.no_bound)
    _emit_json(res.to_dict(), a.json)


def _parse_partition(text: str) -> tuple[str, int | None]:
    if text == "full":
        return "full", None
    kind, _, num = text.partition(":")
    if kind not in ("uniform", "dyadic") or not num.isdigit():
        raise ValidationError(f"partition must be full, uniform:N or dyadic:L, got {text!r}")
    return kind, int(num)


def _cmd_rs_sum(a: argparse.Namespace) -> None:
    f, g = _load(a.f), _load(a.g)
    kind, num = _parse_partition(a.partition)
    if kind == "full":
        part = TaggedPartition.full(g, a.tags)
    elif kind == "uniform":
        part = TaggedPartition.uniform(g, num, a.tags)  # type: ignore[arg-type]
    else:
        part = TaggedPartition.dyadic(g, num, a.tags)  # type: ignore[arg-type]
    _emit_json({"value": rs_sum(f, g, part), "tags": a.tags, "partition": a.partition,
                "intervals": part.size}, a.json)


def _cmd_verify_ito(a: argparse.Namespace) -> None:
    if a.spec:
        spec = ProcessSpec.from_json(Path(a.spec).read_text())
    elif a.kind == "tanaka":
        spec = ProcessSpec.mixed([ProcessSpec.fbm(0.75), ProcessSpec.brownian()])
    else:
        spec = ProcessSpec.fbm(0.75)
    seeds = [a.seed + k for k in range(a.seeds)]
    cfg = GlsConfig(a.beta) if a.beta is not None else None
    if a.kind == "smooth":
        f, fp = _SMOOTH_FUNCTIONS[a.function]
        rep = ito_smooth_residual(f, fp, spec, cfg, a.grids, seeds, allow_rough=a.allow_rough)
    elif a.kind == "convex":
        rep = ito_convex_residual(BVFunction.indicator(a.level), spec, cfg, levels=a.grids, seeds=seeds)
    else:
        rep = ito_tanaka_residual(BVFunction.indicator(a.level), RadonMeasure.atom(a.level), spec,
                                  levels=a.grids, seeds=seeds)
    text = rep.to_json()
    if a.out:
        Path(a.out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _cmd_grr_check(a: argparse.Namespace) -> None:
    f = _load(a.input)
    lhs, rhs = grr_check(f, a.p, a.alpha)
    _emit_json({"p": a.p, "alpha": a.alpha, "lhs_max_ratio": lhs, "rhs_integral": rhs,
                "constant_lower_bound": lhs / rhs if rhs > 0 else 0.0}, a.json)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pathint", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=None,
                   help="cap on worker threads used by compiled kernels")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def seeded(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--seed", type=int, default=None,
                        help=f"RNG seed (default: ${SEED_ENV} or 0)")

    s = sub.add_parser("simulate", help="simulate a path and write it as CSV")
    s.add_argument("--kind", choices=("fbm", "brownian", "compound_poisson"), default="fbm",
                   help="process kind (ignored with --spec)")
    s.add_argument("--hurst", type=float, default=0.75, help="Hurst index for fbm")
    s.add_argument("--rate", type=float, default=1.0, help="jump rate for compound_poisson")
    s.add_argument("--T", type=float, default=1.0, help="time horizon")
    s.add_argument("--n", type=int, default=None, help="number of grid points (default 1025)")
    s.add_argument("--spec", help="process spec JSON file, overrides --kind")
    s.add_argument("--out", help="output CSV (default: stdout)")
    seeded(s)
    s.set_defaults(func=_cmd_simulate)

    s = sub.add_parser("frac-deriv", help="left or right fractional derivative of a CSV series")
    s.add_argument("--input", required=True, help="input CSV with header t,value")
    s.add_argument("--beta", type=float, required=True, help="order in (0, 1)")
    s.add_argument("--side", choices=("left", "right"), default="left",
                   help="left: D^beta_{0+} f; right: D^{1-beta}_{t-} f_{t-}")
    s.add_argument("--recon", choices=("linear", "const"), default="linear",
                   help="reconstruction between samples")
    s.add_argument("--t", type=float, default=None, help="right endpoint for --side right")
    s.add_argument("--output", help="output CSV (default: stdout)")
    s.set_defaults(func=_cmd_frac_deriv)

    s = sub.add_parser("besov-norm", help="fractional Besov norm of a CSV series")
    s.add_argument("--input", required=True, help="input CSV with header t,value")
    s.add_argument("--which", choices=("w1", "w2"), default="w2", help="norm type")
    s.add_argument("--beta", type=float, required=True, help="order in (0, 1)")
    s.add_argument("--recon", choices=("linear", "const"), default="linear",
                   help="reconstruction between samples")
    s.add_argument("--json", help="output JSON (default: stdout)")
    s.set_defaults(func=_cmd_besov_norm)

    s = sub.add_parser("pvar", help="p-variation along the grid or its supremum")
    s.add_argument("--input", required=True, help="input CSV with header t,value")
    s.add_argument("--p", type=float, required=True, help="exponent p >= 1")
    s.add_argument("--sup", action="store_true", help="also compute the supremum over sub-partitions")
    s.add_argument("--cap", type=int, default=1 << 15, help="largest path length for the O(n^2) DP")
    s.add_argument("--preselect", action="store_true",
                   help="reduce to turning points before the DP (exact for p >= 1)")
    s.add_argument("--dyadic-levels", type=_range, default=None,
                   help="dyadic levels, e.g. 4..12 or 4,6,8")
    s.add_argument("--json", help="output JSON (default: stdout)")
    s.set_defaults(func=_cmd_pvar)

    s = sub.add_parser("gls", help="generalized Lebesgue-Stieltjes integral of f against g")
    s.add_argument("--f", required=True, help="integrand CSV")
    s.add_argument("--g", required=True, help="integrator CSV on the same grid")
    s.add_argument("--beta", type=float, default=None,
                   help="order; defaults to the window midpoint when both Hölder estimates are given")
    s.add_argument("--t", type=float, default=None, help="upper limit (grid point, default T)")
    s.add_argument("--recon-f", choices=("linear", "const"), default="linear",
                   help="integrand reconstruction")
    s.add_argument("--recon-g", choices=("linear", "const"), default="linear",
                   help="integrator reconstruction")
    s.add_argument("--holder-f", type=float, default=None, help="Hölder estimate driving the integrand")
    s.add_argument("--holder-g", type=float, default=None, help="Hölder estimate of the integrator")
    s.add_argument("--no-bound", action="store_true", help="skip the a-priori bound")
    s.add_argument("--json", help="output JSON (default: stdout)")
    s.set_defaults(func=_cmd_gls)

    s = sub.add_parser("rs-sum", help="Riemann-Stieltjes sum along a tagged partition")
    s.add_argument("--f", required=True, help="integrand CSV")
    s.add_argument("--g", required=True, help="integrator CSV on the same grid")
    s.add_argument("--tags", choices=("forward", "backward", "midpoint"), default="forward",
                   help="tag rule inside each interval")
    s.add_argument("--partition", default="full", help="full, uniform:N (N intervals) or dyadic:L")
    s.add_argument("--json", help="output JSON (default: stdout)")
    s.set_defaults(func=_cmd_rs_sum)

    s = sub.add_parser("verify-ito", help="Itô-formula verification experiment")
    s.add_argument("--kind", choices=("smooth", "convex", "tanaka"), required=True,
                   help="which formula to check")
    s.add_argument("--spec", help="process spec JSON (default: fbm(0.75), or fbm+brownian for tanaka)")
    s.add_argument("--grids", type=_range, default=[8, 10, 12, 14],
                   help="dyadic levels, e.g. 8..14 or 8,10,12,14")
    s.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    s.add_argument("--function", choices=tuple(_SMOOTH_FUNCTIONS), default="square",
                   help="f for --kind smooth")
    s.add_argument("--level", type=float, default=0.0, help="kink location a of f(x)=(x-a)^+")
    s.add_argument("--beta", type=float, default=None, help="gLS order (default: window midpoint)")
    s.add_argument("--allow-rough", action="store_true",
                   help="smooth kind: allow paths with nonzero quadratic variation")
    s.add_argument("--out", help="output JSON report (default: stdout)")
    seeded(s)
    s.set_defaults(func=_cmd_verify_ito)

    s = sub.add_parser("grr-check", help="both sides of the Garsia-Rodemich-Rumsey inequality")
    s.add_argument("--input", required=True, help="input CSV with header t,value")
    s.add_argument("--p", type=float, required=True, help="exponent p >= 1")
    s.add_argument("--alpha", type=float, required=True, help="Hölder order with alpha * p > 1")
    s.add_argument("--json", help="output JSON (default: stdout)")
    s.set_defaults(func=_cmd_grr_check)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        if args.threads is not None:
            if args.threads < 1:
                raise ValidationError("--threads must be positive")
            import numba
            numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
        # overflow surfaces as a NumericError from the finiteness checks
        with np.errstate(all="ignore"):
            args.func(args)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"error: {type(exc).__name__}: {exc}".replace("\n", " "), file=sys.stderr)
        return 2
    except (PathintError, ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}".replace("\n", " "), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
