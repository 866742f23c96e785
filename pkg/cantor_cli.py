"""
Cantor CLI - Construct Cantor sets and evaluate staircases, valuations, measures and
scale-invariant derivatives. Tables go to standard output as CSV (or JSON records).

Usage:
    python cantor_cli.py construct --p 2 --q 1 --r 3 --level 2      # Retained + gap intervals
    python cantor_cli.py staircase --x 1/3                           # f_c(1/3) = 1/2
    python cantor_cli.py staircase --samples 9                       # Plot-ready (x, y) grid
    python cantor_cli.py staircase --inverse 1/2                     # Preimage of 1/2
    python cantor_cli.py valuation --epsilon 1/9 --x 1/27            # v = 1/2
    python cantor_cli.py valuation --epsilon 1/3 --axioms 1000       # Ultrametric axiom check
    python cantor_cli.py zeroset --level 2                           # Valued zero-set 0_2
    python cantor_cli.py norm --epsilon 1/9 --x 0                    # ||x|| = 1/4
    python cantor_cli.py neighbors --x 1/2 --exponent 0.1            # Multiplicative neighbours
    python cantor_cli.py neighbors --x 1/3 --k 4                     # Neighbour limit construction
    python cantor_cli.py measure --level 8                           # Convergence table
    python cantor_cli.py derivative --function power:3 --x 0.2       # d log f / d log x
    python cantor_cli.py derivative --epsilon 1/3 --x 1/9            # dv / d log x^-1
    python cantor_cli.py mvt --function logsq --x0 1/2 --gap 0.01    # Mean-value remainder
    python cantor_cli.py integral --epsilon 1/1000 --v 1/2           # 1 - eps + v

Common flags: --config FILE.json, --precision N, --format csv|json, --p/--q/--r/--pattern.
Exit codes: 0 success, 2 domain/validation error, 3 resource cap.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import mpmath
import pandas as pd
from pydantic import BaseModel, Field, ValidationError

from config.settings import get_settings
from services import calculus_service as calculus
from services import function_catalog
from services import measure_service as measure
from services import staircase_service as staircase
from services import valuation_service as valuation
from services.cantor_service import IfsSpec, RationalInterval, level, load_spec, make_spec, triadic
from services.numeric_service import GUARD_DIGITS, real_mul, to_mpf
from services.run_logger import run_logger
from utils.errors import DomainError, ResourceCapError, SpecValidationError
from utils.normalize import parse_pattern
from utils.parsers import format_number, format_rational, to_exponent, to_fraction

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_RESOURCE = 3


class Config(BaseModel):
    """CLI configuration; a --config JSON file mirrors the flags."""

    spec: IfsSpec = Field(default_factory=triadic)
    precision_digits: int = Field(default_factory=lambda: get_settings().PRECISION_DIGITS, ge=6)
    level_cap: int = Field(default_factory=lambda: get_settings().LEVEL_CAP, ge=1)
    output_format: Literal["csv", "json"] = Field(default_factory=lambda: get_settings().OUTPUT_FORMAT)


def _read_config_file(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise SpecValidationError(f"cannot read config {path}: {e}") from e
    if not isinstance(data, dict):
        raise SpecValidationError(f"config {path} must hold a JSON object")
    return data


def _resolve(config_path: str, spec_path: str) -> str:
    """A spec path inside a config file is relative to that file."""
    path = Path(spec_path)
    if path.is_absolute():
        return str(path)
    return str(Path(config_path).parent / path)


def load_config(args: argparse.Namespace) -> Config:
    """
    Build the Config from --config, then apply command-line overrides.

    Args:
        args: Parsed arguments

    Returns:
        Config
    """
    data = _read_config_file(args.config)
    if isinstance(data.get("spec"), str):
        data["spec"] = load_spec(_resolve(args.config, data["spec"]))

    if any(v is not None for v in (args.p, args.q, args.r, args.pattern)):
        base = data.get("spec") or {}
        if isinstance(base, IfsSpec):
            base = base.model_dump()
        p = args.p if args.p is not None else base.get("p", 2)
        q = args.q if args.q is not None else base.get("q", 1)
        r = args.r if args.r is not None else p + q
        pattern = parse_pattern(args.pattern) if args.pattern else None
        data["spec"] = make_spec(p, q, r, pattern)
    elif isinstance(data.get("spec"), dict):
        data["spec"] = IfsSpec.from_json(json.dumps(data["spec"]))

    if args.precision is not None:
        data["precision_digits"] = args.precision
    if args.level_cap is not None:
        data["level_cap"] = args.level_cap
    if args.format is not None:
        data["output_format"] = args.format

    try:
        return Config(**data)
    except ValidationError as e:
        raise SpecValidationError(e.errors()[0].get("msg", str(e))) from e


def _check_level(config: Config, n: int):
    if n < 0:
        raise DomainError(f"level must be >= 0, got {n}")
    if n > config.level_cap:
        raise ResourceCapError(f"level {n} above the level cap of {config.level_cap}")


def _emit(df: pd.DataFrame, config: Config):
    if config.output_format == "json":
        print(df.to_json(orient="records"))
    else:
        print(df.to_csv(index=False), end="")


def _num(value, config: Config) -> str:
    return format_number(value, config.precision_digits)


# Subcommands: each returns the table to print
def cmd_construct(args, config: Config) -> pd.DataFrame:
    """kind, index, lo, hi of the retained intervals then the gaps."""
    _check_level(config, args.level)
    approx = level(config.spec, args.level)
    rows = [
        {"kind": "retained", "index": i, "lo": format_rational(iv.lo), "hi": format_rational(iv.hi)}
        for i, iv in enumerate(approx.retained, start=1)
    ]
    rows += [
        {"kind": "gap", "index": i, "lo": format_rational(iv.lo), "hi": format_rational(iv.hi)}
        for i, iv in enumerate(approx.gaps, start=1)
    ]
    return pd.DataFrame(rows, columns=["kind", "index", "lo", "hi"])


def cmd_staircase(args, config: Config) -> pd.DataFrame:
    """x, y rows; with --inverse, the preimage interval of y."""
    spec = config.spec
    if args.inverse is not None:
        iv = staircase.inverse_staircase(spec, to_fraction(args.inverse))
        return pd.DataFrame(
            [{"y": format_rational(to_fraction(args.inverse)), "lo": format_rational(iv.lo),
              "hi": format_rational(iv.hi), "kind": iv.kind.value}]
        )
    if args.x is not None:
        values = [staircase.cantor_function(spec, to_fraction(args.x))]
    else:
        values = staircase.sample_staircase(spec, args.samples)
    return pd.DataFrame(
        [{"x": format_rational(v.x), "y": format_rational(v.y)} for v in values],
        columns=["x", "y"],
    )


def cmd_valuation(args, config: Config) -> pd.DataFrame:
    """v(x_tilde) at a scale, or a summary of the ultrametric axiom check."""
    scale = valuation.Scale(to_fraction(args.epsilon))
    prec = config.precision_digits
    if args.axioms:
        pairs = valuation.random_admissible_pairs(scale, args.axioms, seed=args.seed)
        report = valuation.ultrametric_axiom_report(scale, pairs, prec)
        return pd.DataFrame(
            [{"epsilon": format_rational(scale.epsilon), "pairs": len(pairs),
              "invalid": report.invalid_count, "failures": len(report.failures()),
              "all_pass": report.all_pass,
              "linear_drift": format_number(report.max_linear_drift, prec)}]
        )
    if args.x is None:
        raise DomainError("valuation needs --x or --axioms")
    vi = valuation.infinitesimal_valuation(to_fraction(args.x), scale, prec)
    return pd.DataFrame(
        [{"epsilon": format_rational(scale.epsilon), "x_tilde": format_rational(vi.x_tilde),
          "lambda": format_rational(vi.lambda_), "v": _num(vi.v, config),
          "exact": vi.is_exact, "reconstructed": _num(vi.reconstruct(prec), config)}]
    )


def cmd_zeroset(args, config: Config) -> pd.DataFrame:
    """level, gap_lo, gap_hi, value."""
    _check_level(config, args.level)
    return valuation.valued_zero_set(config.spec, args.level).to_frame()


def cmd_norm(args, config: Config) -> pd.DataFrame:
    """||F_nk|| with --level, else ||x|| at scale --epsilon."""
    prec = config.precision_digits
    if args.level is not None:
        _check_level(config, args.level)
        return pd.DataFrame([{"level": args.level, "norm": _num(valuation.interval_norm(config.spec, args.level), config)}])
    if args.epsilon is None:
        raise DomainError("norm needs --level or --epsilon")
    scale = valuation.Scale(to_fraction(args.epsilon))
    x = to_fraction(args.x or "0")
    value = valuation.point_norm(x, scale, config.spec, precision_digits=prec)
    return pd.DataFrame([{"x": format_rational(x), "epsilon": format_rational(scale.epsilon), "norm": _num(value, config)}])


def cmd_neighbors(args, config: Config) -> pd.DataFrame:
    """X+ and X-; with --k, the level-k limit construction around x."""
    prec = config.precision_digits
    x = to_fraction(args.x)
    if args.k is not None:
        nl = valuation.neighbor_limit_construction(config.spec, x, args.k, prec)
        return pd.DataFrame(
            [{"x": format_rational(nl.x), "k": nl.k, "x_minus": format_rational(nl.x_minus),
              "x_plus": format_rational(nl.x_plus), "upper_gap": format_rational(nl.upper_gap),
              "lower_gap": format_rational(nl.lower_gap),
              "staircase_upper_gap": format_rational(nl.staircase_upper_gap),
              "staircase_lower_gap": format_rational(nl.staircase_lower_gap),
              "balanced": nl.balanced, "sigma_plus": _num(nl.sigma_plus, config),
              "sigma_minus": _num(nl.sigma_minus, config), "observed_j": _num(nl.observed_j, config)}]
        )
    if args.sigma is not None:
        pair = valuation.sigma_neighbors(x, to_exponent(args.sigma), to_exponent(args.j), prec)
    else:
        pair = valuation.multiplicative_neighbors(x, to_exponent(args.exponent), prec)
    product = real_mul(pair.x_plus, pair.x_minus, prec)
    return pd.DataFrame(
        [{"x": format_rational(pair.x), "exponent": _num(pair.exponent, config),
          "x_plus": _num(pair.x_plus, config), "x_minus": _num(pair.x_minus, config),
          "product": _num(product, config)}]
    )


def _parse_target(text: Optional[str]) -> List[RationalInterval]:
    """'0:1/3,2/3:1' -> intervals; None or 'C' -> the whole set; 'empty' -> []"""
    if text is None or text.strip().upper() == "C":
        return measure.whole_set()
    if text.strip().lower() == "empty":
        return []
    out = []
    for piece in text.split(","):
        lo, _, hi = piece.partition(":")
        out.append(RationalInterval(to_fraction(lo), to_fraction(hi)))
    return out


def cmd_measure(args, config: Config) -> pd.DataFrame:
    """Convergence table n, count, mu_s, mu_v, ratio."""
    _check_level(config, args.level)
    exponent = to_exponent(args.exponent) if args.exponent is not None else None
    rows = measure.measure_convergence_table(config.spec, _parse_target(args.target), args.level, exponent)
    return measure.convergence_frame(rows, config.precision_digits)


def cmd_derivative(args, config: Config) -> pd.DataFrame:
    """Logarithmic derivative of a catalog function, or dv/d log x^-1 with --epsilon."""
    prec = config.precision_digits
    if args.function is None:
        if args.epsilon is None:
            raise DomainError("derivative needs --function or --epsilon")
        scale = valuation.Scale(to_fraction(args.epsilon))
        samples = [to_fraction(s) for s in args.x.split(",")]
        results = calculus.valuation_derivative_check(scale, samples, to_exponent(args.h), prec)
        return pd.DataFrame(
            [{"x": format_rational(r.x), "value": _num(r.value, config), "valid": r.valid,
              "one_sided": r.one_sided, "base": r.base} for r in results],
            columns=["x", "value", "valid", "one_sided", "base"],
        )

    f = function_catalog.resolve(args.function, config.spec)
    rows = []
    for token in args.x.split(","):
        res = calculus.scale_derivative(f, to_exponent(token), to_exponent(args.h), args.richardson, prec)
        rows.append(
            {"x": token.strip(), "h": _num(res.h, config), "value": _num(res.value, config),
             "right": _num(res.right, config), "left": _num(res.left, config),
             "two_sided_gap": _num(res.two_sided_gap, config)}
        )
    return pd.DataFrame(rows, columns=["x", "h", "value", "right", "left", "two_sided_gap"])


def cmd_mvt(args, config: Config) -> pd.DataFrame:
    """Remainder of the first-order model at X = X0 * e^gap (or an explicit --x)."""
    prec = config.precision_digits
    f = function_catalog.resolve(args.function, config.spec)
    x0 = to_exponent(args.x0)
    gap = to_exponent(args.gap)
    if args.x is not None:
        x = to_exponent(args.x)
    else:
        with mpmath.workdps(prec + GUARD_DIGITS):
            x = to_mpf(x0) * mpmath.exp(to_mpf(gap))
    residual = calculus.mvt_residual(f, x0, x, gap, to_exponent(args.h), prec)
    return pd.DataFrame([{"x0": args.x0, "x": _num(x, config), "gap": _num(gap, config), "residual": _num(residual, config)}])


def cmd_integral(args, config: Config) -> pd.DataFrame:
    """epsilon, v, value = 1 - eps + v, and the valued scale eps^(1+v)."""
    prec = config.precision_digits
    v = to_exponent(args.v)
    epsilons = [to_fraction(e) for e in args.epsilon.split(",")]
    rows = []
    for res in calculus.corrected_integral_sequence(epsilons, v):
        rows.append(
            {"epsilon": format_rational(res.epsilon), "v": _num(res.v_epsilon, config),
             "value": _num(res.value, config),
             "valued_scale": _num(calculus.valued_scale(res.epsilon, v, prec), config)}
        )
    return pd.DataFrame(rows, columns=["epsilon", "v", "value", "valued_scale"])


COMMANDS = {
    "construct": cmd_construct,
    "staircase": cmd_staircase,
    "valuation": cmd_valuation,
    "zeroset": cmd_zeroset,
    "norm": cmd_norm,
    "neighbors": cmd_neighbors,
    "measure": cmd_measure,
    "derivative": cmd_derivative,
    "mvt": cmd_mvt,
    "integral": cmd_integral,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, help="JSON file mirroring these flags")
    common.add_argument("--precision", type=int, help="Decimal digits for reals (>= 6)")
    common.add_argument("--format", type=str, choices=["csv", "json"], help="Output format (default: csv)")
    common.add_argument("--level-cap", type=int, help="Largest level accepted (default: 20)")
    common.add_argument("--p", type=int, help="Retained intervals per step (default: 2)")
    common.add_argument("--q", type=int, help="Deleted intervals per step (default: 1)")
    common.add_argument("--r", type=int, help="Subdivisions per step, p+q (default: p+q)")
    common.add_argument("--pattern", type=str, help="Slot pattern, e.g. keep,gap,keep or KGK")

    parser = argparse.ArgumentParser(description="Cantor-set scale-invariant analysis")
    subparsers = parser.add_subparsers(dest="command", help="Commands")

    # construct command
    p = subparsers.add_parser("construct", parents=[common], help="Level-n intervals. Columns: kind,index,lo,hi")
    p.add_argument("--level", type=int, default=1, help="Construction level (default: 1)")

    # staircase command
    p = subparsers.add_parser("staircase", parents=[common], help="Cantor function. Columns: x,y")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--x", type=str, help="Exact query point, e.g. 1/3")
    group.add_argument("--samples", type=int, help="Uniform grid size (>= 2)")
    group.add_argument("--inverse", type=str, help="Preimage of y. Columns: y,lo,hi,kind")

    # valuation command
    p = subparsers.add_parser("valuation", parents=[common],
                              help="v(x) = log_{1/eps}(eps/x). Columns: epsilon,x_tilde,lambda,v,exact,reconstructed")
    p.add_argument("--epsilon", type=str, required=True, help="Scale in (0, 1)")
    p.add_argument("--x", type=str, help="Relative infinitesimal in (0, eps]")
    p.add_argument("--axioms", type=int, help="Check N random admissible pairs instead. Columns: epsilon,pairs,invalid,failures,all_pass,linear_drift")
    p.add_argument("--seed", type=int, default=0, help="Random seed for --axioms (default: 0)")

    # zeroset command
    p = subparsers.add_parser("zeroset", parents=[common], help="Valued zero-set. Columns: level,gap_lo,gap_hi,value")
    p.add_argument("--level", type=int, required=True, help="Level n >= 1")

    # norm command
    p = subparsers.add_parser("norm", parents=[common], help="||F_nk|| or ||x||. Columns: level,norm | x,epsilon,norm")
    p.add_argument("--level", type=int, help="Interval norm at this level")
    p.add_argument("--epsilon", type=str, help="Scale for a point norm")
    p.add_argument("--x", type=str, help="Point of C (default: 0)")

    # neighbors command
    p = subparsers.add_parser("neighbors", parents=[common],
                              help="Multiplicative neighbours. Columns: x,exponent,x_plus,x_minus,product")
    p.add_argument("--x", type=str, required=True, help="Point in (0, 1), or in C with --k")
    p.add_argument("--exponent", type=str, default="0", help="Exponent e >= 0 (default: 0)")
    p.add_argument("--sigma", type=str, help="Use X = x * sigma^(+-j) instead")
    p.add_argument("--j", type=str, default="1", help="Power j for --sigma (default: 1)")
    p.add_argument("--k", type=int, help="Limit construction at level k")

    # measure command
    p = subparsers.add_parser("measure", parents=[common], help="Measure convergence. Columns: n,count,mu_s,mu_v,ratio")
    p.add_argument("--level", type=int, required=True, help="Largest level n")
    p.add_argument("--target", type=str, help="C (default), empty, or lo:hi pieces, e.g. 0:1/3")
    p.add_argument("--exponent", type=str, help="Exponent in place of s")

    # derivative command
    p = subparsers.add_parser("derivative", parents=[common],
                              help="Log derivative. Columns: x,h,value,right,left,two_sided_gap")
    p.add_argument("--function", type=str, help="Catalog: power:<a>, abs, logsq, staircase, product, table:<csv>")
    p.add_argument("--epsilon", type=str, help="Differentiate v at this scale instead")
    p.add_argument("--x", type=str, required=True, help="Point(s), comma separated")
    p.add_argument("--h", type=str, default="1e-6", help="Log step (default: 1e-6)")
    p.add_argument("--richardson", action="store_true", help="Ridders extrapolation")

    # mvt command
    p = subparsers.add_parser("mvt", parents=[common], help="Mean-value remainder. Columns: x0,x,gap,residual")
    p.add_argument("--function", type=str, required=True, help="Catalog function")
    p.add_argument("--x0", type=str, required=True, help="Base point X0")
    p.add_argument("--gap", type=str, required=True, help="Norm gap ||X - X0||")
    p.add_argument("--x", type=str, help="Point X (default: X0 * e^gap)")
    p.add_argument("--h", type=str, default="1e-6", help="Log step (default: 1e-6)")

    # integral command
    p = subparsers.add_parser("integral", parents=[common], help="Corrected integral. Columns: epsilon,v,value,valued_scale")
    p.add_argument("--epsilon", type=str, required=True, help="Scale(s), comma separated")
    p.add_argument("--v", type=str, required=True, help="v(eps) >= 0")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return EXIT_OK

    run_logger.configure()
    logged_args = {k: v for k, v in vars(args).items() if v is not None and k != "command"}
    try:
        config = load_config(args)
        df = COMMANDS[args.command](args, config)
    except ResourceCapError as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        run_logger.log_failure(args.command, logged_args, e, EXIT_RESOURCE)
        return EXIT_RESOURCE
    except (DomainError, SpecValidationError, ValueError, ZeroDivisionError) as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        run_logger.log_failure(args.command, logged_args, e, EXIT_INVALID)
        return EXIT_INVALID

    _emit(df, config)
    run_logger.log_command(args.command, logged_args, len(df))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
