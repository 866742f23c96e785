"""
Built-in function handles for the derivative and mvt commands.

Names:
    power:<a>    |x|^a
    abs          |x|
    logsq        exp(log^2 |x|)
    staircase    f_c(x) of the configured spec
    product      x * f_c(x)
    table:<csv>  piecewise-linear interpolation of columns x, y
"""

import logging
from typing import Callable, Dict

import mpmath
import pandas as pd

from services.calculus_service import FunctionHandle
from services.cantor_service import IfsSpec, triadic
from services.numeric_service import to_mpf
from services.staircase_service import staircase_real
from utils.errors import DomainError
from utils.parsers import to_exponent

logger = logging.getLogger(__name__)

CATALOG_NAMES = ("power:<a>", "abs", "logsq", "staircase", "product", "table:<csv>")


def power(a) -> FunctionHandle:
    return lambda x: mpmath.power(abs(to_mpf(x)), to_mpf(a))


def absolute() -> FunctionHandle:
    return lambda x: abs(to_mpf(x))


def logsq() -> FunctionHandle:
    return lambda x: mpmath.exp(mpmath.log(abs(to_mpf(x))) ** 2)


def staircase(spec: IfsSpec) -> FunctionHandle:
    return lambda x: staircase_real(spec, x)


def product(spec: IfsSpec) -> FunctionHandle:
    return lambda x: to_mpf(x) * staircase_real(spec, x)


def table(path: str) -> FunctionHandle:
    """Piecewise-linear function through the (x, y) rows of a CSV file."""
    try:
        df = pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as e:
        raise DomainError(f"cannot read function table {path}: {e}") from e
    if not {"x", "y"}.issubset(df.columns):
        raise DomainError(f"function table {path} needs columns x, y")
    df = df.sort_values("x").drop_duplicates("x").reset_index(drop=True)
    if len(df) < 2:
        raise DomainError(f"function table {path} needs at least two rows")

    xs = [mpmath.mpf(str(v)) for v in df["x"]]
    ys = [mpmath.mpf(str(v)) for v in df["y"]]
    logger.debug(f"loaded function table {path} ({len(xs)} rows)")

    def evaluate(x):
        t = to_mpf(x)
        if t < xs[0] or t > xs[-1]:
            raise DomainError(f"x={mpmath.nstr(t, 15)} outside table range [{xs[0]}, {xs[-1]}]")
        i = int(df["x"].searchsorted(float(t), side="right")) - 1
        i = min(max(i, 0), len(xs) - 2)
        w = (t - xs[i]) / (xs[i + 1] - xs[i])
        return ys[i] + w * (ys[i + 1] - ys[i])

    return evaluate


def resolve(name: str, spec: IfsSpec = None) -> FunctionHandle:
    """
    Look up a catalog function by name.

    Args:
        name: Catalog name, e.g. 'power:3' or 'table:data/f.csv'
        spec: Spec used by 'staircase' and 'product'. If None, the triadic set.

    Returns:
        FunctionHandle taking an mpf
    """
    spec = spec or triadic()
    kind, _, arg = name.strip().partition(":")
    kind = kind.lower()

    simple: Dict[str, Callable[[], FunctionHandle]] = {
        "abs": absolute,
        "logsq": logsq,
    }
    if kind in simple and not arg:
        return simple[kind]()
    if kind == "staircase" and not arg:
        return staircase(spec)
    if kind == "product" and not arg:
        return product(spec)
    if kind == "power" and arg:
        try:
            return power(to_exponent(arg))
        except ValueError as e:
            raise DomainError(f"bad exponent in '{name}'") from e
    if kind == "table" and arg:
        return table(arg)
    raise DomainError(f"unknown function '{name}'. Available: {', '.join(CATALOG_NAMES)}")
