"""Closed-form source and initial-data expressions from run-configs.

Expressions such as ``"sin(pi*x)*sin(pi*y)"`` are parsed once with sympy and
compiled to numpy with ``lambdify``. Free symbols are limited to the declared
variables (x, y, t by default) and functions to sympy's elementary ones;
anything else is a configuration error.
"""

import keyword
import logging
import re
from typing import Any, Dict, Union

import numpy as np
import sympy
from sympy.core.function import AppliedUndef
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from shape_control.discretization.base import ConfigurationError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

VARIABLES = ("x", "y", "t")

_FUNCTIONS: Dict[str, Any] = {
    "sin": sympy.sin,
    "cos": sympy.cos,
    "tan": sympy.tan,
    "asin": sympy.asin,
    "acos": sympy.acos,
    "atan": sympy.atan,
    "atan2": sympy.atan2,
    "sinh": sympy.sinh,
    "cosh": sympy.cosh,
    "tanh": sympy.tanh,
    "exp": sympy.exp,
    "log": sympy.log,
    "sqrt": sympy.sqrt,
    "abs": sympy.Abs,
    "Abs": sympy.Abs,
    "sign": sympy.sign,
}

_CONSTANTS: Dict[str, Any] = {"pi": sympy.pi, "e": sympy.E, "E": sympy.E}

# Names the parser's own transformations emit.
_PARSER_NAMES: Dict[str, Any] = {
    "Integer": sympy.Integer,
    "Float": sympy.Float,
    "Rational": sympy.Rational,
    "Symbol": sympy.Symbol,
    "Function": sympy.Function,
}

_ALLOWED_TEXT = re.compile(r"^[\w\s.+\-*/^(),]*$")
_ATTRIBUTE_ACCESS = re.compile(r"(\b[A-Za-z_]\w*|\))\s*\.")
_IDENTIFIER = re.compile(r"\b[A-Za-z_]\w*")

_TRANSFORMATIONS = standard_transformations + (convert_xor,)


class Expression:
    """
    A validated closed-form expression in x, y and t.

    Args:
        source: Expression text; ``^`` and ``**`` both mean power
        variables: Names allowed as free variables

    Raises:
        ConfigurationError: If the text is not a supported expression
    """

    def __init__(self, source: str, variables: tuple = VARIABLES):
        self.source = source
        self.variables = tuple(variables)
        self.logger = logger
        self.symbols = tuple(sympy.Symbol(name, real=True) for name in self.variables)
        self.expr = self._parse(source)
        self._func = sympy.lambdify(self.symbols, self.expr, modules="numpy")

    def _screen(self, source: str) -> None:
        if not _ALLOWED_TEXT.match(source):
            raise ConfigurationError(f"Unsupported characters in expression {source!r}")
        if _ATTRIBUTE_ACCESS.search(source):
            raise ConfigurationError(f"Attribute access is not allowed in {source!r}")
        for name in _IDENTIFIER.findall(source):
            if keyword.iskeyword(name) or name.startswith("_"):
                raise ConfigurationError(f"Unsupported syntax {name!r} in {source!r}")

    def _parse(self, source: str) -> sympy.Expr:
        self._screen(source)
        local_dict: Dict[str, Any] = dict(_CONSTANTS)
        local_dict.update(_FUNCTIONS)
        local_dict.update(zip(self.variables, self.symbols))
        try:
            expr = parse_expr(
                source,
                local_dict=local_dict,
                global_dict=dict(_PARSER_NAMES),
                transformations=_TRANSFORMATIONS,
            )
        except Exception as e:
            raise ConfigurationError(f"Cannot parse expression {source!r}: {e}") from e

        if not isinstance(expr, sympy.Expr):
            raise ConfigurationError(f"Expression {source!r} is not a scalar expression")
        unknown_functions = sorted(str(f.func) for f in expr.atoms(AppliedUndef))
        if unknown_functions:
            raise ConfigurationError(f"Unknown function {unknown_functions[0]!r} in {source!r}")
        allowed = set(self.symbols)
        unknown = sorted(str(s) for s in expr.free_symbols if s not in allowed)
        if unknown:
            raise ConfigurationError(f"Unknown name {unknown[0]!r} in {source!r}")
        return expr

    def evaluate(self, **values: ArrayLike) -> np.ndarray:
        """
        Evaluate on scalars or broadcastable arrays.

        Raises:
            ConfigurationError: If a variable is missing or the result is not finite
        """
        missing = [name for name in self.variables if name not in values]
        if missing:
            raise ConfigurationError(f"Expression {self.source!r} needs values for {missing}")
        args = [np.asarray(values[name], dtype=float) for name in self.variables]
        with np.errstate(all="ignore"):
            result = np.asarray(self._func(*args), dtype=float)
        if not np.all(np.isfinite(result)):
            raise ConfigurationError(f"Expression {self.source!r} is not finite on the grid")
        return result

    def __repr__(self) -> str:
        return f"Expression({self.source!r})"
