"""Expression language for symbols sigma(x, xi): parse, print, differentiate, evaluate."""
from .differentiate import axis_var, derivative, differentiate
from .evaluate import coords, evaluate
from .nodes import (EF, Add, Const, Div, Func, Jb, Lam, LamD, Mul, Neg, Node, Pow, Sub, Var,
                    add, const, depends_on, div, ef, free_vars, func, jb, lam, lamd, mul, neg,
                    node_count, tree_size, power, simplify, sub, substitute, var, xivars, xvars)
from .parser import ParseError, parse
from .printer import to_text

__all__ = [
    "Node", "Const", "Var", "Add", "Sub", "Mul", "Div", "Neg", "Pow", "Func", "EF", "Jb",
    "Lam", "LamD", "add", "sub", "mul", "div", "neg", "power", "func", "ef", "jb", "lam",
    "lamd", "const", "var", "xvars", "xivars", "simplify", "substitute", "free_vars",
    "depends_on", "node_count", "tree_size", "parse", "ParseError", "to_text", "differentiate",
    "derivative", "axis_var", "evaluate", "coords", "as_expr",
]


def as_expr(e, dim: int = 1, allow_z: bool = False) -> Node:
    """Accept an expression node or text; text is parsed and simplified."""
    if isinstance(e, Node):
        return e
    if isinstance(e, (int, float, complex)):
        return const(e)
    return simplify(parse(str(e), dim, allow_z=allow_z))
