"""Kernel expression language.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | 'pi' | VAR | CALL | '(' expr ')'
    CALL   := NAME '(' expr (',' expr)* ')'
    VAR    := 'x' | 'y' | 'z' | 'x' DIGITS

Functions: ``pow(a, b)``, ``abs(a)``, ``exp(a)``, ``max(a, b, ...)``,
``min(a, b, ...)`` and ``indicator(box(a1, b1), ..., box(ad, bd))`` (one
half-open interval per coordinate).

Besides the evaluator, parsing infers a support box and a tail certificate
for common shapes: exponentials of negative powers, rational power tails
and differences of shifted powers such as ``pow(max(t-x,0),e) - pow(max(-x,0),e)``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .kernels import Decay, Kernel

__all__ = ["ParseError", "DimensionError", "parse_kernel"]


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class DimensionError(ValueError):
    pass


_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)"
                    r"|(?P<op>\*\*|[-+*/^(),]))")


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[start]!r}", start)
        kind = m.lastgroup
        value = m.group(kind)
        start = m.start(kind)
        if value == "**":
            value = "^"
        out.append((kind, value, start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


# -- AST ---------------------------------------------------------------------

@dataclass
class Node:
    op: str
    args: tuple = ()
    value: float = 0.0
    pos: int = 0


class _Parser:
    def __init__(self, text: str, dim: int):
        self.text = text
        self.dim = dim
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, value=None):
        tok = self.toks[self.i]
        if value is not None and tok[1] != value:
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ParseError(f"expected {value!r}, found {what}", tok[2])
        self.i += 1
        return tok

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected {tok[1]!r}", tok[2])
        _reject_loose_boxes(node)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            _, op, pos = self.take()
            node = Node(op, (node, self.term()), pos=pos)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            _, op, pos = self.take()
            node = Node(op, (node, self.unary()), pos=pos)
        return node

    def unary(self):
        tok = self.peek()
        if tok[1] == "-":
            self.take()
            return Node("neg", (self.unary(),), pos=tok[2])
        if tok[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            _, _, pos = self.take()
            return Node("pow", (base, self.unary()), pos=pos)
        return base

    def atom(self):
        kind, value, pos = self.peek()
        if kind == "num":
            self.take()
            return Node("num", value=float(value), pos=pos)
        if value == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        if kind == "name":
            self.take()
            if self.peek()[1] == "(":
                return self.call(value, pos)
            if value == "pi":
                return Node("num", value=math.pi, pos=pos)
            idx = _var_index(value)
            if idx is None:
                raise ParseError(f"unknown name {value!r}", pos)
            if idx >= self.dim:
                raise DimensionError(f"variable {value!r} (position {pos}) needs dimension "
                                     f">= {idx + 1}, kernel has dimension {self.dim}")
            return Node("var", value=idx, pos=pos)
        what = "end of input" if kind == "end" else repr(value)
        raise ParseError(f"unexpected {what}", pos)

    def call(self, name, pos):
        self.take("(")
        args = [self.expr()]
        while self.peek()[1] == ",":
            self.take()
            args.append(self.expr())
        self.take(")")
        arity = {"pow": 2, "abs": 1, "exp": 1}
        if name in arity:
            if len(args) != arity[name]:
                raise ParseError(f"{name} takes {arity[name]} argument(s)", pos)
            return Node(name, tuple(args), pos=pos)
        if name in ("max", "min"):
            if len(args) < 2:
                raise ParseError(f"{name} needs at least two arguments", pos)
            return Node(name, tuple(args), pos=pos)
        if name == "box":
            if len(args) != 2:
                raise ParseError("box takes two arguments", pos)
            return Node("box", tuple(args), pos=pos)
        if name == "indicator":
            if any(a.op != "box" for a in args):
                raise ParseError("indicator arguments must be box(a, b)", pos)
            if len(args) != self.dim:
                raise DimensionError(f"indicator at position {pos} has {len(args)} box(es), "
                                     f"kernel has dimension {self.dim}")
            return Node("indicator", tuple(args), pos=pos)
        raise ParseError(f"unknown function {name!r}", pos)


def _reject_loose_boxes(node: Node, inside: bool = False):
    if node.op == "box" and not inside:
        raise ParseError("box(a, b) is only valid inside indicator(...)", node.pos)
    for a in node.args:
        _reject_loose_boxes(a, node.op == "indicator")


def _var_index(name: str):
    if name in ("x", "y", "z"):
        return "xyz".index(name)
    m = re.fullmatch(r"x([1-9]\d*)", name)
    return int(m.group(1)) - 1 if m else None


# -- constant folding / evaluation -----------------------------------------

def _const(node: Node):
    """Numeric value of a variable-free subtree, else None."""
    if node.op == "num":
        return node.value
    if node.op == "var" or node.op == "indicator" or node.op == "box":
        return None
    vals = [_const(a) for a in node.args]
    if any(v is None for v in vals):
        return None
    with np.errstate(all="ignore"):
        return float(_apply(node.op, [np.float64(v) for v in vals]))


def _apply(op, vals):
    if op == "+":
        return vals[0] + vals[1]
    if op == "-":
        return vals[0] - vals[1]
    if op == "*":
        return vals[0] * vals[1]
    if op == "/":
        return vals[0] / vals[1]
    if op == "neg":
        return -vals[0]
    if op == "pow":
        return np.power(vals[0], vals[1])
    if op == "abs":
        return np.abs(vals[0])
    if op == "exp":
        return np.exp(vals[0])
    if op == "max":
        out = vals[0]
        for v in vals[1:]:
            out = np.maximum(out, v)
        return out
    if op == "min":
        out = vals[0]
        for v in vals[1:]:
            out = np.minimum(out, v)
        return out
    raise AssertionError(op)


def _box_bounds(node: Node):
    lo, hi = _const(node.args[0]), _const(node.args[1])
    if lo is None or hi is None:
        raise ParseError("box bounds must be constants", node.pos)
    if not lo < hi:
        raise ParseError("box needs a < b", node.pos)
    return lo, hi


def _compile(node: Node) -> Callable:
    c = _const(node)
    if c is not None:
        return lambda *x: np.full(np.shape(x[0]), c)
    if node.op == "var":
        i = int(node.value)
        return lambda *x: x[i]
    if node.op == "indicator":
        bounds = [_box_bounds(b) for b in node.args]

        def ind(*x):
            out = np.ones(np.shape(x[0]))
            for xi, (a, b) in zip(x, bounds):
                out = out * ((xi >= a) & (xi < b))
            return out
        return ind
    fns = [_compile(a) for a in node.args]
    op = node.op

    def ev(*x):
        with np.errstate(all="ignore"):
            return _apply(op, [f(*x) for f in fns])
    return ev


# -- asymptotic inference ----------------------------------------------------

@dataclass
class _Info:
    """What is known about a subtree as |x| -> infinity.

    ``upper = (C, eta)``: |g| <= C |x|^-eta; ``lower = (c, k)``: |g| >= c |x|^k;
    ``expo = (C, rate, power)``: |g| <= C exp(-rate |x|^power). All hold for
    |x| >= ``radius``. ``support`` is a box outside which g vanishes.
    """

    upper: tuple | None = None
    lower: tuple | None = None
    expo: tuple | None = None
    radius: float = 0.0
    nonneg: bool = False
    support: tuple | None = None
    affine: tuple | None = None       # (slope, intercept), d = 1 only
    singular: list = field(default_factory=list)
    kinks: list = field(default_factory=list)
    discontinuous: bool = False
    axis_lower: dict | None = None    # axis -> (c, k): |g| >= c |x_axis|^k for |x_axis| >= 1


def _merge_lists(*infos):
    sing, kinks = [], []
    for i in infos:
        sing += i.singular
        kinks += i.kinks
    return sing, kinks


def _hull(a, b):
    if a is None or b is None:
        return None
    return (np.minimum(a[0], b[0]), np.maximum(a[1], b[1]))


def _meet(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return (np.maximum(a[0], b[0]), np.minimum(a[1], b[1]))


def _exp_to_power(expo, eta_extra, radius):
    """C e^{-r x^k} x^m <= C' e^{-(r/2) x^k} for all x >= radius."""
    C, r, k = expo
    if eta_extra >= 0:
        return (C * max(radius, 1.0) ** (-eta_extra) if radius > 0 else C, r, k)
    m = -eta_extra
    # sup_x x^m e^{-(r/2) x^k} at x* = (2m/(r k))^(1/k)
    xs = (2.0 * m / (r * k)) ** (1.0 / k)
    return (C * xs ** m * math.exp(-0.5 * r * xs ** k), 0.5 * r, k)


class _Infer:
    def __init__(self, dim: int):
        self.dim = dim

    def __call__(self, node: Node) -> _Info:
        c = _const(node)
        if c is not None:
            return _Info(upper=(abs(c), 0.0), lower=(abs(c), 0.0) if c != 0 else None,
                         nonneg=c >= 0, support=None if c != 0 else "zero",
                         affine=(0.0, c))
        meth = getattr(self, "_" + {"+": "add", "-": "sub", "*": "mul", "/": "div"}.get(node.op, node.op))
        return meth(node)

    def _var(self, node):
        one_d = self.dim == 1
        return _Info(upper=(1.0, -1.0), lower=(1.0, 1.0) if one_d else None,
                     affine=(1.0, 0.0) if one_d else None, axis_lower={int(node.value): (1.0, 1.0)})

    def _indicator(self, node):
        bounds = [_box_bounds(b) for b in node.args]
        lo = np.array([b[0] for b in bounds])
        hi = np.array([b[1] for b in bounds])
        return _Info(upper=(1.0, 0.0), nonneg=True, support=(lo, hi), discontinuous=True,
                     kinks=list(lo) + list(hi) if self.dim == 1 else [])

    def _neg(self, node):
        a = self(node.args[0])
        aff = None if a.affine is None else (-a.affine[0], -a.affine[1])
        return _Info(a.upper, a.lower, a.expo, a.radius, a.support == "zero", a.support, aff,
                     a.singular, a.kinks, a.discontinuous, a.axis_lower)

    def _sum(self, a: _Info, b: _Info, sign: float, node: Node) -> _Info:
        if a.support == "zero":
            return b if sign > 0 else self._neg(Node("neg", (node.args[1],)))
        if b.support == "zero":
            return a
        sing, kinks = _merge_lists(a, b)
        radius = max(a.radius, b.radius, 1.0)
        out = _Info(radius=radius, singular=sing, kinks=kinks,
                    discontinuous=a.discontinuous or b.discontinuous)
        out.support = _hull(a.support, b.support)
        if a.affine is not None and b.affine is not None:
            out.affine = (a.affine[0] + sign * b.affine[0], a.affine[1] + sign * b.affine[1])
            if out.affine[0] != 0:
                out.lower = (abs(out.affine[0]) / 2.0, 1.0)
                out.radius = max(radius, 2.0 * abs(out.affine[1]) / abs(out.affine[0]))
            out.upper = (abs(out.affine[0]) + abs(out.affine[1]), -1.0 if out.affine[0] else 0.0)
            return out
        if sign > 0 and a.nonneg and b.nonneg:
            out.nonneg = True
            lows = [l for l in (a.lower, b.lower) if l is not None]
            if lows:
                out.lower = max(lows, key=lambda l: (l[1], l[0]))
            if a.axis_lower or b.axis_lower:
                merged = dict(a.axis_lower or {})
                for ax, (c, k) in (b.axis_lower or {}).items():
                    merged[ax] = (min(c, merged[ax][0]), min(k, merged[ax][1])) if ax in merged else (c, k)
                out.axis_lower = merged
                if len(merged) == self.dim:
                    c = min(v[0] for v in merged.values())
                    k = min(v[1] for v in merged.values())
                    if k > 0 and (out.lower is None or out.lower[1] < k):
                        out.lower = (c * self.dim ** (-k / 2.0), k)
                        out.radius = max(out.radius, math.sqrt(self.dim))
        shifted = self._shifted_powers(node) if sign < 0 else None
        if shifted is not None:
            out.upper, out.radius = shifted
            return out
        out.upper, out.expo = _combine_upper(a, b, a.support, b.support)
        return out

    def _add(self, node):
        return self._sum(self(node.args[0]), self(node.args[1]), 1.0, node)

    def _sub(self, node):
        return self._sum(self(node.args[0]), self(node.args[1]), -1.0, node)

    def _shifted_powers(self, node):
        """Difference of ``pow(max(a x + b_i, 0), e)`` terms with equal slope and exponent."""
        if self.dim != 1:
            return None
        parts = []
        for arg in node.args:
            if arg.op != "pow":
                return None
            e = _const(arg.args[1])
            base = arg.args[0]
            if e is None:
                return None
            if base.op == "max" and len(base.args) == 2:
                consts = [_const(b) for b in base.args]
                if consts[1] == 0.0:
                    base = base.args[0]
                elif consts[0] == 0.0:
                    base = base.args[1]
                else:
                    return None
            aff = self(base).affine
            if aff is None or aff[0] == 0:
                return None
            parts.append((e, aff))
        (e1, (a1, b1)), (e2, (a2, b2)) = parts
        if e1 != e2 or a1 != a2:
            return None
        e, a = e1, abs(a1)
        radius = max(1.0, 2.0 * max(abs(b1), abs(b2)) / a)
        # mean value theorem with the intermediate point in [a|x|/2, 2a|x|]
        scale = a / 2.0 if e < 1 else 2.0 * a
        C = abs(e) * abs(b1 - b2) * scale ** (e - 1.0)
        return (C, 1.0 - e), radius

    def _mul(self, node):
        a, b = self(node.args[0]), self(node.args[1])
        if a.support == "zero" or b.support == "zero":
            return _Info(upper=(0.0, 0.0), support="zero", nonneg=True, affine=(0.0, 0.0))
        sing, kinks = _merge_lists(a, b)
        out = _Info(radius=max(a.radius, b.radius, 1.0), singular=sing, kinks=kinks,
                    nonneg=(a.nonneg and b.nonneg) or _same(node.args[0], node.args[1]),
                    discontinuous=a.discontinuous or b.discontinuous)
        out.support = _meet(a.support, b.support)
        ca, cb = _const(node.args[0]), _const(node.args[1])
        if ca is not None and b.affine is not None:
            out.affine = (ca * b.affine[0], ca * b.affine[1])
        elif cb is not None and a.affine is not None:
            out.affine = (cb * a.affine[0], cb * a.affine[1])
        if a.lower and b.lower:
            out.lower = (a.lower[0] * b.lower[0], a.lower[1] + b.lower[1])
        if (a.axis_lower and b.axis_lower and len(a.axis_lower) == 1
                and a.axis_lower.keys() == b.axis_lower.keys()):
            (ax, (c1, k1)), = a.axis_lower.items()
            (c2, k2) = b.axis_lower[ax]
            out.axis_lower = {ax: (c1 * c2, k1 + k2)}
        elif a.axis_lower and cb is not None and cb != 0:
            out.axis_lower = {ax: (abs(cb) * c, k) for ax, (c, k) in a.axis_lower.items()}
        elif b.axis_lower and ca is not None and ca != 0:
            out.axis_lower = {ax: (abs(ca) * c, k) for ax, (c, k) in b.axis_lower.items()}
        if a.expo and b.upper:
            out.expo = _exp_to_power(a.expo, b.upper[1], out.radius)
            out.expo = (out.expo[0] * b.upper[0], out.expo[1], out.expo[2])
        elif b.expo and a.upper:
            out.expo = _exp_to_power(b.expo, a.upper[1], out.radius)
            out.expo = (out.expo[0] * a.upper[0], out.expo[1], out.expo[2])
        if a.upper and b.upper:
            out.upper = (a.upper[0] * b.upper[0], a.upper[1] + b.upper[1])
        return out

    def _div(self, node):
        a, b = self(node.args[0]), self(node.args[1])
        sing, kinks = _merge_lists(a, b)
        if b.affine is not None and b.affine[0] != 0:
            sing = sing + [-b.affine[1] / b.affine[0]]
        out = _Info(radius=max(a.radius, b.radius, 1.0), singular=sing, kinks=kinks,
                    discontinuous=a.discontinuous or b.discontinuous, support=a.support)
        cb = _const(node.args[1])
        if cb is not None and a.affine is not None:
            out.affine = (a.affine[0] / cb, a.affine[1] / cb)
        if b.lower:
            if a.upper:
                out.upper = (a.upper[0] / b.lower[0], a.upper[1] + b.lower[1])
            if a.expo:
                ex = _exp_to_power(a.expo, b.lower[1], out.radius)
                out.expo = (ex[0] / b.lower[0], ex[1], ex[2])
        if a.lower and b.upper and b.upper[0] > 0:
            out.lower = (a.lower[0] / b.upper[0], a.lower[1] - b.upper[1])
        if a.axis_lower and cb is not None and cb != 0:
            out.axis_lower = {ax: (c / abs(cb), k) for ax, (c, k) in a.axis_lower.items()}
        out.nonneg = a.nonneg and b.nonneg
        return out

    def _pow(self, node):
        a = self(node.args[0])
        e = _const(node.args[1])
        if e is None:
            return _Info(singular=a.singular, kinks=a.kinks, discontinuous=True)
        out = _Info(radius=max(a.radius, 1.0), nonneg=True, singular=list(a.singular),
                    kinks=list(a.kinks), discontinuous=a.discontinuous)
        if e > 0:
            out.support = a.support
            if a.upper:
                out.upper = (a.upper[0] ** e, a.upper[1] * e)
            if a.lower:
                out.lower = (a.lower[0] ** e, a.lower[1] * e)
            if a.expo:
                out.expo = (a.expo[0] ** e, a.expo[1] * e, a.expo[2])
            if a.axis_lower:
                out.axis_lower = {ax: (c ** e, k * e) for ax, (c, k) in a.axis_lower.items()}
            if e < 1 and self.dim == 1:
                root = _root(node.args[0], self)
                if root is not None:
                    out.kinks.append(root)
        elif e < 0:
            if a.lower:
                out.upper = (a.lower[0] ** e, -a.lower[1] * e)
            if a.upper and a.upper[0] > 0:
                out.lower = (a.upper[0] ** e, -a.upper[1] * e)
            root = _root(node.args[0], self) if self.dim == 1 else None
            if root is not None:
                out.singular.append(root)
        else:
            out.upper = (1.0, 0.0)
            out.lower = (1.0, 0.0)
        return out

    def _abs(self, node):
        a = self(node.args[0])
        out = _Info(a.upper, a.lower, a.expo, a.radius, True, a.support, None,
                    a.singular, list(a.kinks), a.discontinuous, a.axis_lower)
        if a.affine is not None and a.affine[0] != 0:
            out.kinks.append(-a.affine[1] / a.affine[0])
        return out

    def _exp(self, node):
        a = self(node.args[0])
        out = _Info(upper=None, nonneg=True, radius=a.radius, singular=a.singular,
                    kinks=a.kinks, discontinuous=a.discontinuous)
        arg = node.args[0]
        inner = arg.args[0] if arg.op == "neg" else None
        if inner is not None:
            b = self(inner)
            if b.nonneg and b.lower and b.lower[1] > 0:
                out.expo = (1.0, b.lower[0], b.lower[1])
                out.radius = max(out.radius, b.radius)
        if a.affine is not None and a.affine[0] == 0:
            out.upper = (math.exp(a.affine[1]), 0.0)
        return out

    def _max(self, node):
        return self._extreme(node, "max")

    def _min(self, node):
        return self._extreme(node, "min")

    def _extreme(self, node, which):
        infos = [self(a) for a in node.args]
        sing, kinks = _merge_lists(*infos)
        out = _Info(radius=max([i.radius for i in infos] + [1.0]), singular=sing, kinks=kinks,
                    discontinuous=any(i.discontinuous for i in infos))
        if self.dim == 1 and len(node.args) == 2:
            affs = [i.affine for i in infos]
            if all(a is not None for a in affs) and affs[0][0] != affs[1][0]:
                out.kinks.append((affs[1][1] - affs[0][1]) / (affs[0][0] - affs[1][0]))
        if which == "max":
            out.nonneg = any(i.nonneg for i in infos)
        else:
            out.nonneg = all(i.nonneg for i in infos)
        ups = infos[0]
        for other in infos[1:]:
            up, ex = _combine_upper(ups, other, ups.support, other.support)
            ups = _Info(upper=up, expo=ex, radius=out.radius)
        out.upper, out.expo = ups.upper, ups.expo
        return out


def _lift_neg(node: Node) -> Node:
    """Rewrite ``(-a) * b`` and ``a * (-b)`` as ``-(a * b)`` (same value, easier inference)."""
    args = tuple(_lift_neg(a) for a in node.args)
    node = Node(node.op, args, node.value, node.pos)
    if node.op in ("*", "/"):
        a, b = args
        flips = 0
        if a.op == "neg":
            a, flips = a.args[0], flips + 1
        if b.op == "neg":
            b, flips = b.args[0], flips + 1
        if flips:
            inner = Node(node.op, (a, b), pos=node.pos)
            return Node("neg", (inner,), pos=node.pos) if flips == 1 else inner
    if node.op == "neg" and args[0].op == "neg":
        return args[0].args[0]
    return node


def _same(a: Node, b: Node) -> bool:
    return (a.op == b.op and a.value == b.value and len(a.args) == len(b.args)
            and all(_same(x, y) for x, y in zip(a.args, b.args)))


def _root(node, infer):
    """Zero of an affine 1-d subtree (also through max(L, 0))."""
    if node.op == "max" and len(node.args) == 2:
        for a, b in (node.args, node.args[::-1]):
            if _const(b) == 0.0:
                node = a
                break
    aff = infer(node).affine
    if aff is None or aff[0] == 0:
        return None
    return -aff[1] / aff[0]


def _combine_upper(a: _Info, b: _Info, sa, sb):
    """Upper bound of |g1| + |g2| from the pieces (compactly supported parts are free)."""
    cands = []
    for info, sup in ((a, sa), (b, sb)):
        if sup is not None and sup != "zero":
            continue
        cands.append(info)
    if not cands:
        return (max((a.upper or (0, 0))[0], (b.upper or (0, 0))[0]), 0.0), None
    if all(c.expo for c in cands):
        C = sum(c.expo[0] for c in cands)
        rate = min(c.expo[1] for c in cands)
        pw = min(c.expo[2] for c in cands)
        return None, (C, rate, pw)
    ups = []
    for c in cands:
        if c.upper is not None:
            ups.append(c.upper)
        elif c.expo is not None:
            ups.append((c.expo[0], math.inf))
        else:
            return None, None
    eta = min(u[1] for u in ups)
    return (sum(u[0] for u in ups), eta), None


def parse_kernel(expr: str, dim: int = 1) -> Kernel:
    """Parse ``expr`` into a :class:`Kernel` of dimension ``dim``."""
    if dim < 1:
        raise DimensionError("dimension must be >= 1")
    tree = _lift_neg(_Parser(expr, dim).parse())
    func = _compile(tree)
    info = _Infer(dim)(tree)
    support = info.support if info.support not in (None, "zero") else None
    if info.support == "zero":
        support = (np.zeros(dim), np.zeros(dim) + 1e-300)
    decay = None
    if support is None:
        R = max(info.radius, 1.0)
        if info.expo is not None:
            C, rate, pw = info.expo
            decay = Decay(C=C, kind="exp", rate=rate, power=pw, radius=R, source="inferred")
        elif info.upper is not None and info.upper[1] > 0:
            C, eta = info.upper
            decay = Decay(C=C, eta=eta, radius=R, source="inferred")
    bps = [()] * dim
    if dim == 1:
        bps = [sorted(set(float(v) for v in info.kinks + info.singular if np.isfinite(v)))]
    continuous = not info.discontinuous and not info.singular
    return Kernel(func, dim, support, decay, bps, continuous, expr,
                  sorted(set(info.singular)) if dim == 1 else ())
