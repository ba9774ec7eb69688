"""Piecewise complex potentials over geometric regions.

Line-oriented grammar::

    support <radius>
    piece <region>: <value>
    ...

Regions are built from disk(cx,cy;r), annulus(r1;r2), sector(t1;t2),
rect(x1,x2;y1,y2) and the combinators ``&`` (intersection, binds tighter)
and ``|`` (union).  Region arguments are constant expressions (``pi``
allowed).  Values are complex expressions in x, y, r, theta with + - * /,
integer ``^`` powers, exp(), abs(), literals like ``2``, ``1.5i`` or
``1+2i``, and the imaginary unit ``i``.

Pieces are ordered: the first region containing a point wins, which pins
down values on shared region boundaries (a measure-zero set that the FEM
quadrature never resolves anyway).  Points outside every piece get 0.
"""

import numpy as np

from .errors import EvalError, PotentialSyntaxError, SemanticError

TWO_PI = 2.0 * np.pi

_VARIABLES = ("x", "y", "r", "theta")


# ---------------------------------------------------------------- tokenizer

class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"{self.kind}({self.text})"


def _tokenize(text, line_no):
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                seen_dot |= text[j] == "."
                j += 1
            if j < n and text[j] in "eE" and j + 1 < n and (
                    text[j + 1].isdigit() or (text[j + 1] in "+-" and j + 2 < n and text[j + 2].isdigit())):
                j += 2
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] == "i":
                tokens.append(_Token("imag", text[i:j], line_no, i + 1))
                j += 1
            else:
                tokens.append(_Token("number", text[i:j], line_no, i + 1))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("name", text[i:j], line_no, i + 1))
            i = j
            continue
        if c in "+-*/^(),;&|:":
            tokens.append(_Token(c, c, line_no, i + 1))
            i += 1
            continue
        raise PotentialSyntaxError(f"unexpected character {c!r}", line_no, i + 1)
    tokens.append(_Token("end", "", line_no, n + 1))
    return tokens


# ------------------------------------------------------------- expressions

class Expr:
    """Node of a value-expression tree; evaluates on numpy arrays."""

    def eval(self, env):
        raise NotImplementedError

    def free_names(self):
        return set()


class Const(Expr):
    def __init__(self, value):
        self.value = complex(value)

    def eval(self, env):
        return self.value

    def pretty(self):
        v = self.value
        if v.imag == 0:
            return _fmt(v.real)
        if v.real == 0:
            return f"{_fmt(v.imag)}i"
        sign = "+" if v.imag >= 0 else "-"
        return f"({_fmt(v.real)}{sign}{_fmt(abs(v.imag))}i)"


class Var(Expr):
    def __init__(self, name):
        self.name = name

    def eval(self, env):
        return env[self.name]

    def free_names(self):
        return {self.name}

    def pretty(self):
        return self.name


class Unary(Expr):
    def __init__(self, op, arg):
        self.op = op
        self.arg = arg

    def eval(self, env):
        v = self.arg.eval(env)
        return -v if self.op == "-" else v

    def free_names(self):
        return self.arg.free_names()

    def pretty(self):
        return f"(-{self.arg.pretty()})"


class Binary(Expr):
    def __init__(self, op, left, right):
        self.op = op
        self.left = left
        self.right = right

    def eval(self, env):
        a = self.left.eval(env)
        b = self.right.eval(env)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.asarray(a, dtype=complex) / b if np.ndim(a) or np.ndim(b) else _scalar_div(a, b)
        raise EvalError(f"unknown operator {self.op}")

    def free_names(self):
        return self.left.free_names() | self.right.free_names()

    def pretty(self):
        return f"({self.left.pretty()} {self.op} {self.right.pretty()})"


def _scalar_div(a, b):
    if b == 0:
        raise EvalError("division by zero")
    return a / b


class Power(Expr):
    def __init__(self, base, exponent):
        self.base = base
        self.exponent = exponent  # integer

    def eval(self, env):
        return self.base.eval(env) ** self.exponent

    def free_names(self):
        return self.base.free_names()

    def pretty(self):
        return f"({self.base.pretty()})^{self.exponent}"


class Call(Expr):
    _FUNCS = {"exp": np.exp, "abs": np.abs}

    def __init__(self, name, arg):
        self.name = name
        self.arg = arg

    def eval(self, env):
        with np.errstate(over="ignore", invalid="ignore"):
            return self._FUNCS[self.name](self.arg.eval(env))

    def free_names(self):
        return self.arg.free_names()

    def pretty(self):
        return f"{self.name}({self.arg.pretty()})"


def _fmt(v):
    return repr(float(v))


# ------------------------------------------------------------------ regions

class Region:
    """Point-set predicate; contains() takes arrays x, y (plus r, theta)."""

    def contains(self, env):
        raise NotImplementedError

    def bounding_radius(self):
        """Radius of a disk at the origin containing the region (inf if unbounded)."""
        raise NotImplementedError


class Disk(Region):
    def __init__(self, cx, cy, r):
        if r <= 0:
            raise SemanticError(f"disk radius must be positive, got {r}")
        self.cx, self.cy, self.r = cx, cy, r

    def contains(self, env):
        return (env["x"] - self.cx) ** 2 + (env["y"] - self.cy) ** 2 <= self.r ** 2

    def bounding_radius(self):
        return np.hypot(self.cx, self.cy) + self.r

    def pretty(self):
        return f"disk({_fmt(self.cx)},{_fmt(self.cy)};{_fmt(self.r)})"


class Annulus(Region):
    def __init__(self, r_in, r_out):
        if not 0 <= r_in < r_out:
            raise SemanticError(f"annulus needs 0 <= r_in < r_out, got {r_in}, {r_out}")
        self.r_in, self.r_out = r_in, r_out

    def contains(self, env):
        return (env["r"] >= self.r_in) & (env["r"] <= self.r_out)

    def bounding_radius(self):
        return self.r_out

    def pretty(self):
        return f"annulus({_fmt(self.r_in)};{_fmt(self.r_out)})"


class Sector(Region):
    """Infinite wedge t1 <= theta <= t2 (closed; combine with a bounded set)."""

    def __init__(self, t1, t2):
        if not t1 < t2:
            raise SemanticError(f"sector needs t1 < t2, got {t1}, {t2}")
        if t2 - t1 > TWO_PI + 1e-12:
            raise SemanticError("sector spans more than a full turn")
        self.t1, self.t2 = t1, t2

    def contains(self, env):
        th = env["theta"]
        hit = (th >= self.t1) & (th <= self.t2)
        hit |= (th + TWO_PI >= self.t1) & (th + TWO_PI <= self.t2)
        hit |= (th - TWO_PI >= self.t1) & (th - TWO_PI <= self.t2)
        return hit

    def bounding_radius(self):
        return np.inf

    def pretty(self):
        return f"sector({_fmt(self.t1)};{_fmt(self.t2)})"


class Rect(Region):
    def __init__(self, x1, x2, y1, y2):
        if not (x1 < x2 and y1 < y2):
            raise SemanticError("rect needs x1 < x2 and y1 < y2")
        self.x1, self.x2, self.y1, self.y2 = x1, x2, y1, y2

    def contains(self, env):
        return ((env["x"] >= self.x1) & (env["x"] <= self.x2)
                & (env["y"] >= self.y1) & (env["y"] <= self.y2))

    def bounding_radius(self):
        corners = [(self.x1, self.y1), (self.x1, self.y2), (self.x2, self.y1), (self.x2, self.y2)]
        return max(np.hypot(cx, cy) for cx, cy in corners)

    def pretty(self):
        return f"rect({_fmt(self.x1)},{_fmt(self.x2)};{_fmt(self.y1)},{_fmt(self.y2)})"


class Intersection(Region):
    def __init__(self, a, b):
        self.a, self.b = a, b

    def contains(self, env):
        return self.a.contains(env) & self.b.contains(env)

    def bounding_radius(self):
        return min(self.a.bounding_radius(), self.b.bounding_radius())

    def pretty(self):
        return f"{self.a.pretty()} & {self.b.pretty()}"


class Union(Region):
    def __init__(self, a, b):
        self.a, self.b = a, b

    def contains(self, env):
        return self.a.contains(env) | self.b.contains(env)

    def bounding_radius(self):
        return max(self.a.bounding_radius(), self.b.bounding_radius())

    def pretty(self):
        return f"({self.a.pretty()} | {self.b.pretty()})"


# -------------------------------------------------------------------- parser

class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.next()
        if tok.kind != kind:
            raise PotentialSyntaxError(f"expected {kind!r}, found {tok.text!r}", tok.line, tok.col)
        return tok

    # value expressions: + - over * / over unary over ^ over atoms
    def parse_expr(self):
        node = self.parse_term()
        while self.peek().kind in ("+", "-"):
            op = self.next().kind
            node = Binary(op, node, self.parse_term())
        return node

    def parse_term(self):
        node = self.parse_unary()
        while self.peek().kind in ("*", "/"):
            op = self.next().kind
            node = Binary(op, node, self.parse_unary())
        return node

    def parse_unary(self):
        if self.peek().kind == "-":
            self.next()
            return Unary("-", self.parse_unary())
        if self.peek().kind == "+":
            self.next()
            return self.parse_unary()
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        if self.peek().kind == "^":
            tok = self.next()
            sign = 1
            if self.peek().kind == "-":
                self.next()
                sign = -1
            exp_tok = self.expect("number")
            try:
                exponent = int(exp_tok.text)
            except ValueError:
                raise PotentialSyntaxError("power exponent must be an integer",
                                           exp_tok.line, exp_tok.col)
            return Power(base, sign * exponent)
        return base

    def parse_atom(self):
        tok = self.next()
        if tok.kind == "number":
            return Const(float(tok.text))
        if tok.kind == "imag":
            return Const(float(tok.text) * 1j)
        if tok.kind == "(":
            node = self.parse_expr()
            self.expect(")")
            return node
        if tok.kind == "name":
            if tok.text in Call._FUNCS:
                self.expect("(")
                arg = self.parse_expr()
                self.expect(")")
                return Call(tok.text, arg)
            if tok.text == "i":
                return Const(1j)
            if tok.text == "pi":
                return Const(np.pi)
            if tok.text in _VARIABLES:
                return Var(tok.text)
            raise SemanticError(f"unknown identifier {tok.text!r} (line {tok.line}, col {tok.col})")
        raise PotentialSyntaxError(f"unexpected token {tok.text!r}", tok.line, tok.col)

    # regions: '|' over '&' over constructors
    def parse_region(self):
        node = self.parse_region_term()
        while self.peek().kind == "|":
            self.next()
            node = Union(node, self.parse_region_term())
        return node

    def parse_region_term(self):
        node = self.parse_region_atom()
        while self.peek().kind == "&":
            self.next()
            node = Intersection(node, self.parse_region_atom())
        return node

    def parse_region_atom(self):
        tok = self.peek()
        if tok.kind == "(":
            self.next()
            node = self.parse_region()
            self.expect(")")
            return node
        if tok.kind != "name":
            raise PotentialSyntaxError(f"expected a region, found {tok.text!r}", tok.line, tok.col)
        name = self.next().text
        self.expect("(")
        groups = [[]]
        groups[0].append(self.parse_const())
        while self.peek().kind in (",", ";"):
            sep = self.next().kind
            if sep == ";":
                groups.append([])
            groups[-1].append(self.parse_const())
        close = self.expect(")")
        try:
            return self._build_region(name, groups)
        except (TypeError, IndexError):
            raise PotentialSyntaxError(f"wrong arguments for {name}()", close.line, close.col)

    def parse_const(self):
        node = self.parse_expr()
        names = node.free_names()
        if names:
            tok = self.peek()
            raise PotentialSyntaxError(f"region arguments must be constant, found {sorted(names)}",
                                       tok.line, tok.col)
        value = node.eval({})
        if abs(value.imag) > 0:
            tok = self.peek()
            raise PotentialSyntaxError("region arguments must be real", tok.line, tok.col)
        return value.real

    @staticmethod
    def _build_region(name, groups):
        if name == "disk":
            (cx, cy), (r,) = groups
            return Disk(cx, cy, r)
        if name == "annulus":
            (r1,), (r2,) = groups
            return Annulus(r1, r2)
        if name == "sector":
            (t1,), (t2,) = groups
            return Sector(t1, t2)
        if name == "rect":
            (x1, x2), (y1, y2) = groups
            return Rect(x1, x2, y1, y2)
        raise SemanticError(f"unknown region constructor {name!r}")


# ------------------------------------------------------------ the potential

class PotentialSpec:
    """Ordered (region, expression) pieces with a declared support radius."""

    def __init__(self, support_radius, pieces):
        self.support_radius = float(support_radius)
        self.pieces = list(pieces)
        for region, _ in self.pieces:
            bound = region.bounding_radius()
            if not np.isfinite(bound):
                raise SemanticError(f"unbounded piece region {region.pretty()}")
            if bound > self.support_radius + 1e-9:
                raise SemanticError(
                    f"piece region {region.pretty()} (radius {bound:.6g}) exceeds "
                    f"declared support {self.support_radius:.6g}")

    def pretty(self):
        lines = [f"support {_fmt(self.support_radius)}"]
        for region, expr in self.pieces:
            lines.append(f"piece {region.pretty()}: {expr.pretty()}")
        return "\n".join(lines) + "\n"

    def is_constant_disk(self):
        """(V0, r0) when the spec is a single constant on an origin disk, else None."""
        if len(self.pieces) != 1:
            return None
        region, expr = self.pieces[0]
        if isinstance(region, Disk) and region.cx == 0 and region.cy == 0 \
                and isinstance(expr, Const):
            return expr.value, region.r
        return None


def parse_potential(text: str) -> PotentialSpec:
    support = None
    pieces = []
    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = _tokenize(line, line_no)
        parser = _Parser(tokens)
        head = parser.expect("name")
        if head.text == "support":
            if support is not None:
                raise PotentialSyntaxError("duplicate support line", line_no, 1)
            support = parser.parse_const()
            parser.expect("end")
        elif head.text == "piece":
            region = parser.parse_region()
            parser.expect(":")
            expr = parser.parse_expr()
            parser.expect("end")
            bad = expr.free_names() - set(_VARIABLES)
            if bad:
                raise SemanticError(f"unknown identifiers {sorted(bad)} on line {line_no}")
            pieces.append((region, expr))
        else:
            raise PotentialSyntaxError(f"expected 'support' or 'piece', found {head.text!r}",
                                       line_no, head.col)
    if support is None:
        raise SemanticError("missing 'support <radius>' header")
    return PotentialSpec(support, pieces)


def eval_potential_grid(spec: PotentialSpec, x, y) -> np.ndarray:
    """Vectorized piecewise evaluation; 0 outside all pieces."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    env = {
        "x": x,
        "y": y,
        "r": np.hypot(x, y),
        "theta": np.mod(np.arctan2(y, x), TWO_PI),
    }
    out = np.zeros(x.shape, dtype=complex)
    remaining = np.ones(x.shape, dtype=bool)
    for region, expr in spec.pieces:
        mask = region.contains(env) & remaining
        if not np.any(mask):
            continue
        sub = {k: v[mask] for k, v in env.items()}
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            vals = np.broadcast_to(np.asarray(expr.eval(sub), dtype=complex), sub["x"].shape)
        if not np.all(np.isfinite(vals)):
            i = int(np.argmin(np.isfinite(vals.real) & np.isfinite(vals.imag)))
            raise EvalError(
                f"potential not finite at point ({sub['x'].ravel()[i]:.6g}, {sub['y'].ravel()[i]:.6g})")
        out[mask] = vals
        remaining &= ~mask
    return out


def eval_potential(spec: PotentialSpec, point) -> complex:
    """Piecewise value at a single point (x, y)."""
    x, y = point
    return complex(eval_potential_grid(spec, np.array([x]), np.array([y]))[0])
