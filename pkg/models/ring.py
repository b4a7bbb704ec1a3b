"""Exact polynomial arithmetic over R = A[x] and its localization S = A[x, 1/x].

Variables are laid out as (x, u1..up, y1..ym, z1..zn).  Coefficients are
``fractions.Fraction``; only the x-exponent may be negative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from operator import add
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

from errors import (
    ContextMismatch,
    MissingImage,
    NegativePower,
    NotOverR,
    PolySyntaxError,
    UnknownVariable,
)

Exponent = Tuple[int, ...]
Scalar = Union[int, Fraction]

X = 0


@dataclass(frozen=True)
class RingContext:
    """Shape of the ring A[x][y1..ym, z1..zn] with A = Q[u1..up]."""

    m: int = 1
    n: int = 1
    p: int = 0
    y_names: Optional[Tuple[str, ...]] = None
    z_names: Optional[Tuple[str, ...]] = None
    u_names: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        if self.m < 0 or self.n < 1 or self.p < 0:
            raise ValueError(f"Invalid context sizes m={self.m}, n={self.n}, p={self.p}")
        defaults = {
            'y_names': _default_names('y', self.m),
            'z_names': _default_names('z', self.n),
            'u_names': tuple(f'u{i + 1}' for i in range(self.p)),
        }
        for attr, default in defaults.items():
            value = getattr(self, attr)
            object.__setattr__(self, attr, tuple(value) if value is not None else default)
        if (len(self.y_names), len(self.z_names), len(self.u_names)) != (self.m, self.n, self.p):
            raise ValueError("Variable name lists do not match the context sizes")
        names = self.variables
        if len(set(names)) != len(names):
            raise ValueError(f"Variable names must be distinct: {names}")

    @property
    def variables(self) -> Tuple[str, ...]:
        return ('x',) + self.u_names + self.y_names + self.z_names

    @property
    def nvars(self) -> int:
        return 1 + self.p + self.m + self.n

    @property
    def slot_count(self) -> int:
        return self.m + self.n

    def index_of(self, name: str) -> int:
        try:
            return self.variables.index(name)
        except ValueError:
            raise UnknownVariable(name) from None

    def u_index(self, i: int) -> int:
        return 1 + i

    def y_index(self, j: int) -> int:
        return 1 + self.p + j

    def z_index(self, k: int) -> int:
        return 1 + self.p + self.m + k

    def slot_index(self, slot: int) -> int:
        """Variable index of slot ``slot``; slots are y1..ym followed by z1..zn."""
        return 1 + self.p + slot

    def z_slot(self, k: int) -> int:
        return self.m + k

    def slot_name(self, slot: int) -> str:
        return self.variables[self.slot_index(slot)]

    def is_z_slot(self, slot: int) -> bool:
        return self.m <= slot < self.m + self.n

    @property
    def z_indices(self) -> range:
        return range(1 + self.p + self.m, self.nvars)

    @property
    def y_indices(self) -> range:
        return range(1 + self.p, 1 + self.p + self.m)

    @property
    def yz_indices(self) -> range:
        return range(1 + self.p, self.nvars)

    def to_dict(self) -> Dict:
        return {
            'm': self.m, 'n': self.n, 'p': self.p,
            'y_names': list(self.y_names), 'z_names': list(self.z_names),
            'u_names': list(self.u_names),
        }


def _default_names(stem: str, count: int) -> Tuple[str, ...]:
    if count == 1:
        return (stem,)
    return tuple(f'{stem}{i + 1}' for i in range(count))


def _check_same(a: 'Poly', b: 'Poly'):
    if a.ctx != b.ctx:
        raise ContextMismatch("Operands belong to different ring contexts",
                              left=a.ctx.variables, right=b.ctx.variables)


def _add_exp(a: Exponent, b: Exponent) -> Exponent:
    return tuple(map(add, a, b))


class Poly:
    """Immutable sparse polynomial: exponent tuple -> nonzero Fraction."""

    __slots__ = ('ctx', 'terms', '_hash')

    def __init__(self, ctx: RingContext, terms: Optional[Mapping[Exponent, Scalar]] = None):
        self.ctx = ctx
        clean: Dict[Exponent, Fraction] = {}
        if terms:
            for exp, coeff in terms.items():
                if coeff:
                    clean[exp] = coeff if isinstance(coeff, Fraction) else Fraction(coeff)
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, ctx: RingContext, terms: Dict[Exponent, Fraction]) -> 'Poly':
        poly = cls.__new__(cls)
        poly.ctx = ctx
        poly.terms = terms
        poly._hash = None
        return poly

    # Constructors

    @classmethod
    def zero(cls, ctx: RingContext) -> 'Poly':
        return cls._raw(ctx, {})

    @classmethod
    def constant(cls, ctx: RingContext, value: Scalar) -> 'Poly':
        return cls(ctx, {(0,) * ctx.nvars: value})

    @classmethod
    def one(cls, ctx: RingContext) -> 'Poly':
        return cls.constant(ctx, 1)

    @classmethod
    def monomial(cls, ctx: RingContext, powers: Mapping[int, int], coeff: Scalar = 1) -> 'Poly':
        exp = [0] * ctx.nvars
        for index, power in powers.items():
            exp[index] += power
        return cls(ctx, {tuple(exp): coeff})

    @classmethod
    def var(cls, ctx: RingContext, name_or_index: Union[str, int]) -> 'Poly':
        index = ctx.index_of(name_or_index) if isinstance(name_or_index, str) else name_or_index
        return cls.monomial(ctx, {index: 1})

    @classmethod
    def x_power(cls, ctx: RingContext, k: int, coeff: Scalar = 1) -> 'Poly':
        return cls.monomial(ctx, {X: k}, coeff)

    # Basic queries

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[Tuple[Exponent, Fraction]]:
        return iter(self.sorted_terms())

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.ctx == other.ctx and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.terms == Poly.constant(self.ctx, other).terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.ctx, frozenset(self.terms.items())))
        return self._hash

    def x_order(self) -> Union[int, float]:
        """Minimum x-exponent; ``math.inf`` for the zero polynomial."""
        if not self.terms:
            return math.inf
        return min(exp[X] for exp in self.terms)

    def is_over_r(self) -> bool:
        return self.x_order() >= 0

    def is_constant(self) -> bool:
        return all(not any(exp) for exp in self.terms)

    def constant_value(self) -> Optional[Fraction]:
        """The rational value of a constant polynomial, else None."""
        if not self.terms:
            return Fraction(0)
        if len(self.terms) == 1:
            exp, coeff = next(iter(self.terms.items()))
            if not any(exp):
                return coeff
        return None

    def is_free_of(self, indices: Iterable[int]) -> bool:
        indices = tuple(indices)
        return all(exp[i] == 0 for exp in self.terms for i in indices)

    def uses(self, index: int) -> bool:
        return any(exp[index] for exp in self.terms)

    def degree_in(self, index: int) -> int:
        return max((exp[index] for exp in self.terms), default=0)

    def total_degree_yz(self) -> Union[int, float]:
        """Total degree in the (y, z) variables; ``-math.inf`` for zero."""
        if not self.terms:
            return -math.inf
        yz = self.ctx.yz_indices
        return max(sum(exp[i] for i in yz) for exp in self.terms)

    def sorted_terms(self) -> List[Tuple[Exponent, Fraction]]:
        return sorted(self.terms.items(), key=lambda item: _order_key(item[0]), reverse=True)

    # Arithmetic

    def _coerce(self, other) -> 'Poly':
        if isinstance(other, Poly):
            _check_same(self, other)
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.constant(self.ctx, other)
        raise TypeError(f"Cannot combine Poly with {type(other).__name__}")

    def __add__(self, other) -> 'Poly':
        other = self._coerce(other)
        if not other.terms:
            return self
        result = dict(self.terms)
        for exp, coeff in other.terms.items():
            value = result.get(exp, 0) + coeff
            if value:
                result[exp] = value
            else:
                result.pop(exp, None)
        return Poly._raw(self.ctx, result)

    __radd__ = __add__

    def __neg__(self) -> 'Poly':
        return Poly._raw(self.ctx, {exp: -coeff for exp, coeff in self.terms.items()})

    def __sub__(self, other) -> 'Poly':
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> 'Poly':
        return self._coerce(other) - self

    def __mul__(self, other) -> 'Poly':
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        if not self.terms or not other.terms:
            return Poly.zero(self.ctx)
        if len(other.terms) == 1:
            (exp, coeff), = other.terms.items()
            return self.shift(exp, coeff)
        if len(self.terms) == 1:
            (exp, coeff), = self.terms.items()
            return other.shift(exp, coeff)
        result: Dict[Exponent, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exp = _add_exp(e1, e2)
                result[exp] = result.get(exp, 0) + c1 * c2
        return Poly(self.ctx, result)

    __rmul__ = __mul__

    def __pow__(self, power: int) -> 'Poly':
        if not isinstance(power, int):
            raise TypeError("Exponent must be an integer")
        if power < 0:
            monomial = self._as_x_monomial()
            if monomial is None:
                raise NegativePower(f"Negative power {power} of a non-monomial in x", power=power)
            k, coeff = monomial
            return Poly.x_power(self.ctx, k * power, Fraction(1) / coeff ** -power)
        result = Poly.one(self.ctx)
        base = self
        while power:
            if power & 1:
                result = result * base
            power >>= 1
            if power:
                base = base * base
        return result

    def __truediv__(self, other) -> 'Poly':
        """Division by a nonzero rational or by a monomial c*x^k."""
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return self.scale(Fraction(1) / Fraction(other))
        other = self._coerce(other)
        return self * (other ** -1)

    def _as_x_monomial(self) -> Optional[Tuple[int, Fraction]]:
        if len(self.terms) != 1:
            return None
        (exp, coeff), = self.terms.items()
        if any(exp[1:]):
            return None
        return exp[X], coeff

    def scale(self, factor: Scalar) -> 'Poly':
        if not factor:
            return Poly.zero(self.ctx)
        return Poly._raw(self.ctx, {exp: coeff * factor for exp, coeff in self.terms.items()})

    def shift(self, exp: Exponent, coeff: Scalar = 1) -> 'Poly':
        """Multiply by the monomial coeff * var^exp."""
        if not coeff:
            return Poly.zero(self.ctx)
        return Poly._raw(self.ctx, {_add_exp(e, exp): c * coeff for e, c in self.terms.items()})

    def times_x(self, k: int) -> 'Poly':
        if k == 0:
            return self
        shift = (k,) + (0,) * (self.ctx.nvars - 1)
        return self.shift(shift)

    # Structural operations

    def mod_x(self) -> 'Poly':
        """Image under x -> 0; requires the polynomial to lie over R."""
        if self.x_order() < 0:
            raise NotOverR("mod_x needs a polynomial over R", poly=self.render())
        return self.x_free_part()

    def x_free_part(self) -> 'Poly':
        return Poly._raw(self.ctx, {e: c for e, c in self.terms.items() if e[X] == 0})

    def split_by_var(self, index: int) -> Tuple['Poly', 'Poly']:
        """(terms free of the variable, terms involving it)."""
        free, bound = {}, {}
        for exp, coeff in self.terms.items():
            (bound if exp[index] else free)[exp] = coeff
        return Poly._raw(self.ctx, free), Poly._raw(self.ctx, bound)

    def filter_terms(self, predicate) -> 'Poly':
        return Poly._raw(self.ctx, {e: c for e, c in self.terms.items() if predicate(e)})

    def derivative(self, index: int) -> 'Poly':
        result = {}
        for exp, coeff in self.terms.items():
            power = exp[index]
            if power:
                lowered = list(exp)
                lowered[index] -= 1
                result[tuple(lowered)] = coeff * power
        return Poly._raw(self.ctx, result)

    def substitute(self, images: Union[Mapping[int, 'Poly'], Sequence[Optional['Poly']]]) -> 'Poly':
        """Ring-map evaluation: every variable index in ``images`` is replaced.

        Variables without an image map to themselves.  The x variable may not
        be given an image, so Laurent exponents stay meaningful.
        """
        if not isinstance(images, Mapping):
            images = {i: image for i, image in enumerate(images) if image is not None}
        if X in images:
            raise MissingImage("x is fixed by every substitution")
        images = {i: image for i, image in images.items()
                  if image is not None and image != Poly.var(self.ctx, i)}
        for image in images.values():
            _check_same(self, image)
        if not images or not self.terms:
            return self
        moved = sorted(images)

        grouped: Dict[Tuple[int, ...], Dict[Exponent, Fraction]] = {}
        for exp, coeff in self.terms.items():
            signature = tuple(exp[i] for i in moved)
            rest = list(exp)
            for i in moved:
                rest[i] = 0
            bucket = grouped.setdefault(signature, {})
            key = tuple(rest)
            bucket[key] = bucket.get(key, 0) + coeff

        power_cache: Dict[Tuple[int, int], Poly] = {}

        def image_power(i: int, k: int) -> Poly:
            key = (i, k)
            if key not in power_cache:
                if k == 1:
                    power_cache[key] = images[i]
                elif k % 2 == 0:
                    half = image_power(i, k // 2)
                    power_cache[key] = half * half
                else:
                    power_cache[key] = image_power(i, k - 1) * images[i]
            return power_cache[key]

        total: Dict[Exponent, Fraction] = {}
        for signature, rest in grouped.items():
            product = Poly.one(self.ctx)
            for i, k in zip(moved, signature):
                if k:
                    product = product * image_power(i, k)
            coefficient = Poly(self.ctx, rest)
            for exp, coeff in (coefficient * product).terms.items():
                total[exp] = total.get(exp, 0) + coeff
        return Poly(self.ctx, total)

    # Rendering

    def render(self) -> str:
        if not self.terms:
            return '0'
        pieces = []
        for position, (exp, coeff) in enumerate(self.sorted_terms()):
            body = _render_monomial(self.ctx, exp)
            magnitude = abs(coeff)
            if body and magnitude == 1:
                text = body
            elif body:
                text = f'{_render_scalar(magnitude)}*{body}'
            else:
                text = _render_scalar(magnitude)
            if position == 0:
                pieces.append(f'-{text}' if coeff < 0 else text)
            else:
                pieces.append(f' - {text}' if coeff < 0 else f' + {text}')
        return ''.join(pieces)

    def __str__(self) -> str:
        return self.render()

    def __repr__(self) -> str:
        return f'Poly({self.render()!r})'


def _order_key(exp: Exponent):
    body = exp[1:]
    return (sum(body), body, exp[X])


def _render_scalar(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f'{value.numerator}/{value.denominator}'


def _render_monomial(ctx: RingContext, exp: Exponent) -> str:
    factors = []
    for name, power in zip(ctx.variables, exp):
        if power == 1:
            factors.append(name)
        elif power:
            factors.append(f'{name}^{power}')
    return '*'.join(factors)


def poly_arith(op: str, a: Poly, b: Union[Poly, int]) -> Poly:
    """Dispatch helper for the add/sub/mul/pow operations."""
    operations = {
        'add': lambda: a + b,
        'sub': lambda: a - b,
        'mul': lambda: a * b,
        'pow': lambda: _checked_pow(a, b),
    }
    if op not in operations:
        raise ValueError(f"Unsupported operation: {op}")
    return operations[op]()


def _checked_pow(a: Poly, b) -> Poly:
    if not isinstance(b, int):
        raise TypeError("pow needs an integer exponent")
    if b < 0:
        raise NegativePower(f"Negative exponent {b}", power=b)
    return a ** b


def x_order(poly: Poly) -> Union[int, float]:
    return poly.x_order()


def mod_x(poly: Poly) -> Poly:
    return poly.mod_x()


def substitute(poly: Poly, images) -> Poly:
    return poly.substitute(images)


# Parsing

_GRAMMAR = r"""
    ?sum: product
        | sum "+" product   -> add
        | sum "-" product   -> sub
    ?product: unary
        | product "*" unary -> mul
        | product "/" unary -> div
    ?unary: power
        | "-" unary         -> neg
        | "+" unary
    ?power: atom
        | atom "^" EXPONENT -> pow
    ?atom: NUMBER           -> number
        | NAME              -> var
        | "(" sum ")"

    EXPONENT: /[+-]?\d+/
    NUMBER: /\d+/
    NAME: /[A-Za-z_][A-Za-z0-9_]*/

    %import common.WS
    %ignore WS
"""

_parser = Lark(_GRAMMAR, start='sum', parser='lalr', propagate_positions=True)


class _PolyBuilder(Transformer):
    def __init__(self, ctx: RingContext):
        super().__init__()
        self.ctx = ctx

    def number(self, children):
        return Poly.constant(self.ctx, int(children[0]))

    def var(self, children):
        token = children[0]
        try:
            return Poly.var(self.ctx, str(token))
        except UnknownVariable:
            raise UnknownVariable(str(token), token.start_pos) from None

    def add(self, children):
        return poly_arith('add', *children)

    def sub(self, children):
        return poly_arith('sub', *children)

    def mul(self, children):
        return poly_arith('mul', *children)

    @v_args(meta=True)
    def div(self, meta, children):
        numerator, denominator = children
        if denominator._as_x_monomial() is None:
            raise PolySyntaxError("Division is only allowed by constants or monomials in x",
                                  position=getattr(meta, 'start_pos', None))
        return numerator / denominator

    def neg(self, children):
        return -children[0]

    @v_args(meta=True)
    def pow(self, meta, children):
        base, exponent = children
        power = int(exponent)
        if power < 0 and base._as_x_monomial() is None:
            raise PolySyntaxError("Negative exponents are only allowed on monomials in x",
                                  position=exponent.start_pos)
        return base ** power


def parse_poly(text: str, ctx: RingContext) -> Poly:
    """Parse the polynomial grammar into a canonical ``Poly``."""
    try:
        tree = _parser.parse(text)
    except UnexpectedInput as exc:
        position = getattr(exc, 'pos_in_stream', None)
        if position is None or position < 0:
            position = len(text)
        raise PolySyntaxError(f"Syntax error at position {position}", position=position,
                              text=text) from None
    try:
        result = _PolyBuilder(ctx).transform(tree)
    except VisitError as exc:
        raise exc.orig_exc from None
    return result


# Jacobians and determinants

def determinant(matrix: Sequence[Sequence[Poly]], ctx: RingContext) -> Poly:
    """Laplace expansion along rows with minors memoized by column set."""
    size = len(matrix)
    if size == 0:
        return Poly.one(ctx)
    memo: Dict[Tuple[int, int], Poly] = {}

    def minor(row: int, used: int) -> Poly:
        if row == size:
            return Poly.one(ctx)
        key = (row, used)
        if key in memo:
            return memo[key]
        total = Poly.zero(ctx)
        sign = 1
        for col in range(size):
            if used & (1 << col):
                continue
            entry = matrix[row][col]
            if entry:
                term = entry * minor(row + 1, used | (1 << col))
                total = total + term if sign > 0 else total - term
            sign = -sign
        memo[key] = total
        return total

    return minor(0, 0)


@dataclass(frozen=True)
class JacobianReport:
    matrix: Tuple[Tuple[Poly, ...], ...]
    determinant: Poly

    @property
    def unit_value(self) -> Optional[Fraction]:
        """The determinant as a nonzero rational, or None if it is not one."""
        value = self.determinant.constant_value()
        if value is None or value == 0:
            return None
        return value

    def to_dict(self) -> Dict:
        return {
            'matrix': [[entry.render() for entry in row] for row in self.matrix],
            'determinant': self.determinant.render(),
        }


def jacobian(images: Sequence[Poly], ctx: RingContext) -> JacobianReport:
    """Jacobian of the slot images with respect to (y1..ym, z1..zn)."""
    if len(images) != ctx.slot_count:
        raise MissingImage(f"Expected {ctx.slot_count} images, got {len(images)}")
    columns = list(ctx.yz_indices)
    matrix = tuple(tuple(image.derivative(index) for index in columns) for image in images)
    return JacobianReport(matrix=matrix, determinant=determinant(matrix, ctx))
