"""Weight vectors, the algebras A_tau and the minimal-weight computations."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from errors import NonElementaryGenerator, RhoTauNotNatural, YImageNotIntegral, ZeroPolynomial
from models.ring import X, Poly


class Order(Enum):
    LESS = 'less'
    EQUAL = 'equal'
    GREATER = 'greater'
    INCOMPARABLE = 'incomparable'


@dataclass(frozen=True)
class WeightVector:
    """A vector in Z^n ordered componentwise; natural when every entry is >= 0."""

    values: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'values', tuple(int(v) for v in self.values))

    @classmethod
    def of(cls, *values: int) -> 'WeightVector':
        return cls(tuple(values))

    @classmethod
    def zero(cls, n: int) -> 'WeightVector':
        return cls((0,) * n)

    @classmethod
    def basis(cls, n: int, k: int, scale: int = 1) -> 'WeightVector':
        values = [0] * n
        values[k] = scale
        return cls(tuple(values))

    @property
    def natural(self) -> bool:
        return all(v >= 0 for v in self.values)

    def require_natural(self, what: str = 'weight') -> 'WeightVector':
        if not self.natural:
            raise RhoTauNotNatural(f"{what} {list(self.values)} has negative entries",
                                   weight=list(self.values))
        return self

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, k: int) -> int:
        return self.values[k]

    def __add__(self, other: 'WeightVector') -> 'WeightVector':
        return WeightVector(tuple(a + b for a, b in zip(self.values, other.values)))

    def __sub__(self, other: 'WeightVector') -> 'WeightVector':
        return WeightVector(tuple(a - b for a, b in zip(self.values, other.values)))

    def with_entry(self, k: int, value: int) -> 'WeightVector':
        values = list(self.values)
        values[k] = value
        return WeightVector(tuple(values))

    def compare(self, other: 'WeightVector') -> Order:
        if self.values == other.values:
            return Order.EQUAL
        if all(a <= b for a, b in zip(self.values, other.values)):
            return Order.LESS
        if all(a >= b for a, b in zip(self.values, other.values)):
            return Order.GREATER
        return Order.INCOMPARABLE

    def __le__(self, other: 'WeightVector') -> bool:
        return self.compare(other) in (Order.LESS, Order.EQUAL)

    def __lt__(self, other: 'WeightVector') -> bool:
        return self.compare(other) is Order.LESS

    def __ge__(self, other: 'WeightVector') -> bool:
        return self.compare(other) in (Order.GREATER, Order.EQUAL)

    def __gt__(self, other: 'WeightVector') -> bool:
        return self.compare(other) is Order.GREATER

    def rank_one_gap(self, other: 'WeightVector') -> Union[Tuple[int, int], None]:
        """For other >= self differing in at most one slot: (k, delta); else None."""
        diff = [b - a for a, b in zip(self.values, other.values)]
        if any(d < 0 for d in diff):
            return None
        nonzero = [k for k, d in enumerate(diff) if d]
        if len(nonzero) > 1:
            return None
        if not nonzero:
            return 0, 0
        return nonzero[0], diff[nonzero[0]]

    def to_list(self) -> List[int]:
        return list(self.values)

    def __str__(self) -> str:
        return '(' + ','.join(str(v) for v in self.values) + ')'


def as_weight(tau: Union[WeightVector, Sequence[int]]) -> WeightVector:
    return tau if isinstance(tau, WeightVector) else WeightVector(tuple(tau))


def _gap(poly: Poly, tau: WeightVector) -> Union[int, float]:
    """max over terms of (sum t_k b_k - a); -inf for zero."""
    if not poly.terms:
        return -math.inf
    z_indices = poly.ctx.z_indices
    return max(sum(t * exp[i] for t, i in zip(tau.values, z_indices)) - exp[X]
               for exp in poly.terms)


def a_tau_member(poly: Poly, tau: WeightVector) -> bool:
    """Membership in A_tau = R^[m][x^t1 z1, ..., x^tn zn] by the monomial criterion."""
    return _gap(poly, as_weight(tau)) <= 0


def a_tau_deficiency(poly: Poly, tau: WeightVector) -> int:
    if poly.is_zero():
        raise ZeroPolynomial("Deficiency of the zero polynomial is undefined")
    return max(0, _gap(poly, as_weight(tau)))


def required_weight(poly: Poly, tau: WeightVector) -> Union[int, float]:
    """Least integer s with x^s * poly in A_tau, unclamped; -inf for zero."""
    return _gap(poly, as_weight(tau))


def minimal_tau(endo) -> WeightVector:
    """Least tau with endo(A_tau) inside R^[m+n]."""
    ctx = endo.ctx
    for j in range(ctx.m):
        image = endo.images[j]
        if not image.is_over_r():
            raise YImageNotIntegral(f"Image of {ctx.y_names[j]} is not over R",
                                    slot=ctx.y_names[j], image=image.render())
    values = []
    for k in range(ctx.n):
        order = endo.images[ctx.z_slot(k)].x_order()
        values.append(0 if order == math.inf else max(0, -order))
    return WeightVector(tuple(values))


@dataclass(frozen=True)
class SigmaSequence:
    sigmas: Tuple[WeightVector, ...]
    monotone: bool

    def to_list(self) -> List[List[int]]:
        return [sigma.to_list() for sigma in self.sigmas]


def sigma_sequence(generators: Iterable, ctx) -> SigmaSequence:
    """Minimal chain with Phi_i(A_sigma_i) inside A_sigma_{i+1}, sigma_{q+1} = 0."""
    generators = list(generators)
    current = WeightVector.zero(ctx.n)
    sigmas: List[WeightVector] = []
    for generator in reversed(generators):
        slot = getattr(generator, 'slot', None)
        if getattr(generator, 'kind', None) != 'elementary' or not ctx.is_z_slot(slot):
            raise NonElementaryGenerator("sigma_sequence needs elementaries in z-variables",
                                         generator=repr(generator))
        k = slot - ctx.m
        need = required_weight(generator.poly, current)
        value = current[k] if need == -math.inf else max(current[k], int(need))
        current = current.with_entry(k, value)
        sigmas.append(current)
    sigmas.reverse()
    monotone = all(a >= b for a, b in zip(sigmas, sigmas[1:]))
    return SigmaSequence(sigmas=tuple(sigmas), monotone=monotone)


def rho_apply_tau(rho, tau: WeightVector) -> WeightVector:
    """rho(tau)_j = t_{perm^-1(j)} + r_j; may leave N^n."""
    tau = as_weight(tau)
    values = [0] * len(tau)
    for i, target in enumerate(rho.perm):
        values[target] = tau[i] + rho.shifts[target]
    return WeightVector(tuple(values))


def sigma_box(tau: WeightVector, exhaustive_limit: int = 4096, samples: int = 64,
              seed: int = 0) -> List[WeightVector]:
    """All sigma with 0 <= sigma <= tau, or the corners plus a seeded sample."""
    tau = as_weight(tau).require_natural()
    size = 1
    for t in tau:
        size *= t + 1
    if size <= exhaustive_limit:
        return [WeightVector(values) for values in product(*(range(t + 1) for t in tau))]
    corners = {values for values in product(*((0, t) for t in tau))}
    rng = np.random.default_rng(seed)
    drawn = rng.integers(0, np.array(tau.values) + 1, size=(samples, len(tau)))
    points = corners | {tuple(int(v) for v in row) for row in drawn}
    return [WeightVector(values) for values in sorted(points)]
