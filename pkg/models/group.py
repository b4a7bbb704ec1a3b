"""Generator words, their evaluation to endomorphisms, inverses and weight conjugation.

Composition follows the word convention: for ``g1 o g2`` the image of a
variable v is g1(v) with every variable w replaced by g2(w).  Evaluating a
word therefore substitutes the generators' images from left to right.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from errors import ContextMismatch, InvalidGenerator, NotOverR, ShapeMismatch, WitnessNotInATau
from models.ring import X, JacobianReport, Poly, RingContext, determinant, jacobian
from models.weights import WeightVector, a_tau_member, as_weight, rho_apply_tau


@dataclass(frozen=True)
class Endo:
    """Images of (y1..ym, z1..zn); x and the u's are fixed."""

    ctx: RingContext
    images: Tuple[Poly, ...]

    def __post_init__(self):
        if len(self.images) != self.ctx.slot_count:
            raise InvalidGenerator(f"Endo needs {self.ctx.slot_count} images, got {len(self.images)}")
        for image in self.images:
            if image.ctx != self.ctx:
                raise ContextMismatch("Endo image from another context")

    @classmethod
    def identity(cls, ctx: RingContext) -> 'Endo':
        return cls(ctx, tuple(Poly.var(ctx, ctx.slot_index(s)) for s in range(ctx.slot_count)))

    @cached_property
    def substitution(self) -> Dict[int, Poly]:
        return {self.ctx.slot_index(s): image for s, image in enumerate(self.images)}

    def apply(self, poly: Poly) -> Poly:
        """phi(P): P with every slot variable replaced by its image."""
        return poly.substitute(self.substitution)

    def then(self, other: 'Endo') -> 'Endo':
        """self o other in word order."""
        _same_ctx(self.ctx, other.ctx)
        return Endo(self.ctx, tuple(other.apply(image) for image in self.images))

    def then_generator(self, generator: 'Generator') -> 'Endo':
        return self.then(generator.endo(self.ctx))

    def y_images(self) -> Tuple[Poly, ...]:
        return self.images[:self.ctx.m]

    def z_images(self) -> Tuple[Poly, ...]:
        return self.images[self.ctx.m:]

    def z_image(self, k: int) -> Poly:
        return self.images[self.ctx.z_slot(k)]

    def is_over_r(self) -> bool:
        return all(image.is_over_r() for image in self.images)

    def mod_x(self) -> 'Endo':
        return Endo(self.ctx, tuple(image.mod_x() for image in self.images))

    def is_identity(self) -> bool:
        return self == Endo.identity(self.ctx)

    def is_identity_mod_x(self) -> bool:
        return self.is_over_r() and self.mod_x().is_identity()

    def jacobian(self) -> JacobianReport:
        return jacobian(self.images, self.ctx)

    def render(self) -> List[str]:
        return [image.render() for image in self.images]

    def __str__(self) -> str:
        return '(' + ', '.join(self.render()) + ')'


def _same_ctx(a: RingContext, b: RingContext):
    if a != b:
        raise ContextMismatch("Operands belong to different ring contexts")


def endo_equal(a: Endo, b: Endo) -> bool:
    _same_ctx(a.ctx, b.ctx)
    return a.images == b.images


def _var(ctx: RingContext, slot: int) -> Poly:
    return Poly.var(ctx, ctx.slot_index(slot))


def _scale_z(ctx: RingContext, tau: WeightVector, sign: int) -> Dict[int, Poly]:
    return {ctx.z_index(k): Poly.monomial(ctx, {X: sign * t, ctx.z_index(k): 1})
            for k, t in enumerate(tau) if t}


class Generator:
    """Base class of the four generator kinds."""

    kind = 'generator'
    ctx: RingContext
    tame = True

    def endo(self, ctx: Optional[RingContext] = None) -> Endo:
        raise NotImplementedError

    def inverse(self) -> 'Generator':
        raise NotImplementedError

    def conjugate(self, tau: WeightVector, inverse: bool = False) -> List['Generator']:
        raise NotImplementedError

    def mod_x(self) -> 'Generator':
        raise NotImplementedError


@dataclass(frozen=True)
class Elementary(Generator):
    """slot -> slot + poly, with poly free of the slot variable."""

    ctx: RingContext
    slot: int
    poly: Poly
    kind = 'elementary'

    def __post_init__(self):
        if not 0 <= self.slot < self.ctx.slot_count:
            raise InvalidGenerator(f"Slot {self.slot} out of range")
        _same_ctx(self.ctx, self.poly.ctx)
        if self.poly.uses(self.ctx.slot_index(self.slot)):
            raise InvalidGenerator(
                f"Elementary in {self.ctx.slot_name(self.slot)} may not involve that variable",
                poly=self.poly.render())

    @classmethod
    def in_z(cls, ctx: RingContext, k: int, poly: Poly) -> 'Elementary':
        return cls(ctx, ctx.z_slot(k), poly)

    @property
    def is_z(self) -> bool:
        return self.ctx.is_z_slot(self.slot)

    @property
    def z_position(self) -> int:
        return self.slot - self.ctx.m

    @property
    def variable_index(self) -> int:
        return self.ctx.slot_index(self.slot)

    def is_identity(self) -> bool:
        return self.poly.is_zero()

    def endo(self, ctx: Optional[RingContext] = None) -> Endo:
        images = list(Endo.identity(self.ctx).images)
        images[self.slot] = images[self.slot] + self.poly
        return Endo(self.ctx, tuple(images))

    def inverse(self) -> 'Elementary':
        return Elementary(self.ctx, self.slot, -self.poly)

    def conjugate(self, tau: WeightVector, inverse: bool = False) -> List[Generator]:
        sign = -1 if inverse else 1
        scaled = self.poly.substitute(_scale_z(self.ctx, tau, sign))
        if self.is_z:
            scaled = scaled.times_x(-sign * tau[self.z_position])
        return [Elementary(self.ctx, self.slot, scaled)]

    def mod_x(self) -> 'Elementary':
        return Elementary(self.ctx, self.slot, self.poly.mod_x())

    def __str__(self) -> str:
        name = self.ctx.slot_name(self.slot)
        return f'({name} -> {name} + {self.poly.render()})'


@dataclass(frozen=True)
class Linear(Generator):
    """z_i -> sum_j matrix[i][j] z_j with z-free entries and a rational unit determinant."""

    ctx: RingContext
    matrix: Tuple[Tuple[Poly, ...], ...]
    kind = 'linear'

    def __post_init__(self):
        n = self.ctx.n
        if len(self.matrix) != n or any(len(row) != n for row in self.matrix):
            raise InvalidGenerator(f"Linear generator needs an {n}x{n} matrix")
        z = tuple(self.ctx.z_indices)
        for row in self.matrix:
            for entry in row:
                _same_ctx(self.ctx, entry.ctx)
                if not entry.is_free_of(z):
                    raise InvalidGenerator("Linear entries may not involve z-variables",
                                           entry=entry.render())
        if self.det_value is None:
            raise InvalidGenerator("Linear generator determinant is not a nonzero rational",
                                   determinant=self.determinant.render())

    @cached_property
    def determinant(self) -> Poly:
        return determinant(self.matrix, self.ctx)

    @property
    def det_value(self) -> Optional[Fraction]:
        value = self.determinant.constant_value()
        return value if value else None

    def endo(self, ctx: Optional[RingContext] = None) -> Endo:
        images = list(Endo.identity(self.ctx).images)
        z_vars = [Poly.var(self.ctx, i) for i in self.ctx.z_indices]
        for i, row in enumerate(self.matrix):
            image = Poly.zero(self.ctx)
            for entry, var in zip(row, z_vars):
                image = image + entry * var
            images[self.ctx.z_slot(i)] = image
        return Endo(self.ctx, tuple(images))

    def inverse(self) -> 'Linear':
        n = self.ctx.n
        inv_det = Fraction(1) / self.det_value
        cofactors = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                minor = [[self.matrix[r][c] for c in range(n) if c != j]
                         for r in range(n) if r != i]
                sign = 1 if (i + j) % 2 == 0 else -1
                cofactors[j][i] = determinant(minor, self.ctx).scale(sign * inv_det)
        return Linear(self.ctx, tuple(tuple(row) for row in cofactors))

    def conjugate(self, tau: WeightVector, inverse: bool = False) -> List[Generator]:
        tau = as_weight(tau)
        if not any(tau):
            return [self]
        outer = GeneralizedPermutation.diagonal(self.ctx, tau)
        if inverse:
            return [outer, self, outer.inverse()]
        return [outer.inverse(), self, outer]

    def mod_x(self) -> 'Linear':
        return Linear(self.ctx, tuple(tuple(e.mod_x() for e in row) for row in self.matrix))

    def __str__(self) -> str:
        rows = '; '.join(', '.join(e.render() for e in row) for row in self.matrix)
        return f'linear[{rows}]'


@dataclass(frozen=True)
class GeneralizedPermutation(Generator):
    """z_i -> scalars[perm[i]] * x^shifts[perm[i]] * z_perm[i] (0-based)."""

    ctx: RingContext
    perm: Tuple[int, ...]
    scalars: Tuple[Fraction, ...]
    shifts: Tuple[int, ...]
    kind = 'genperm'

    def __post_init__(self):
        n = self.ctx.n
        object.__setattr__(self, 'perm', tuple(int(p) for p in self.perm))
        if sorted(self.perm) != list(range(n)):
            raise InvalidGenerator(f"{list(self.perm)} is not a permutation of {n} slots")
        if len(self.scalars) != n or len(self.shifts) != n:
            raise InvalidGenerator("Scalars and shifts need one entry per z-variable")
        if any(s is None for s in self.scalars):
            raise InvalidGenerator("Generalized permutation is missing a scalar")
        object.__setattr__(self, 'scalars', tuple(Fraction(s) for s in self.scalars))
        object.__setattr__(self, 'shifts', tuple(int(r) for r in self.shifts))
        if any(s == 0 for s in self.scalars):
            raise InvalidGenerator("Generalized permutation scalars must be nonzero")

    @classmethod
    def identity(cls, ctx: RingContext) -> 'GeneralizedPermutation':
        n = ctx.n
        return cls(ctx, tuple(range(n)), (Fraction(1),) * n, (0,) * n)

    @classmethod
    def diagonal(cls, ctx: RingContext, tau: WeightVector) -> 'GeneralizedPermutation':
        """The scaling z_k -> x^{t_k} z_k."""
        n = ctx.n
        return cls(ctx, tuple(range(n)), (Fraction(1),) * n, tuple(as_weight(tau).values))

    @classmethod
    def from_monomial_images(cls, ctx: RingContext, images: Sequence[Poly]) -> 'GeneralizedPermutation':
        """Read perm, scalars and shifts off images of the form c * x^r * z_j."""
        z_indices = list(ctx.z_indices)
        perm, scalars, shifts = [0] * ctx.n, [None] * ctx.n, [0] * ctx.n
        for i, image in enumerate(images):
            if len(image.terms) != 1:
                raise InvalidGenerator("Not a monomial image", image=image.render())
            (exp, coeff), = image.terms.items()
            targets = [j for j, index in enumerate(z_indices) if exp[index]]
            others = [e for idx, e in enumerate(exp) if idx != X and idx not in z_indices]
            if len(targets) != 1 or exp[z_indices[targets[0]]] != 1 or any(others):
                raise InvalidGenerator("Not a generalized permutation image", image=image.render())
            j = targets[0]
            perm[i], scalars[j], shifts[j] = j, coeff, exp[X]
        return cls(ctx, tuple(perm), tuple(scalars), tuple(shifts))

    @cached_property
    def inverse_perm(self) -> Tuple[int, ...]:
        inv = [0] * len(self.perm)
        for i, target in enumerate(self.perm):
            inv[target] = i
        return tuple(inv)

    def is_identity(self) -> bool:
        return self == GeneralizedPermutation.identity(self.ctx)

    def endo(self, ctx: Optional[RingContext] = None) -> Endo:
        images = list(Endo.identity(self.ctx).images)
        for i, target in enumerate(self.perm):
            images[self.ctx.z_slot(i)] = Poly.monomial(
                self.ctx, {X: self.shifts[target], self.ctx.z_index(target): 1},
                self.scalars[target])
        return Endo(self.ctx, tuple(images))

    def inverse(self) -> 'GeneralizedPermutation':
        n = len(self.perm)
        scalars = tuple(Fraction(1) / self.scalars[self.perm[k]] for k in range(n))
        shifts = tuple(-self.shifts[self.perm[k]] for k in range(n))
        return GeneralizedPermutation(self.ctx, self.inverse_perm, scalars, shifts)

    def then(self, other: 'GeneralizedPermutation') -> 'GeneralizedPermutation':
        """self o other in word order."""
        _same_ctx(self.ctx, other.ctx)
        n = len(self.perm)
        perm = tuple(other.perm[self.perm[i]] for i in range(n))
        back = other.inverse_perm
        scalars = tuple(other.scalars[j] * self.scalars[back[j]] for j in range(n))
        shifts = tuple(other.shifts[j] + self.shifts[back[j]] for j in range(n))
        return GeneralizedPermutation(self.ctx, perm, scalars, shifts)

    def apply_tau(self, tau: WeightVector) -> WeightVector:
        return rho_apply_tau(self, tau)

    def conjugate(self, tau: WeightVector, inverse: bool = False) -> List[Generator]:
        outer = GeneralizedPermutation.diagonal(self.ctx, tau)
        if inverse:
            return [outer.then(self).then(outer.inverse())]
        return [outer.inverse().then(self).then(outer)]

    def mod_x(self) -> 'GeneralizedPermutation':
        if any(self.shifts):
            raise NotOverR("A generalized permutation with x-shifts has no reduction mod x")
        return self

    def __str__(self) -> str:
        return str(self.endo())


@dataclass(frozen=True)
class ExplicitEndo(Generator):
    """A full image tuple together with an exact inverse tuple."""

    ctx: RingContext
    images: Tuple[Poly, ...]
    inverse_images: Tuple[Poly, ...]
    tame: bool = False
    checked: bool = field(default=True, compare=False)
    kind = 'explicit'

    def __post_init__(self):
        object.__setattr__(self, 'images', tuple(self.images))
        object.__setattr__(self, 'inverse_images', tuple(self.inverse_images))
        forward = Endo(self.ctx, self.images)
        backward = Endo(self.ctx, self.inverse_images)
        if self.checked and not (forward.then(backward).is_identity()
                                 and backward.then(forward).is_identity()):
            raise InvalidGenerator("Stored inverse does not compose to the identity")

    def endo(self, ctx: Optional[RingContext] = None) -> Endo:
        return Endo(self.ctx, tuple(self.images))

    def inverse(self) -> 'ExplicitEndo':
        return ExplicitEndo(self.ctx, self.inverse_images, self.images, self.tame, checked=False)

    def conjugate(self, tau: WeightVector, inverse: bool = False) -> List[Generator]:
        forward = conjugate_by_weights(self.endo(), tau, inverse)
        backward = conjugate_by_weights(Endo(self.ctx, self.inverse_images), tau, inverse)
        return [ExplicitEndo(self.ctx, forward.images, backward.images, self.tame, checked=False)]

    def mod_x(self) -> 'ExplicitEndo':
        return ExplicitEndo(self.ctx, tuple(i.mod_x() for i in self.images),
                            tuple(i.mod_x() for i in self.inverse_images), self.tame)

    def __str__(self) -> str:
        return str(self.endo())


@dataclass(frozen=True)
class GeneratorWord:
    """g1 o g2 o ... o gk, kept unevaluated until ``endo`` is asked for."""

    ctx: RingContext
    generators: Tuple[Generator, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'generators', tuple(self.generators))
        for generator in self.generators:
            _same_ctx(self.ctx, generator.ctx)

    @classmethod
    def of(cls, ctx: RingContext, *generators: Generator) -> 'GeneratorWord':
        return cls(ctx, tuple(generators))

    @classmethod
    def with_endo(cls, ctx: RingContext, generators: Iterable[Generator], endo: Endo) -> 'GeneratorWord':
        """A word whose evaluation is already known."""
        word = cls(ctx, tuple(generators))
        word.__dict__['endo'] = endo
        return word

    def __len__(self) -> int:
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return GeneratorWord(self.ctx, self.generators[index])
        return self.generators[index]

    def __add__(self, other: 'GeneratorWord') -> 'GeneratorWord':
        _same_ctx(self.ctx, other.ctx)
        return GeneratorWord(self.ctx, self.generators + other.generators)

    @cached_property
    def endo(self) -> Endo:
        result = Endo.identity(self.ctx)
        for generator in self.generators:
            result = result.then_generator(generator)
        return result

    def inverse(self) -> 'GeneratorWord':
        return invert_word(self)

    def is_tame(self) -> bool:
        return all(generator.tame for generator in self.generators)

    def is_elementary_z_word(self) -> bool:
        return all(isinstance(g, Elementary) and g.is_z for g in self.generators)

    def __str__(self) -> str:
        if not self.generators:
            return 'id'
        return ' o '.join(str(g) for g in self.generators)


def word_to_endo(word: GeneratorWord) -> Endo:
    return word.endo


def invert_word(word: GeneratorWord) -> GeneratorWord:
    return GeneratorWord(word.ctx, tuple(g.inverse() for g in reversed(word.generators)))


def word_roundtrip(word: GeneratorWord) -> bool:
    """Each generator composes with its inverse to the identity on both sides.

    The whole word then inverts to ``invert_word(word)`` by associativity, so
    the full evaluations never need to be substituted into one another.
    """
    for generator in word.generators:
        forward, backward = generator.endo(word.ctx), generator.inverse().endo(word.ctx)
        if not (forward.then(backward).is_identity() and backward.then(forward).is_identity()):
            return False
    return True


def coordinate_checks(theta_word: GeneratorWord, composite: Endo) -> Dict[str, bool]:
    """The certificate checks of theta against the composite it is meant to match."""
    theta = theta_word.endo
    over_r = theta.is_over_r()
    return {
        'over_r': over_r,
        'id_mod_x': over_r and is_ia_tau(theta, WeightVector.zero(theta.ctx.n)),
        'inverse_over_r': theta_word.inverse().endo.is_over_r(),
        'roundtrip': word_roundtrip(theta_word),
        'y_match': theta.y_images() == composite.y_images(),
        'jacobian_unit': theta.jacobian().unit_value is not None,
    }


def compose(*parts: Union[Endo, GeneratorWord, Generator]) -> Endo:
    """Evaluate parts[0] o parts[1] o ... as one endo."""
    if not parts:
        raise ValueError("compose needs at least one part")
    result: Optional[Endo] = None
    for part in parts:
        endo = _as_endo(part)
        result = endo if result is None else result.then(endo)
    return result


def _as_endo(part) -> Endo:
    if isinstance(part, Endo):
        return part
    if isinstance(part, GeneratorWord):
        return part.endo
    if isinstance(part, Generator):
        return part.endo()
    raise TypeError(f"Cannot evaluate {type(part).__name__}")


def conjugate_by_weights(obj, tau, inverse: bool = False):
    """phi^tau = (x^-t z) o phi o (x^t z); ``inverse`` conjugates the other way."""
    tau = as_weight(tau)
    if isinstance(obj, GeneratorWord):
        if not any(tau):
            return obj
        generators: List[Generator] = []
        for generator in obj.generators:
            generators.extend(generator.conjugate(tau, inverse))
        return GeneratorWord(obj.ctx, tuple(generators))
    if isinstance(obj, Generator):
        return GeneratorWord(obj.ctx, tuple(obj.conjugate(tau, inverse)))
    if isinstance(obj, Endo):
        if not any(tau):
            return obj
        scale = GeneralizedPermutation.diagonal(obj.ctx, tau)
        inner, outer = (scale, scale.inverse()) if inverse else (scale.inverse(), scale)
        return compose(inner, obj, outer)
    raise TypeError(f"Cannot conjugate {type(obj).__name__}")


@dataclass(frozen=True)
class IAWitness:
    """F_j and G_k with e = (y_j + x F_j, z_k + x^(1 - t_k) G_k)."""

    f: Tuple[Poly, ...]
    g: Tuple[Poly, ...]


def canonical_ia_form(endo: Endo, tau) -> IAWitness:
    """Membership test for IA^tau: extract the witnesses or raise."""
    tau = as_weight(tau)
    ctx = endo.ctx
    fs = []
    for j in range(ctx.m):
        witness = (endo.images[j] - _var(ctx, j)).times_x(-1)
        _check_witness(witness, tau, ctx.y_names[j])
        fs.append(witness)
    gs = []
    for k in range(ctx.n):
        witness = (endo.z_image(k) - _var(ctx, ctx.z_slot(k))).times_x(tau[k] - 1)
        _check_witness(witness, tau, ctx.z_names[k])
        gs.append(witness)
    return IAWitness(f=tuple(fs), g=tuple(gs))


def _check_witness(witness: Poly, tau: WeightVector, name: str):
    if not witness.is_over_r():
        raise ShapeMismatch(f"Component {name} is not of the required shape",
                            witness=witness.render(), tau=tau.to_list())
    if not a_tau_member(witness, tau):
        raise WitnessNotInATau(f"Witness for {name} is not in A_tau",
                               witness=witness.render(), tau=tau.to_list())


def is_ia_tau(endo: Endo, tau) -> bool:
    try:
        canonical_ia_form(endo, tau)
    except (ShapeMismatch, WitnessNotInATau):
        return False
    return True


def validate_elementary_tau(generator: Elementary, tau) -> bool:
    """generator = (z_k -> z_k + x^-t_k P) with P in A_tau[z-hat_k]."""
    tau = as_weight(tau)
    if not isinstance(generator, Elementary) or not generator.is_z:
        raise InvalidGenerator("validate_elementary_tau needs an elementary in a z-variable")
    return a_tau_member(generator.poly.times_x(tau[generator.z_position]), tau)


def maps_a_tau_into(endo: Endo, source, target) -> bool:
    """endo(A_source) inside A_target, checked on the algebra generators."""
    source, target = as_weight(source), as_weight(target)
    ctx = endo.ctx
    for j in range(ctx.m):
        if not a_tau_member(endo.images[j], target):
            return False
    for k in range(ctx.n):
        if not a_tau_member(endo.z_image(k).times_x(source[k]), target):
            return False
    return True


def preserves_a_tau(word: GeneratorWord, tau) -> bool:
    """GA_n^tau membership: the word and its inverse both map A_tau into itself."""
    return (maps_a_tau_into(word.endo, tau, tau)
            and maps_a_tau_into(invert_word(word).endo, tau, tau))


def fixes_y(endo: Endo) -> bool:
    ctx = endo.ctx
    return all(endo.images[j] == _var(ctx, j) for j in range(ctx.m))


def split_ia(word: GeneratorWord) -> Tuple[Endo, GeneratorWord]:
    """For a word over R: (e o (e mod x)^-1, mod-x word), the first being IA."""
    reduced = GeneratorWord(word.ctx, tuple(g.mod_x() for g in word.generators))
    return compose(word, invert_word(reduced)), reduced
