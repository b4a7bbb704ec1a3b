"""Named constructions used as golden tests and CLI presets."""
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Callable, Dict, Optional, Tuple, Union

from errors import InternalContradiction, QNotInASigma0
from models.group import Elementary, Endo, ExplicitEndo, GeneratorWord
from models.ring import X, Poly, RingContext, parse_poly
from models.weights import WeightVector

logger = logging.getLogger(__name__)

PLACEHOLDERS = RingContext(m=0, n=2, z_names=('w1', 'w2'))


@dataclass(frozen=True)
class NamedExample:
    """A construction with its word and what evaluating it must give.

    ``alpha`` and ``phi_word`` are the inputs of the sigma-sequence pipeline
    when the example can be certified; ``expected`` is compared with the
    evaluation of ``word`` and ``expected_theta_y`` with its y-component.
    """

    identifier: str
    ctx: RingContext
    word: GeneratorWord
    description: str = ''
    expected: Optional[Endo] = None
    expected_theta_y: Optional[Poly] = None
    alpha: Optional[GeneratorWord] = None
    phi_word: Optional[GeneratorWord] = None
    evaluation_only: bool = False
    pipeline: str = 'at2'
    extras: Dict[str, Any] = field(default_factory=dict, compare=False)

    def evaluate(self) -> Endo:
        return self.word.endo

    @property
    def certifiable(self) -> bool:
        return not self.evaluation_only and self.alpha is not None and self.phi_word is not None

    def input_word(self) -> GeneratorWord:
        if self.alpha is None or self.phi_word is None:
            return self.word
        return self.alpha + self.phi_word

    def matches(self) -> bool:
        evaluated = self.evaluate()
        if self.expected is not None and evaluated != self.expected:
            return False
        if self.expected_theta_y is not None:
            y_image = self.input_word().endo.images[0]
            if y_image != self.expected_theta_y:
                return False
        return True

    def summary(self) -> Dict[str, Any]:
        return {
            'name': self.identifier,
            'description': self.description,
            'context': self.ctx.to_dict(),
            'generators': len(self.input_word()),
            'certifiable': self.certifiable,
        }


def _word(ctx: RingContext, *generators) -> GeneratorWord:
    return GeneratorWord(ctx, tuple(generators))


def _elementary(ctx: RingContext, var: str, text: str) -> Elementary:
    return Elementary(ctx, ctx.index_of(var) - 1 - ctx.p, parse_poly(text, ctx))


def _images(ctx: RingContext, *texts: str) -> Endo:
    return Endo(ctx, tuple(parse_poly(text, ctx) for text in texts))


def _mismatch_dump(example: NamedExample) -> Dict[str, Any]:
    dump: Dict[str, Any] = {'context': example.ctx.to_dict(), 'word': str(example.word),
                            'evaluated': example.evaluate().render()}
    if example.expected is not None:
        dump['expected'] = example.expected.render()
    if example.expected_theta_y is not None:
        dump['theta_y'] = example.input_word().endo.images[0].render()
        dump['expected_theta_y'] = example.expected_theta_y.render()
    return dump


def nagata() -> NamedExample:
    ctx = RingContext(m=1, n=1)
    alpha = _elementary(ctx, 'y', 'x^2*z')
    phi = _elementary(ctx, 'z', '-y^2/x')
    return NamedExample(
        identifier='nagata',
        ctx=ctx,
        word=_word(ctx, phi.inverse(), alpha, phi),
        description="Nagata automorphism as a conjugate of (y + x^2 z, z) by (y, z - y^2/x)",
        expected=_images(ctx, 'y + x*(x*z - y^2)', 'z + 2*y*(x*z - y^2) + x*(x*z - y^2)^2'),
        expected_theta_y=parse_poly('y + x*(x*z - y^2)', ctx),
        alpha=_word(ctx, alpha),
        phi_word=_word(ctx, phi),
        pipeline='mt1',
    )


def anick() -> NamedExample:
    ctx = RingContext(m=1, n=1, p=1, u_names=('t',))
    alpha = _elementary(ctx, 'y', 'x^2*z')
    phi = _elementary(ctx, 'z', 't*y/x')
    return NamedExample(
        identifier='anick',
        ctx=ctx,
        word=_word(ctx, phi.inverse(), alpha, phi),
        description="Anick's automorphism over Q[t], built like the Nagata example",
        expected=_images(ctx, 'y + x*(x*z + y*t)', 'z - t*(x*z + y*t)'),
        expected_theta_y=parse_poly('y + x*(x*z + y*t)', ctx),
        alpha=_word(ctx, alpha),
        phi_word=_word(ctx, phi),
    )


VENEREAU_CTX = RingContext(m=1, n=3, z_names=('z', 'u', 't'))
VENEREAU_SIGMAS = ((1, 2, 1), (0, 2, 1), (0, 0, 1), (0, 0, 0), (0, 0, 0))


def venereau_word() -> GeneratorWord:
    """The five elementaries whose sigma-sequence is VENEREAU_SIGMAS."""
    ctx = VENEREAU_CTX
    return _word(
        ctx,
        _elementary(ctx, 'z', 'y*t'),
        _elementary(ctx, 'u', '-2*z*t - y*t^2'),
        _elementary(ctx, 't', '(y*u + z^2)/x'),
        _elementary(ctx, 'z', '-y*t'),
        _elementary(ctx, 'u', '2*z*t - y*t^2'),
    )


def _placeholder_q(q: Union[str, Poly]) -> Poly:
    if isinstance(q, str):
        q = parse_poly(q, PLACEHOLDERS)
    if q.ctx != PLACEHOLDERS:
        raise QNotInASigma0("Q must be a polynomial in x, w1 and w2", context=q.ctx.variables)
    if not q.is_over_r():
        raise QNotInASigma0("Q must have coefficients in Q[x]", q=q.render())
    return q


def _substitute_placeholders(q: Poly, ctx: RingContext, first: Poly, second: Poly) -> Poly:
    w1, w2 = PLACEHOLDERS.z_index(0), PLACEHOLDERS.z_index(1)
    total = Poly.zero(ctx)
    for exp, coeff in q.terms.items():
        total = total + (first ** exp[w1]) * (second ** exp[w2]) * Poly.x_power(ctx, exp[X], coeff)
    return total


def venereau_type(q: Union[str, Poly] = 'w1') -> NamedExample:
    """alpha = (y + xQ(xz, x^2 u)) followed by the five-generator word."""
    ctx = VENEREAU_CTX
    q = _placeholder_q(q)
    z, u = Poly.var(ctx, 'z'), Poly.var(ctx, 'u')
    y = Poly.var(ctx, 'y')
    feed = _substitute_placeholders(q, ctx, z.times_x(1), u.times_x(2))
    alpha = Elementary(ctx, 0, feed.times_x(1))
    w = y * u + z ** 2
    expected = y + _substitute_placeholders(
        q, ctx, z.times_x(1) + y * w, u.times_x(2) - (z * w).times_x(1).scale(2) - y * w ** 2).times_x(1)
    phi_word = venereau_word()
    return NamedExample(
        identifier='venereau-type',
        ctx=ctx,
        word=_word(ctx, alpha) + phi_word,
        description=f"Venereau-type coordinate with Q = {q.render()}",
        expected_theta_y=expected,
        alpha=_word(ctx, alpha),
        phi_word=phi_word,
        extras={'q': q.render(), 'sigmas': [list(s) for s in VENEREAU_SIGMAS]},
    )


def venereau() -> NamedExample:
    example = venereau_type('w1')
    return replace(example, identifier='venereau',
                   description="Venereau polynomial y + x(xz + y(yu + z^2))")


def venereau_eq1() -> NamedExample:
    """(y + x^2 z, z, u) o N with N the non-tame map fixing W = yu + z^2."""
    ctx = RingContext(m=1, n=2, z_names=('z', 'u'))
    w = '(y*u + z^2)'
    forward = _images(ctx, 'y', f'z + y*{w}/x', f'u - 2*z*{w}/x - y*{w}^2/x^2')
    backward = _images(ctx, 'y', f'z - y*{w}/x', f'u + 2*z*{w}/x - y*{w}^2/x^2')
    n_map = ExplicitEndo(ctx, forward.images, backward.images, tame=False)
    alpha = _elementary(ctx, 'y', 'x^2*z')
    return NamedExample(
        identifier='venereau-eq1',
        ctx=ctx,
        word=_word(ctx, alpha, n_map),
        description="Venereau polynomial as the y-component of (y + x^2 z, z, u) o N",
        expected_theta_y=parse_poly('y + x*(x*z + y*(y*u + z^2))', ctx),
        evaluation_only=True,
    )


def russell(f: Union[str, Poly] = 'y^2', s: int = 1, lam: Union[int, Fraction, str] = 1) -> NamedExample:
    """(y + lam x^s z, z) o (y, z + lam^-1 x^(1-s) f(x, y)); theta(y) = y + x f + lam x^s z."""
    ctx = RingContext(m=1, n=1)
    lam = Fraction(lam)
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    if s < 0:
        raise ValueError("s must be a natural number")
    if isinstance(f, str):
        f = parse_poly(f, ctx)
    if not f.is_over_r() or f.uses(ctx.z_index(0)):
        raise ValueError("f must be a polynomial in x and y")
    z = Poly.var(ctx, 'z')
    alpha = Elementary(ctx, 0, z.times_x(s).scale(lam))
    phi = Elementary.in_z(ctx, 0, f.times_x(1 - s).scale(1 / lam))
    return NamedExample(
        identifier='russell',
        ctx=ctx,
        word=_word(ctx, alpha, phi),
        description=f"Russell coordinate with f = {f.render()}, s = {s}, lambda = {lam}",
        expected_theta_y=Poly.var(ctx, 'y') + f.times_x(1) + z.times_x(s).scale(lam),
        alpha=_word(ctx, alpha),
        phi_word=_word(ctx, phi),
        evaluation_only=s == 0,
    )


def crucial_difficulty_example() -> NamedExample:
    """n = 3 data where P(omega(x z2), omega(x^2 z3)) drops into x^2 R."""
    ctx = RingContext(m=1, n=3, z_names=('z1', 'z2', 'z3'))
    word = _word(ctx, _elementary(ctx, 'z2', '-y*z1/x'),
                 _elementary(ctx, 'z3', '2*z2*z1/x - y*z1^2/x^2'))
    return NamedExample(
        identifier='crucial-difficulty',
        ctx=ctx,
        word=word,
        description="tau = (0, 1, 2) and a P outside x A_tau whose omega-image lies in x^2 R",
        expected=_images(ctx, 'y', 'z1', 'z2 - y*z1/x', 'z3 + 2*z2*z1/x - y*z1^2/x^2'),
        evaluation_only=True,
        extras={
            'tau': WeightVector.of(0, 1, 2),
            'p': parse_poly('y*(x^2*z3) + (x*z2)^2', ctx),
            'value': parse_poly('x^2*(y*z3 + z2^2)', ctx),
        },
    )


def substitution_value(example: NamedExample) -> Poly:
    """omega(P) for the crucial-difficulty data."""
    return example.evaluate().apply(example.extras['p'])


class ConstructionCatalog:
    """Preset registry keyed by CLI name."""

    def __init__(self):
        self.presets: Dict[str, Callable[..., NamedExample]] = {
            'nagata': nagata,
            'anick': anick,
            'venereau': venereau,
            'venereau-type': venereau_type,
            'venereau-eq1': venereau_eq1,
            'russell': russell,
            'crucial-difficulty': crucial_difficulty_example,
        }

    def names(self) -> Tuple[str, ...]:
        return tuple(self.presets)

    def get(self, name: str, **params) -> NamedExample:
        if name not in self.presets:
            raise ValueError(f"Unsupported preset: {name}")
        example = self.presets[name](**params)
        if not example.matches():
            logger.error(f"Preset {name} does not reproduce its stored expectation")
            raise InternalContradiction(f"Preset {name} does not reproduce its stored expectation",
                                        dump=_mismatch_dump(example), preset=name)
        return example


catalog = ConstructionCatalog()
