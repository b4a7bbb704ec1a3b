from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import ContextMismatch, InvalidGenerator, ShapeMismatch, WitnessNotInATau
from models.group import (
    Elementary,
    Endo,
    ExplicitEndo,
    GeneralizedPermutation,
    GeneratorWord,
    Linear,
    canonical_ia_form,
    compose,
    conjugate_by_weights,
    coordinate_checks,
    endo_equal,
    fixes_y,
    invert_word,
    is_ia_tau,
    maps_a_tau_into,
    preserves_a_tau,
    split_ia,
    validate_elementary_tau,
    word_roundtrip,
    word_to_endo,
)
from models.ring import Poly, RingContext, parse_poly
from models.weights import WeightVector

from .strategies import CONTEXTS, elementaries, genperms, ia_elementaries, weights, words

CTX = RingContext(m=1, n=1)
CTX2 = RingContext(m=1, n=2)


def images(ctx, *texts):
    return Endo(ctx, tuple(parse_poly(t, ctx) for t in texts))


class TestComposition:
    def test_word_order_substitutes_left_to_right(self):
        alpha = Elementary(CTX, 0, parse_poly('x^2*z', CTX))
        phi = Elementary.in_z(CTX, 0, parse_poly('-y^2/x', CTX))
        assert GeneratorWord.of(CTX, alpha, phi).endo == images(CTX, 'y + x^2*z - x*y^2', 'z - y^2/x')
        assert compose(phi, alpha) == images(CTX, 'y + x^2*z', 'z - (y + x^2*z)^2/x')

    def test_nagata_conjugate(self):
        alpha = Elementary(CTX, 0, parse_poly('x^2*z', CTX))
        phi = Elementary.in_z(CTX, 0, parse_poly('-y^2/x', CTX))
        sigma = compose(phi.inverse(), alpha, phi)
        assert sigma == images(CTX, 'y + x*(x*z - y^2)', 'z + 2*y*(x*z - y^2) + x*(x*z - y^2)^2')
        assert not sigma.is_identity_mod_x()
        assert sigma.mod_x() == images(CTX, 'y', 'z - 2*y^3')

    def test_word_to_endo(self):
        ctx = RingContext(m=1, n=1, p=1, u_names=('t',))
        word = GeneratorWord.of(ctx, Elementary(ctx, 0, parse_poly('x^2*z', ctx)),
                                Elementary.in_z(ctx, 0, parse_poly('y*t/x', ctx)))
        assert word_to_endo(word).images[0] == parse_poly('y + x*(x*z + y*t)', ctx)
        assert word_to_endo(GeneratorWord(CTX)) == Endo.identity(CTX)

    def test_endo_equal(self):
        assert endo_equal(images(CTX, 'y', 'z + x*0'), Endo.identity(CTX))
        assert not endo_equal(images(CTX, 'y', 'z + x'), Endo.identity(CTX))
        with pytest.raises(ContextMismatch):
            endo_equal(Endo.identity(CTX), Endo.identity(CTX2))

    def test_empty_word_is_identity(self):
        assert GeneratorWord(CTX2).endo.is_identity()
        assert str(GeneratorWord(CTX2)) == 'id'

    def test_compose_needs_parts(self):
        with pytest.raises(ValueError):
            compose()

    @given(st.sampled_from(CONTEXTS).flatmap(lambda ctx: words(ctx, max_degree=2)))
    @settings(max_examples=200, deadline=None)
    def test_word_times_inverse_is_identity(self, word):
        assert (word + word.inverse()).endo.is_identity()
        assert (word.inverse() + word).endo.is_identity()

    @given(st.sampled_from(CONTEXTS).flatmap(
        lambda ctx: st.tuples(words(ctx, max_length=2, max_degree=2), words(ctx, max_length=2, max_degree=2))))
    @settings(max_examples=100, deadline=None)
    def test_evaluation_is_a_homomorphism(self, pair):
        first, second = pair
        assert (first + second).endo == compose(first, second)
        assert first.endo.then(second.endo) == compose(first, second)


class TestGenerators:
    def test_elementary_may_not_use_its_variable(self):
        with pytest.raises(InvalidGenerator):
            Elementary.in_z(CTX, 0, parse_poly('z^2', CTX))

    def test_endo_needs_every_image(self):
        with pytest.raises(InvalidGenerator):
            Endo(CTX, (parse_poly('y', CTX),))

    def test_linear_inverse(self):
        two, one, zero = (Poly.constant(CTX2, v) for v in (2, 1, 0))
        linear = Linear(CTX2, ((two, parse_poly('y', CTX2)), (zero, one)))
        assert compose(linear, linear.inverse()).is_identity()
        assert linear.det_value == 2

    def test_linear_rejects_singular(self):
        one = Poly.one(CTX2)
        with pytest.raises(InvalidGenerator):
            Linear(CTX2, ((one, one), (one, one)))

    def test_explicit_endo_checks_its_inverse(self):
        forward = images(CTX, 'y', 'z + y^2')
        with pytest.raises(InvalidGenerator):
            ExplicitEndo(CTX, forward.images, forward.images)
        explicit = ExplicitEndo(CTX, forward.images, images(CTX, 'y', 'z - y^2').images)
        assert not explicit.tame
        assert not GeneratorWord.of(CTX, explicit).is_tame()

    def test_word_roundtrip_checks_each_generator(self):
        alpha, phi = (Elementary(CTX, 0, parse_poly('x^2*z', CTX)),
                      Elementary.in_z(CTX, 0, parse_poly('-y^2/x', CTX)))
        assert word_roundtrip(GeneratorWord.of(CTX, alpha, phi, alpha.inverse()))
        assert word_roundtrip(GeneratorWord(CTX))
        tampered = ExplicitEndo(CTX, images(CTX, 'y', 'z + y^2').images,
                                images(CTX, 'y', 'z + y^2').images, checked=False)
        assert not word_roundtrip(GeneratorWord.of(CTX, alpha, tampered))

    def test_coordinate_checks(self):
        word = GeneratorWord.of(CTX, Elementary(CTX, 0, parse_poly('x^2*z', CTX)))
        checks = coordinate_checks(word, word.endo)
        assert all(checks.values())
        nagata = GeneratorWord.of(CTX, Elementary(CTX, 0, parse_poly('x^2*z', CTX)),
                                  Elementary.in_z(CTX, 0, parse_poly('-y^2/x', CTX)))
        checks = coordinate_checks(nagata, nagata.endo)
        assert not checks['over_r'] and not checks['id_mod_x'] and not checks['inverse_over_r']
        assert checks['roundtrip'] and checks['y_match'] and checks['jacobian_unit']

    def test_genperm_from_monomial_images(self):
        rho = GeneralizedPermutation.from_monomial_images(
            CTX2, [parse_poly('3*x*z2', CTX2), parse_poly('-z1/x^2', CTX2)])
        assert rho.perm == (1, 0)
        assert rho.scalars == (Fraction(-1), Fraction(3))
        assert rho.shifts == (-2, 1)
        assert rho.endo().z_images() == (parse_poly('3*x*z2', CTX2), parse_poly('-z1/x^2', CTX2))

    def test_genperm_rejects_non_monomials(self):
        with pytest.raises(InvalidGenerator):
            GeneralizedPermutation.from_monomial_images(CTX2, [parse_poly('z1 + z2', CTX2),
                                                               parse_poly('z1', CTX2)])

    @given(genperms(CTX2), genperms(CTX2))
    @settings(max_examples=100, deadline=None)
    def test_genperm_group_law(self, first, second):
        assert first.then(second).endo() == compose(first, second)
        assert compose(first, first.inverse()).is_identity()

    @given(st.data())
    @settings(max_examples=200, deadline=None)
    def test_rho_maps_a_tau_onto_a_rho_tau(self, data):
        ctx = data.draw(st.sampled_from([c for c in CONTEXTS if c.n > 1]))
        rho = data.draw(genperms(ctx))
        tau = data.draw(weights(ctx.n))
        rho_tau = rho.apply_tau(tau)
        assert maps_a_tau_into(rho.endo(), tau, rho_tau)
        assert maps_a_tau_into(rho.inverse().endo(), rho_tau, tau)
        for k in range(ctx.n):
            image = rho.endo().z_image(k).times_x(tau[k])
            (exp, _), = image.terms.items()
            target = rho.perm[k]
            assert exp[0] == rho_tau[target]


class TestWeightConjugation:
    @given(st.data())
    @settings(max_examples=100, deadline=None)
    def test_generatorwise_matches_endo(self, data):
        ctx = data.draw(st.sampled_from(CONTEXTS))
        word = data.draw(words(ctx, max_length=2, max_degree=2))
        tau = data.draw(weights(ctx.n, max_value=2))
        assert conjugate_by_weights(word, tau).endo == conjugate_by_weights(word.endo, tau)
        back = conjugate_by_weights(conjugate_by_weights(word, tau), tau, inverse=True)
        assert back.endo == word.endo

    def test_elementary_conjugate(self):
        phi = Elementary.in_z(CTX, 0, parse_poly('y^2', CTX))
        conjugated = conjugate_by_weights(phi, WeightVector.of(1))
        assert conjugated.endo == images(CTX, 'y', 'z + y^2/x')


class TestIA:
    def test_canonical_form(self):
        sigma = images(CTX, 'y + x*(x*z - y^2)', 'z + 2*y*(x*z - y^2) + x*(x*z - y^2)^2')
        witness = canonical_ia_form(sigma, WeightVector.of(1))
        assert witness.f == (parse_poly('x*z - y^2', CTX),)
        assert is_ia_tau(sigma, WeightVector.of(1))
        assert not is_ia_tau(sigma, WeightVector.of(2))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            canonical_ia_form(images(CTX, 'y + z/x', 'z'), WeightVector.of(0))

    def test_witness_not_in_a_tau(self):
        with pytest.raises(WitnessNotInATau):
            canonical_ia_form(images(CTX, 'y + x*z', 'z'), WeightVector.of(1))

    @given(st.data())
    @settings(max_examples=200, deadline=None)
    def test_ia_tau_is_closed_under_composition(self, data):
        ctx = data.draw(st.sampled_from(CONTEXTS[:3]))
        tau = data.draw(weights(ctx.n, max_value=2))
        first = data.draw(ia_elementaries(ctx, tau))
        second = data.draw(ia_elementaries(ctx, tau))
        assert is_ia_tau(first.endo(), tau)
        assert is_ia_tau(compose(first, second), tau)
        assert is_ia_tau(first.inverse().endo(), tau)

    @given(st.data())
    @settings(max_examples=200, deadline=None)
    def test_ea_tau_elementaries_preserve_a_tau(self, data):
        ctx = data.draw(st.sampled_from(CONTEXTS))
        tau = data.draw(weights(ctx.n))
        generator = data.draw(elementaries(ctx, tau=tau, max_degree=2))
        assert validate_elementary_tau(generator, tau)
        assert preserves_a_tau(GeneratorWord.of(ctx, generator), tau)
        assert fixes_y(generator.endo())

    @given(st.sampled_from(CONTEXTS).flatmap(lambda ctx: words(ctx, laurent=False, max_degree=2)))
    @settings(max_examples=100, deadline=None)
    def test_split_ia(self, word):
        ia_part, reduced = split_ia(word)
        assert is_ia_tau(ia_part, WeightVector.zero(word.ctx.n))
        assert ia_part.then(reduced.endo) == word.endo
        assert all(g.poly.is_over_r() for g in reduced)

    def test_invert_word_reverses(self):
        first = Elementary.in_z(CTX2, 0, parse_poly('z2', CTX2))
        second = Elementary.in_z(CTX2, 1, parse_poly('y', CTX2))
        inverse = invert_word(GeneratorWord.of(CTX2, first, second))
        assert inverse.generators == (second.inverse(), first.inverse())
