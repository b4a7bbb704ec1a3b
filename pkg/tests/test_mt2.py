from fractions import Fraction

import pytest
from hypothesis import given, settings as hsettings
from hypothesis import strategies as st

from catalog.presets import catalog
from errors import (
    GapNotRankOne,
    HypothesisViolation,
    InvalidGenerator,
    NonTermination,
    PatternMismatch,
    PreconditionFailed,
)
from models.group import Elementary, Endo, GeneralizedPermutation, GeneratorWord, Linear, compose, is_ia_tau
from models.ring import Poly, RingContext, parse_poly
from models.weights import WeightVector
from services import mt2
from services.mt2 import (
    Mt2Stage,
    SameVariable,
    acnonzero_factor,
    alpharho_merge,
    annotate,
    bar_elementary,
    eabar_factor,
    ia_rho_conjugate,
    merge_adjacent,
    mt2_pipeline,
    no_alpha_no_rho,
    only_one_phi_factor,
    phi_ea_tau_check,
    rho_push,
    technical_conditions,
)
from services.reduction import n2_reduce

CTX1 = RingContext(m=1, n=1)
CTX2 = RingContext(m=1, n=2, z_names=('z', 'w'))
SWAP = GeneralizedPermutation(CTX2, (1, 0), (1, 1), (0, 0))


def p(text, ctx=CTX2):
    return parse_poly(text, ctx)


def images(ctx, *texts):
    return Endo(ctx, tuple(parse_poly(t, ctx) for t in texts))


def z_elementary(k, text, ctx=CTX2):
    return Elementary.in_z(ctx, k, p(text, ctx))


def nagata_stages():
    """(id, id, phi^-1), (alpha, id, phi): the Nagata map written with a backwards weight step."""
    alpha = Elementary(CTX2, 0, p('x^2*z'))
    phi = z_elementary(0, '-y^2/x')
    return [Mt2Stage.build(CTX2, phi.inverse()), Mt2Stage.build(CTX2, phi, alpha=alpha)]


def consolidation_stages():
    identity = GeneralizedPermutation.identity(CTX2)
    return [
        (GeneratorWord(CTX2), identity, z_elementary(0, 'y^2/x')),
        (Elementary(CTX2, 0, p('x^2*z')), identity, z_elementary(0, '-y^2/x')),
    ]


class TestStages:
    def test_phi_must_be_a_z_elementary(self):
        with pytest.raises(InvalidGenerator):
            Mt2Stage.build(CTX2, Elementary(CTX2, 0, p('z')))

    def test_annotate_reads_minimal_weights(self):
        annotated = annotate(nagata_stages())
        assert [s.tau for s in annotated] == [WeightVector.of(0, 0), WeightVector.of(1, 0)]
        assert annotated[0].omega == images(CTX2, 'y + x*(x*z - y^2)',
                                            'z + 2*y*(x*z - y^2) + x*(x*z - y^2)^2', 'w')

    def test_annotate_checks_alpha(self):
        stage = Mt2Stage.build(CTX2, z_elementary(1, 'y'), alpha=Elementary(CTX2, 0, p('z')))
        with pytest.raises(HypothesisViolation) as info:
            annotate([stage])
        assert info.value.stage == 0


class TestPermutationMoves:
    def test_identity_rho_is_a_no_op(self):
        phi = GeneratorWord.of(CTX2, z_elementary(0, 'y^2/x'))
        identity = GeneralizedPermutation.identity(CTX2)
        assert rho_push(phi, identity, (1, 0)) is phi
        alpha = GeneratorWord.of(CTX2, Elementary(CTX2, 0, p('x^2*z')))
        assert ia_rho_conjugate(alpha, identity, (1, 0)) is alpha

    def test_rho_push_moves_the_variable(self):
        pushed = rho_push(z_elementary(0, 'y^2/x'), SWAP, (1, 0))
        assert pushed.generators == (z_elementary(1, 'y^2/x'),)

    def test_rho_push_needs_ea_tau(self):
        with pytest.raises(PreconditionFailed):
            rho_push(z_elementary(0, 'y^2/x^2'), SWAP, (1, 0))

    def test_ia_rho_conjugate(self):
        alpha = Elementary(CTX2, 0, p('x^2*z'))
        conjugated = ia_rho_conjugate(alpha, SWAP, (1, 0))
        assert conjugated.endo == images(CTX2, 'y + x^2*w', 'z', 'w')
        assert is_ia_tau(conjugated.endo, WeightVector.of(0, 1))


class TestSingleLemmas:
    def test_phi_ea_tau_check(self):
        stages = annotate(nagata_stages())
        assert phi_ea_tau_check(stages[0].phi, stages[0].rho_tau, stages[1].tau, stages[1].omega)

    def test_phi_ea_tau_check_needs_two_variables(self):
        example = catalog.get('crucial-difficulty')
        with pytest.raises(PreconditionFailed) as info:
            phi_ea_tau_check(example.word.generators[0], (0, 0, 0), example.extras['tau'],
                             example.evaluate())
        assert info.value.which == 'n_equals_two'

    def test_phi_ea_tau_check_needs_unit_generators(self):
        with pytest.raises(PreconditionFailed) as info:
            phi_ea_tau_check(z_elementary(0, 'y'), (0, 0), (1, 0), Endo.identity(CTX2))
        assert info.value.which == 'omega_generators'

    def test_acnonzero_with_diagonal_beta(self):
        one, zero, three = (Poly.constant(CTX2, v) for v in (1, 0, 3))
        beta = Linear(CTX2, ((one, zero), (zero, three)))
        phi = z_elementary(0, 'y^2/x')
        factor = acnonzero_factor(phi, beta, (1, 0))
        assert factor.phi == phi
        assert factor.rho.perm == (0, 1)
        assert factor.rho.scalars == (Fraction(1), Fraction(3))

    def test_acnonzero_needs_a_monomial_row(self):
        one, two = Poly.one(CTX2), Poly.constant(CTX2, 2)
        beta = Linear(CTX2, ((one, one), (one, two)))
        with pytest.raises(PatternMismatch):
            acnonzero_factor(z_elementary(0, 'y^2/x'), beta, (1, 0))

    def test_bar_keeps_the_leading_level(self):
        bar = bar_elementary(z_elementary(0, 'y^2/x + y'), (1, 0))
        assert bar == z_elementary(0, 'y^2/x')

    def test_eabar_over_a_is_trivial(self):
        ws = [z_elementary(0, 'y^2'), z_elementary(1, 'z')]
        factor = eabar_factor(ws, (0, 0))
        assert factor.bars == tuple(ws)
        assert factor.alpha.endo.is_identity()

    def test_eabar_splits_off_an_ia_part(self):
        factor = eabar_factor([z_elementary(0, 'y^2/x + y')], (1, 0))
        assert factor.bars == (z_elementary(0, 'y^2/x'),)
        assert factor.alpha.endo == images(CTX2, 'y', 'z + y', 'w')

    def test_merge_adjacent(self):
        first, second, other = z_elementary(0, 'y'), z_elementary(0, 'y^2'), z_elementary(1, 'z')
        assert merge_adjacent([first, second, other]) == [z_elementary(0, 'y + y^2'), other]
        assert merge_adjacent([first, first.inverse()]) == []
        assert merge_adjacent([first, other, other.inverse(), first.inverse()]) == []

    def test_only_one_phi_same_variable(self):
        phi = z_elementary(0, 'y^2/x')
        factor = only_one_phi_factor([phi, phi.inverse()], (1, 0), Endo.identity(CTX2))
        assert isinstance(factor, SameVariable)
        assert factor.merged.is_identity()
        assert factor.degree_profile == ((2, 1),)

    def test_only_one_phi_needs_exactly_one_generator_in_x_r(self):
        with pytest.raises(PreconditionFailed) as info:
            only_one_phi_factor([z_elementary(0, 'y')], (0, 0), Endo.identity(CTX2))
        assert info.value.which == 'assumption_1'


class TestMerges:
    def test_trivial_merge(self):
        identity = GeneralizedPermutation.identity(CTX2)
        merged = alpharho_merge(GeneratorWord(CTX2), identity, GeneratorWord(CTX2), identity,
                                (0, 0), (0, 0))
        assert merged.phi is None
        assert merged.alpha.endo.is_identity() and merged.rho.is_identity()

    def test_gap_must_have_rank_one(self):
        identity = GeneralizedPermutation.identity(CTX2)
        with pytest.raises(GapNotRankOne):
            alpharho_merge(GeneratorWord(CTX2), identity, GeneratorWord(CTX2), identity, (0, 0), (1, 1))

    def test_merge_reproduces_the_word(self, settings):
        identity = GeneralizedPermutation.identity(CTX2)
        sigma = images(CTX2, 'y + x*(x*z - y^2)', 'z + 2*y*(x*z - y^2) + x*(x*z - y^2)^2', 'w')
        alpha, phi = Elementary(CTX2, 0, p('x^2*z')), z_elementary(0, '-y^2/x')
        alpha2 = GeneratorWord.of(CTX2, phi.inverse(), alpha, phi)
        assert alpha2.endo == sigma
        merged = alpharho_merge(GeneratorWord(CTX2), identity, alpha2, identity, (0, 0), (1, 0),
                                settings=settings)
        assert is_ia_tau(merged.alpha.endo, WeightVector.of(0, 0))
        tail = [merged.phi] if merged.phi is not None else []
        assert compose(merged.alpha, merged.rho, *tail) == sigma

    def test_consolidation_moves_alphas_left(self, settings):
        stages = consolidation_stages()
        result = no_alpha_no_rho(stages, [(0, 0), (1, 0), (1, 0)], settings=settings)
        assert len(result.phis) == 2
        assert result.rho.is_identity()
        assert is_ia_tau(result.alpha.endo, WeightVector.of(0, 0))
        original = compose(*(part for stage in stages for part in stage))
        assert compose(result.alpha, result.rho, *result.phis) == original

    def test_consolidation_checks_the_stages(self):
        with pytest.raises(HypothesisViolation) as info:
            no_alpha_no_rho(consolidation_stages(), [(0, 0), (1, 0), (0, 0)])
        assert info.value.stage == 1


class TestTechnicalConditions:
    def test_identity_stage(self):
        report = technical_conditions([Mt2Stage.build(CTX2, z_elementary(0, '0'))])
        assert report.ok
        assert report.entries[0].delta == (0, 0)
        assert report.to_dict()['ok'] is True

    def test_nagata_stages(self):
        report = technical_conditions(nagata_stages())
        assert report.ok
        assert [e.delta for e in report.entries] == [(0, -1), (0, 1)]
        assert all(e.equivalent and e.gap_consequence for e in report.entries)
        assert report.entries[0].unit_consequence


class TestPipeline:
    def test_nagata_with_a_backwards_step(self, settings):
        certificate = mt2_pipeline(nagata_stages(), settings=settings)
        assert certificate.pipeline == 'mt2'
        assert certificate.passed
        assert certificate.theta.images[0] == p('y + x*(x*z - y^2)')
        assert certificate.composite == annotate(nagata_stages())[0].omega
        kinds = [entry['kind'] for entry in certificate.rewrite_trace]
        assert kinds[0] == 'iterate'
        for kind in ('consolidate', 'rescan', 'degree-profile', 'merge-same-variable'):
            assert kind in kinds

    def test_ordered_input_goes_straight_through(self, settings):
        alpha, phi = Elementary(CTX2, 0, p('x^2*z')), z_elementary(0, '-y^2/x')
        certificate = mt2_pipeline([Mt2Stage.build(CTX2, phi, alpha=alpha)], settings=settings)
        assert certificate.rewrite_trace == []
        assert certificate.passed
        assert certificate.theta.images[0] == p('y + x^2*z - x*y^2')

    def test_needs_two_variables(self, settings):
        with pytest.raises(PreconditionFailed):
            mt2_pipeline([Mt2Stage.build(CTX1, z_elementary(0, 'y', CTX1))], settings=settings)

    def test_empty_input_needs_context(self, settings):
        with pytest.raises(PreconditionFailed):
            mt2_pipeline([], settings=settings)

    def test_rewrite_must_shorten_the_word(self, settings, monkeypatch):
        monkeypatch.setattr(mt2, '_rewrite_segment', lambda stages, *args: list(stages))
        with pytest.raises(NonTermination) as info:
            mt2_pipeline(nagata_stages(), settings=settings)
        assert info.value.details['iteration'] == 0
        assert info.value.details['before'] == info.value.details['after'] == 2

    def test_rewrite_errors_carry_the_position(self, settings, monkeypatch):
        def mismatch(stages, a, *args):
            raise PatternMismatch("no split")

        monkeypatch.setattr(mt2, '_rewrite_segment', mismatch)
        with pytest.raises(PatternMismatch) as info:
            mt2_pipeline(nagata_stages(), settings=settings)
        assert info.value.details['position'] == 0


@st.composite
def two_variable_maps(draw):
    """t, P and H for (y + x H(x^t z), z) o (y, z + x^-t P(y)); P and H nonzero."""
    t = draw(st.integers(1, 2))
    small = st.integers(-2, 2).filter(bool)
    p_coeffs = draw(st.lists(st.integers(-2, 2), min_size=2, max_size=2).filter(any))
    h_terms = draw(st.lists(st.tuples(st.integers(1, 2), st.integers(0, 1), small), min_size=1, max_size=2))
    return t, p_coeffs, h_terms


def build_map(ctx, t, p_coeffs, h_terms):
    y, z = Poly.var(ctx, 'y'), Poly.var(ctx, 'z')
    p_poly = Poly.zero(ctx)
    for i, c in enumerate(p_coeffs):
        p_poly = p_poly + (y ** (i + 1)).scale(c)

    def h_of(v):
        total = Poly.zero(ctx)
        for power, shift, c in h_terms:
            total = total + (v ** power).times_x(shift).scale(c)
        return total

    alpha = Elementary(ctx, 0, h_of(z.times_x(t)).times_x(1))
    phi = Elementary.in_z(ctx, 0, p_poly.times_x(-t))
    expected_y = y + h_of(z.times_x(t) + p_poly).times_x(1)
    return alpha, phi, expected_y


class TestAgainstTwoVariableReduction:
    @given(two_variable_maps())
    @hsettings(max_examples=50, deadline=None)
    def test_same_y_component(self, data):
        t, p_coeffs, h_terms = data
        alpha1, phi1, expected1 = build_map(CTX1, t, p_coeffs, h_terms)
        alpha2, phi2, expected2 = build_map(CTX2, t, p_coeffs, h_terms)
        if alpha2.is_identity():
            return

        reduced = n2_reduce(compose(alpha1, phi1))
        certificate = mt2_pipeline([Mt2Stage.build(CTX2, phi2, alpha=alpha2)])
        assert reduced.endo.images[0] == expected1
        assert certificate.theta.images[0] == expected2
        assert certificate.theta.images[0].render() == reduced.endo.images[0].render()

    @given(two_variable_maps())
    @hsettings(max_examples=25, deadline=None)
    def test_backwards_step_matches(self, data):
        t, p_coeffs, h_terms = data
        alpha1, phi1, expected1 = build_map(CTX1, t, p_coeffs, h_terms)
        alpha2, phi2, expected2 = build_map(CTX2, t, p_coeffs, h_terms)
        if alpha2.is_identity():
            return

        stages = [Mt2Stage.build(CTX2, phi2.inverse()), Mt2Stage.build(CTX2, phi2, alpha=alpha2)]
        certificate = mt2_pipeline(stages)
        reduced = n2_reduce(compose(alpha1, phi1))
        assert certificate.passed
        assert certificate.rewrite_trace[0]['kind'] == 'iterate'
        assert certificate.theta.images[0] == expected2
        assert certificate.theta.images[0].render() == reduced.endo.images[0].render()
