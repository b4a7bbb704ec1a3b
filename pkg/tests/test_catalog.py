from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catalog.presets import VENEREAU_SIGMAS, ConstructionCatalog, catalog, nagata, substitution_value, venereau_type
from errors import InternalContradiction, QNotInASigma0, UnknownVariable
from models.group import Endo
from models.ring import Poly, RingContext, parse_poly
from models.weights import a_tau_member, sigma_sequence

from .strategies import polys

CTX = RingContext(m=1, n=1)


@pytest.mark.parametrize('name', catalog.names())
def test_every_preset_reproduces_its_expectation(name):
    example = catalog.get(name)
    assert example.matches()
    assert example.summary()['name'] == example.identifier


def test_unknown_preset():
    with pytest.raises(ValueError):
        catalog.get('jung')


def test_broken_expectation_raises():
    broken = ConstructionCatalog()
    broken.presets['broken-nagata'] = lambda: replace(nagata(), expected=Endo.identity(CTX))
    with pytest.raises(InternalContradiction) as info:
        broken.get('broken-nagata')
    assert info.value.details['preset'] == 'broken-nagata'
    assert info.value.dump['expected'] == ['y', 'z']
    assert info.value.dump['evaluated'] == nagata().evaluate().render()


class TestNagataAndAnick:
    def test_nagata_is_certifiable(self):
        example = catalog.get('nagata')
        assert example.certifiable and example.pipeline == 'mt1'
        assert example.evaluate().is_over_r()
        assert example.evaluate().jacobian().unit_value == 1

    def test_anick_has_a_parameter(self):
        example = catalog.get('anick')
        assert example.ctx.u_names == ('t',)
        assert example.evaluate().z_image(0) == parse_poly('z - t*(x*z + y*t)', example.ctx)


class TestVenereau:
    def test_sigma_sequence(self):
        example = catalog.get('venereau')
        sequence = sigma_sequence(example.phi_word.generators, example.ctx)
        assert [tuple(s) for s in sequence.sigmas] == list(VENEREAU_SIGMAS)

    def test_venereau_polynomial(self):
        example = catalog.get('venereau')
        assert example.expected_theta_y == parse_poly('y + x*(x*z + y*(y*u + z^2))', example.ctx)

    def test_zero_q_gives_y(self):
        example = venereau_type('0')
        assert example.expected_theta_y == Poly.var(example.ctx, 'y')
        assert example.alpha.endo.is_identity()
        assert example.matches()

    def test_q_must_be_over_q_x(self):
        with pytest.raises(QNotInASigma0):
            venereau_type('w1/x')

    def test_q_uses_only_the_placeholders(self):
        with pytest.raises(UnknownVariable):
            venereau_type('w1 + y')

    def test_q_from_another_ring(self):
        with pytest.raises(QNotInASigma0):
            venereau_type(parse_poly('y', CTX))

    def test_eq1_is_evaluation_only(self):
        example = catalog.get('venereau-eq1')
        assert not example.certifiable
        assert not example.word.is_tame()
        assert example.evaluate().images[0] == parse_poly('y + x*(x*z + y*(y*u + z^2))', example.ctx)


class TestRussell:
    def test_default(self):
        example = catalog.get('russell')
        assert example.expected_theta_y == parse_poly('y + x*y^2 + x*z', CTX)
        assert example.certifiable

    def test_s_zero_is_evaluation_only(self):
        example = catalog.get('russell', s=0)
        assert not example.certifiable
        assert example.matches()

    @pytest.mark.parametrize('params', [
        {'lam': 0},
        {'s': -1},
        {'f': 'z'},
        {'f': 'y/x'},
    ])
    def test_rejects_bad_parameters(self, params):
        with pytest.raises(ValueError):
            catalog.get('russell', **params)

    @given(polys(CTX, max_terms=3, max_degree=3, free_of=(CTX.z_index(0),)),
           st.integers(1, 4), st.fractions(min_value=-3, max_value=3, max_denominator=3).filter(bool))
    @settings(max_examples=50, deadline=None)
    def test_theta_y_formula(self, f, s, lam):
        example = catalog.get('russell', f=f, s=s, lam=lam)
        assert example.matches()


class TestCrucialDifficulty:
    def test_substitution_value(self):
        example = catalog.get('crucial-difficulty')
        value = substitution_value(example)
        assert value == example.extras['value']
        assert value.x_order() == 2

    def test_p_is_in_a_tau_but_not_in_x_a_tau(self):
        example = catalog.get('crucial-difficulty')
        tau, p = example.extras['tau'], example.extras['p']
        assert a_tau_member(p, tau)
        assert not a_tau_member(p.times_x(-1), tau)
