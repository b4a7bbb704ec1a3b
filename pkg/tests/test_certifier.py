import copy

import pytest
from marshmallow import ValidationError

from errors import InvalidGenerator, PreconditionFailed
from models.group import Elementary, ExplicitEndo, GeneralizedPermutation, GeneratorWord, Linear
from models.ring import Poly, RingContext, parse_poly
from serialization.schemas import dump_word, load_certificate, load_stages, load_word
from services.certifier import CoordinateCertifier

NAGATA_AT2 = {
    'context': {'m': 1, 'n': 1},
    'alpha': [{'kind': 'elementary', 'var': 'y', 'poly': 'x^2*z'}],
    'word': [{'kind': 'elementary', 'var': 'z', 'poly': '-y^2/x'}],
}

NAGATA_MT2 = {
    'context': {'m': 1, 'n': 2, 'z_names': ['z', 'w']},
    'stages': [
        {'phi': [{'kind': 'elementary', 'var': 'z', 'poly': 'y^2/x'}]},
        {'alpha': [{'kind': 'elementary', 'var': 'y', 'poly': 'x^2*z'}],
         'phi': [{'kind': 'elementary', 'var': 'z', 'poly': '-y^2/x'}]},
    ],
}


@pytest.fixture
def certifier(settings):
    return CoordinateCertifier(settings=settings)


@pytest.fixture
def nagata_certificate(certifier):
    return certifier.certify('at2', copy.deepcopy(NAGATA_AT2))['certificate']


class TestCertify:
    def test_at2_document(self, certifier):
        result = certifier.certify('at2', copy.deepcopy(NAGATA_AT2))
        assert result['success'] and result['passed']
        document = result['certificate']
        assert document['version'] == 1
        assert document['pipeline'] == 'at2'
        assert document['tau_sequence'] == [[1]]
        ctx = RingContext(m=1, n=1)
        assert parse_poly(document['theta'][0], ctx) == parse_poly('y + x^2*z - x*y^2', ctx)
        assert all(document['checks'][name] for name in ('over_r', 'id_mod_x', 'roundtrip', 'y_match'))

    def test_mt1_document(self, certifier):
        payload = {
            'context': {'m': 1, 'n': 1},
            'stages': [{'alpha': NAGATA_AT2['alpha'], 'phi': NAGATA_AT2['word'], 'tau': [1]}],
        }
        result = certifier.certify('mt1', payload)
        assert result['passed']
        assert result['certificate']['pipeline'] == 'mt1'

    def test_mt2_document(self, certifier):
        result = certifier.certify('mt2', copy.deepcopy(NAGATA_MT2))
        assert result['passed']
        certificate = result['certificate']
        assert certificate['pipeline'] == 'mt2'
        assert certificate['rewrite_trace'][0]['kind'] == 'iterate'
        assert certifier.verify(certificate)['valid']

    def test_mt2_needs_single_elementaries(self, certifier):
        payload = copy.deepcopy(NAGATA_MT2)
        payload['stages'][0]['phi'] = []
        with pytest.raises(InvalidGenerator):
            certifier.certify('mt2', payload)

    def test_mt2_needs_two_variables(self, certifier):
        with pytest.raises(PreconditionFailed):
            certifier.certify('mt2', {'context': {'m': 1, 'n': 1}, 'stages': []})

    def test_n2(self, certifier):
        payload = {'context': {'m': 1, 'n': 1}, 'images': ['y + x^2*z - x*y^2', 'z - y^2/x']}
        result = certifier.certify('n2', payload)
        assert result['passed'] and result['iterations'] == 1
        ctx = RingContext(m=1, n=1)
        assert parse_poly(result['endo']['images'][1], ctx) == parse_poly(
            'z + 2*y*(x*z - y^2) + x*(x*z - y^2)^2', ctx)

    def test_unknown_pipeline(self, certifier):
        with pytest.raises(ValueError):
            certifier.certify('mt3', {})

    def test_invalid_input(self, certifier):
        payload = copy.deepcopy(NAGATA_AT2)
        payload['word'][0]['poly'] = '-y^2/q'
        with pytest.raises(ValidationError):
            certifier.certify('at2', payload)

    def test_empty_mt1_needs_no_stage(self, certifier):
        result = certifier.certify('mt1', {'context': {'m': 1, 'n': 2}, 'stages': []})
        assert result['passed']

    def test_presets(self, certifier):
        listed = certifier.list_presets()
        assert {p['name'] for p in listed} == set(certifier.catalog.names())
        crucial = certifier.preset('crucial-difficulty')
        assert crucial['matches_expectation'] and 'certificate' not in crucial
        nagata = certifier.preset('nagata')
        assert nagata['passed'] and nagata['certificate']['pipeline'] == 'mt1'

    def test_evaluation_only_example(self, certifier):
        with pytest.raises(ValueError):
            certifier.certify_example(certifier.catalog.get('venereau-eq1'))


class TestVerify:
    def test_fresh_certificate_is_valid(self, certifier, nagata_certificate):
        report = certifier.verify(nagata_certificate)
        assert report['valid'] and report['tame_flag']
        assert report['failures'] == []
        assert report['checks']['theta_matches_word'] and report['checks']['stored_checks_agree']

    def test_tampered_theta(self, certifier, nagata_certificate):
        nagata_certificate['theta'][0] = 'y'
        report = certifier.verify(nagata_certificate)
        assert not report['valid']
        assert [f['check'] for f in report['failures']] == ['theta_matches_word']

    def test_tampered_theta_word(self, certifier, nagata_certificate):
        nagata_certificate['theta_word'] = []
        report = certifier.verify(nagata_certificate)
        failed = {f['check'] for f in report['failures']}
        assert not report['valid']
        assert {'y_match', 'theta_matches_word', 'stored_checks_agree'} <= failed

    def test_tampered_composite(self, certifier, nagata_certificate):
        nagata_certificate['composite'][0] = 'y + x*z'
        report = certifier.verify(nagata_certificate)
        assert 'composite_matches_input' in {f['check'] for f in report['failures']}

    def test_version_is_checked(self, certifier, nagata_certificate):
        nagata_certificate['version'] = 2
        with pytest.raises(ValidationError):
            certifier.verify(nagata_certificate)

    def test_pipeline_is_checked(self, nagata_certificate):
        nagata_certificate['pipeline'] = 'n2'
        with pytest.raises(ValidationError):
            load_certificate(nagata_certificate)


class TestSchemas:
    def test_word_with_every_generator_kind(self):
        ctx = RingContext(m=1, n=2)
        one, zero = Poly.one(ctx), Poly.zero(ctx)
        forward = (parse_poly('y', ctx), parse_poly('z1 + y^2', ctx), parse_poly('z2', ctx))
        backward = (parse_poly('y', ctx), parse_poly('z1 - y^2', ctx), parse_poly('z2', ctx))
        word = GeneratorWord(ctx, (
            Elementary.in_z(ctx, 0, parse_poly('y*z2/x', ctx)),
            Linear(ctx, ((one, parse_poly('y', ctx)), (zero, Poly.constant(ctx, 2)))),
            GeneralizedPermutation(ctx, (1, 0), (2, -1), (1, -1)),
            ExplicitEndo(ctx, forward, backward, tame=False),
        ))
        document = dump_word(word)
        assert [g['kind'] for g in document['generators']] == ['elementary', 'linear', 'genperm', 'explicit']
        loaded = load_word(document)
        assert loaded.endo == word.endo
        assert not loaded.is_tame()

    def test_context_is_required(self):
        with pytest.raises(ValidationError) as info:
            load_word({'generators': []})
        assert 'context' in info.value.messages

    @pytest.mark.parametrize('generator', [
        {'kind': 'elementary', 'var': 'x', 'poly': 'y'},
        {'kind': 'elementary', 'var': 'z'},
        {'kind': 'elementary', 'var': 'z', 'poly': 'z^2'},
        {'kind': 'rotation'},
        {'kind': 'genperm', 'perm': [0], 'scalars': ['0'], 'shifts': [0]},
    ])
    def test_bad_generators(self, generator):
        with pytest.raises(ValidationError):
            load_word({'context': {'m': 1, 'n': 1}, 'generators': [generator]})

    def test_stage_rho_must_be_a_permutation(self):
        payload = {
            'context': {'m': 1, 'n': 1},
            'stages': [{'rho': {'kind': 'elementary', 'var': 'z', 'poly': 'y'}}],
        }
        with pytest.raises(ValidationError):
            load_stages(payload)

    def test_stage_defaults(self):
        data = load_stages({'context': {'m': 1, 'n': 1}, 'stages': [{}]})
        stage = data['stages'][0]
        assert stage['alpha'] == [] and stage['rho'] is None and stage['tau'] is None
