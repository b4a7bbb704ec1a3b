import copy

import pytest

from app import create_app
from config.production import TestingConfig

from .test_certifier import NAGATA_AT2


@pytest.fixture
def client():
    app = create_app(TestingConfig)
    with app.test_client() as client:
        yield client


def test_health(client):
    response = client.get('/health/health')
    assert response.status_code == 200
    assert response.get_json()['status'] == 'healthy'


def test_security_headers(client):
    response = client.get('/health/liveness')
    assert response.headers['X-Frame-Options'] == 'DENY'
    assert response.headers['X-Content-Type-Options'] == 'nosniff'


def test_catalog_listing(client):
    response = client.get('/api/catalog')
    assert response.status_code == 200
    names = {preset['name'] for preset in response.get_json()['presets']}
    assert {'nagata', 'anick', 'russell', 'crucial-difficulty'} <= names


def test_catalog_entry_is_cached(client):
    first = client.get('/api/catalog/nagata')
    second = client.get('/api/catalog/nagata')
    assert first.status_code == second.status_code == 200
    assert first.get_json()['passed']
    assert first.get_json() == second.get_json()


def test_unknown_preset(client):
    response = client.get('/api/catalog/jung')
    assert response.status_code == 404
    assert response.get_json()['code'] == 'not_found'


def test_certify_and_verify(client):
    response = client.post('/api/certify', json={'pipeline': 'at2', 'input': copy.deepcopy(NAGATA_AT2)})
    assert response.status_code == 200
    body = response.get_json()
    assert body['passed']

    response = client.post('/api/verify', json=body)
    assert response.status_code == 200
    assert response.get_json()['valid']


def test_certify_needs_a_pipeline(client):
    response = client.post('/api/certify', json={'context': {'m': 1, 'n': 1}})
    assert response.status_code == 400
    assert response.get_json()['code'] == 'bad_request'


def test_certify_unknown_pipeline(client):
    response = client.post('/api/certify', json={'pipeline': 'mt3'})
    assert response.status_code == 400


def test_invalid_input(client):
    payload = copy.deepcopy(NAGATA_AT2)
    payload['alpha'][0]['var'] = 'q'
    response = client.post('/api/certify', json={'pipeline': 'at2', 'input': payload})
    assert response.status_code == 400
    assert response.get_json()['code'] == 'validation_error'


def test_engine_error(client):
    payload = {'context': {'m': 1, 'n': 1}, 'images': ['y + z', 'z']}
    response = client.post('/api/certify', json={'pipeline': 'n2', 'input': payload})
    assert response.status_code == 400
    assert response.get_json()['code'] == 'precondition_failed'


def test_verify_needs_json(client):
    response = client.post('/api/verify', data='certificate', content_type='text/plain')
    assert response.status_code == 415


def test_verify_rejects_bad_versions(client):
    response = client.post('/api/verify', json={'version': 7, 'context': {'m': 1, 'n': 1}})
    assert response.status_code == 400
