import json

from flask import Blueprint, current_app, jsonify, request

from caching.cache_manager import cache_manager
from services.certifier import CoordinateCertifier

certification_bp = Blueprint('certification', __name__)


def _certifier() -> CoordinateCertifier:
    return current_app.extensions['coordinate_certifier']


def _json_body():
    data = request.get_json(silent=True)
    if not isinstance(data, dict):
        return None
    return data


@certification_bp.route('/verify', methods=['POST'])
def verify():
    document = _json_body()
    if document is None:
        return jsonify({'error': 'A certificate JSON object is required', 'code': 'bad_request'}), 400
    if 'certificate' in document:
        document = document['certificate']

    report = _certifier().verify(document)
    current_app.logger.info(f"Certificate check: valid={report['valid']}")
    return jsonify(report)


@certification_bp.route('/catalog')
def list_catalog():
    return jsonify({'presets': _certifier().list_presets()})


@certification_bp.route('/catalog/<name>')
def catalog_entry(name):
    certifier = _certifier()
    if name not in certifier.catalog.names():
        return jsonify({'error': f'Unknown preset: {name}', 'code': 'not_found'}), 404

    cached = cache_manager.get_result('preset', name)
    if cached is not None:
        return jsonify(cached)
    result = certifier.preset(name)
    cache_manager.store_result('preset', result, name)
    return jsonify(result)


@certification_bp.route('/certify', methods=['POST'])
def certify():
    data = _json_body()
    if data is None or 'pipeline' not in data:
        return jsonify({'error': 'Body must name a pipeline', 'code': 'bad_request'}), 400

    pipeline = data['pipeline']
    if pipeline not in _certifier().pipelines:
        return jsonify({'error': f'Unsupported pipeline: {pipeline}', 'code': 'bad_request'}), 400
    payload = data.get('input', {k: v for k, v in data.items() if k != 'pipeline'})
    key = json.dumps(payload, sort_keys=True)
    cached = cache_manager.get_result(pipeline, key)
    if cached is not None:
        return jsonify(cached)

    result = _certifier().certify(pipeline, payload)
    cache_manager.store_result(pipeline, result, key)
    return jsonify(result)
