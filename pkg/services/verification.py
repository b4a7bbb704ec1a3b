"""Independent re-check of a stored certificate.

Only the ring and group layers are used here: the certificate is replayed
from its embedded words, never from pipeline code.
"""
import logging
from typing import Any, Dict, List

from models.group import Endo, GeneratorWord, coordinate_checks

logger = logging.getLogger(__name__)

REQUIRED_CHECKS = ('over_r', 'id_mod_x', 'inverse_over_r', 'roundtrip', 'y_match', 'jacobian_unit')


_REASONS = {
    'over_r': "theta has a negative power of x",
    'id_mod_x': "theta is not the identity modulo x",
    'inverse_over_r': "theta^-1 has a negative power of x",
    'roundtrip': "a generator of theta does not compose with its inverse to the identity",
    'y_match': "theta(y) differs from the composite's y-components",
    'jacobian_unit': "Jacobian determinant is not a nonzero rational",
    'theta_matches_word': "stored theta differs from the evaluated theta word",
    'composite_matches_input': "stored composite differs from the evaluated input word",
    'stored_checks_agree': "stored check flags disagree with the recomputation",
}


def verify_certificate(record: Dict[str, Any]) -> Dict[str, Any]:
    """Re-derive every check of a loaded certificate (see ``serialization.schemas.load_certificate``)."""
    theta_word: GeneratorWord = record['theta_word']
    input_word: GeneratorWord = record['input_word']
    composite: Endo = record['composite']

    checks = coordinate_checks(theta_word, composite)
    checks['theta_matches_word'] = theta_word.endo == record['theta']
    checks['composite_matches_input'] = input_word.endo == composite
    stored = record.get('checks') or {}
    checks['stored_checks_agree'] = all(stored.get(name) == checks[name] for name in REQUIRED_CHECKS)

    failures: List[Dict[str, str]] = [
        {'check': name, 'reason': _REASONS[name]} for name, passed in checks.items() if not passed
    ]
    if failures:
        logger.warning(f"Certificate verification failed: {', '.join(f['check'] for f in failures)}")
    else:
        logger.info(f"Certificate for {record.get('pipeline')} run verified")
    return {
        'valid': not failures,
        'pipeline': record.get('pipeline'),
        'checks': checks,
        'failures': failures,
        'tame_flag': theta_word.is_tame(),
    }
