import logging

from errors import CoordinateError
from marshmallow import ValidationError
from services.certifier import CoordinateCertifier
from tasks.celery_config import celery_app

logger = logging.getLogger(__name__)


@celery_app.task
def certify_stages(pipeline, payload):
    """Run a certification pipeline in the background."""
    logger.info(f"Background {pipeline} run started")
    try:
        return CoordinateCertifier().certify(pipeline, payload)
    except ValidationError as e:
        logger.warning(f"Rejected {pipeline} input: {e.messages}")
        return {'success': False, 'error': 'invalid input', 'details': e.messages}
    except CoordinateError as e:
        logger.error(f"{pipeline} run failed: {e.code}: {e.message}")
        return {'success': False, **e.to_dict()}


@celery_app.task
def verify_certificate(document):
    """Re-check a stored certificate in the background."""
    try:
        return CoordinateCertifier().verify(document)
    except ValidationError as e:
        logger.warning(f"Rejected certificate: {e.messages}")
        return {'success': False, 'error': 'invalid input', 'details': e.messages}
