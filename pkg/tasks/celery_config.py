import os
from celery import Celery


def make_celery(app=None):
    """Create Celery instance and configure it."""
    celery = Celery(
        'coordcert',
        broker=os.getenv('CELERY_BROKER_URL', os.getenv('REDIS_URL', 'redis://localhost:6379/0')),
        backend=os.getenv('CELERY_RESULT_BACKEND', os.getenv('REDIS_URL', 'redis://localhost:6379/0')),
        include=['tasks.certification_tasks']
    )

    celery.conf.update(
        timezone='UTC',
        enable_utc=True,
        task_serializer='json',
        result_serializer='json',
        accept_content=['json'],
        task_routes={
            'tasks.certification_tasks.certify_stages': {'queue': 'certification'},
            'tasks.certification_tasks.verify_certificate': {'queue': 'verification'},
        },
        # Long Venereau-type runs
        task_time_limit=int(os.getenv('CERTIFY_TIME_LIMIT', 600)),
    )

    if app:
        celery.conf.update(
            broker_url=app.config.get('CELERY_BROKER_URL', celery.conf.broker_url),
            result_backend=app.config.get('CELERY_RESULT_BACKEND', celery.conf.result_backend),
        )

        class ContextTask(celery.Task):
            """Make celery tasks work with Flask app context."""
            def __call__(self, *args, **kwargs):
                with app.app_context():
                    return self.run(*args, **kwargs)

        celery.Task = ContextTask

    return celery


# Create Celery instance
celery_app = make_celery()
