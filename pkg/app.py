import os
import logging
from logging.handlers import RotatingFileHandler
from flask import Flask, request, jsonify
from flask_talisman import Talisman
from marshmallow import ValidationError
from werkzeug.middleware.proxy_fix import ProxyFix
from config.production import ReductionSettings, get_config
from errors import CoordinateError, FalsificationAlarm
from services.certifier import CoordinateCertifier

LOG_FORMAT = '%(asctime)s %(levelname)s: %(message)s [in %(pathname)s:%(lineno)d]'


# Configure logging
def setup_logging(app):
    level = getattr(logging, app.config.get('LOG_LEVEL', 'INFO'))
    log_file = app.config.get('LOG_FILE')
    if not app.debug and not app.testing and log_file:
        # Production logging setup
        log_dir = os.path.dirname(log_file)
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir)

        file_handler = RotatingFileHandler(
            log_file,
            maxBytes=app.config.get('LOG_MAX_BYTES', 10 * 1024 * 1024),
            backupCount=app.config.get('LOG_BACKUP_COUNT', 5)
        )
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        file_handler.setLevel(level)
        app.logger.addHandler(file_handler)
        logging.getLogger().addHandler(file_handler)
        logging.getLogger().setLevel(level)

        app.logger.setLevel(level)
        app.logger.info('Coordinate certification service startup')

    # Development logging
    else:
        logging.basicConfig(level=logging.DEBUG if app.debug else level, format=LOG_FORMAT)


def setup_service_features(app):
    """Security, caching, health checks and rate limiting"""
    from security.rate_limiting import SecurityMiddleware
    from caching.cache_manager import cache_manager
    from monitoring.health_checks import health_bp

    SecurityMiddleware(app)

    # Setup Talisman for security headers if in production
    if not app.config.get('DEBUG', False) and not app.testing:
        talisman_config = app.config.get('TALISMAN_CONFIG', {})
        Talisman(app, **talisman_config)

    if app.config.get('ENABLE_CACHING', True):
        cache_manager.init_app(app)

    app.register_blueprint(health_bp, url_prefix='/health')

    if app.config.get('ENABLE_RATE_LIMITING', True):
        try:
            from security.rate_limiting import setup_rate_limiting
            setup_rate_limiting(app)
        except Exception as e:
            app.logger.warning(f"Rate limiting setup failed: {str(e)}")


def create_app(config_class=None):
    app = Flask(__name__)

    # Load configuration based on environment
    if config_class is None:
        config_class = get_config()

    app.config.from_object(config_class)

    # Validate configuration for production
    try:
        config_class.validate_config()
    except ValueError as e:
        if app.config.get('DEBUG', False):
            print(f"Configuration warning (development mode): {str(e)}")
        else:
            app.logger.error(f"Configuration validation failed: {str(e)}")
            raise
    except AttributeError:
        # Development config doesn't have validate_config method
        pass

    app.secret_key = app.config.get('SECRET_KEY')

    # ProxyFix for proper URL generation with HTTPS
    app.wsgi_app = ProxyFix(app.wsgi_app, x_proto=1, x_host=1)

    setup_logging(app)

    app.extensions['coordinate_certifier'] = CoordinateCertifier(ReductionSettings.from_config(config_class))

    from blueprints.certification import certification_bp
    app.register_blueprint(certification_bp, url_prefix='/api')

    setup_service_features(app)

    # Error handlers
    @app.errorhandler(ValidationError)
    def validation_error(error):
        app.logger.warning(f'Invalid input at {request.url}: {error.messages}')
        return jsonify({'error': 'Invalid input', 'code': 'validation_error', 'details': error.messages}), 400

    @app.errorhandler(CoordinateError)
    def coordinate_error(error):
        if isinstance(error, FalsificationAlarm):
            app.logger.error(f'Falsification alarm at {request.url}: {error.code}: {error.message}')
        else:
            app.logger.info(f'{error.code} at {request.url}: {error.message}')
        return jsonify(error.to_dict()), 400

    @app.errorhandler(404)
    def not_found_error(error):
        app.logger.warning(f'404 error: {request.url}')
        return jsonify({'error': 'Not found', 'code': 'not_found'}), 404

    @app.errorhandler(500)
    def internal_error(error):
        app.logger.error(f'500 error: {str(error)} at {request.url}', exc_info=True)
        return jsonify({'error': 'Internal server error', 'code': 'internal'}), 500

    @app.errorhandler(429)
    def rate_limit_error(error):
        app.logger.warning(f'Rate limit exceeded: {request.url} from {request.remote_addr}')
        return jsonify({'error': 'Rate limit exceeded. Please try again later.', 'code': 'rate_limited'}), 429

    return app


# Create the application instance
app = create_app()
