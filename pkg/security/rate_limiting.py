from flask_limiter import Limiter
from flask_limiter.util import get_remote_address
from flask import request
import logging


def setup_rate_limiting(app):
    """Configure rate limiting for the application"""

    # Redis in production, memory storage otherwise
    storage_uri = app.config.get('RATELIMIT_STORAGE_URI', 'memory://')

    try:
        limiter = Limiter(
            get_remote_address,
            app=app,
            storage_uri=storage_uri,
            default_limits=[app.config.get('RATELIMIT_DEFAULT', '1000 per hour')],
            headers_enabled=True
        )

        # Pipeline runs can be expensive; verification is cheap
        limiter.limit(app.config.get('RATELIMIT_CERTIFY', '30 per minute'))(
            app.view_functions['certification.certify'])
        limiter.limit(app.config.get('RATELIMIT_VERIFY', '300 per minute'))(
            app.view_functions['certification.verify'])

        app.logger.info("Rate limiting configured successfully")
        return limiter

    except Exception as e:
        app.logger.error(f"Failed to setup rate limiting: {str(e)}")
        # Fallback to basic memory-based limiting
        return Limiter(
            get_remote_address,
            app=app,
            storage_uri='memory://',
            default_limits=["200 per hour"]
        )


class SecurityMiddleware:
    """Security headers and request size checks for the JSON API"""

    def __init__(self, app):
        self.app = app
        self.setup_security_headers()
        self.setup_input_validation()

    def setup_security_headers(self):
        """Add security headers to all responses"""
        @self.app.after_request
        def add_security_headers(response):
            response.headers['X-Frame-Options'] = 'DENY'
            response.headers['X-Content-Type-Options'] = 'nosniff'
            response.headers['Referrer-Policy'] = 'no-referrer'
            response.headers['Content-Security-Policy'] = "default-src 'none'; frame-ancestors 'none'"
            return response

    def setup_input_validation(self):
        """Reject oversized bodies and non-JSON writes"""
        @self.app.before_request
        def validate_input():
            max_content_length = self.app.config.get('MAX_CONTENT_LENGTH', 8 * 1024 * 1024)
            if request.content_length and request.content_length > max_content_length:
                logging.warning(f"Request too large: {request.content_length} bytes from {get_remote_address()}")
                return {'error': 'Request too large', 'code': 'too_large'}, 413

            if request.method == 'POST' and not request.is_json:
                logging.warning(f"Non-JSON POST to {request.path} from {get_remote_address()}")
                return {'error': 'Expected application/json', 'code': 'bad_request'}, 415
