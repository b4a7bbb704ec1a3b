from blueprints.certification import certification_bp

__all__ = ['certification_bp']
