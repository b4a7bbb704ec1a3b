from services.certifier import CoordinateCertifier

__all__ = ['CoordinateCertifier']
