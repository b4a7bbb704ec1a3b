from serialization.schemas import (
    SCHEMA_VERSION,
    dump_certificate,
    dump_endo,
    dump_word,
    load_certificate,
    load_endo,
    load_stages,
    load_word,
)

__all__ = ['SCHEMA_VERSION', 'dump_certificate', 'dump_endo', 'dump_word',
           'load_certificate', 'load_endo', 'load_stages', 'load_word']
