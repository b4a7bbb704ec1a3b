from catalog.presets import ConstructionCatalog, NamedExample, catalog, substitution_value

__all__ = ['ConstructionCatalog', 'NamedExample', 'catalog', 'substitution_value']
