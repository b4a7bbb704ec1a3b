from models.group import Elementary, Endo, ExplicitEndo, GeneralizedPermutation, GeneratorWord, Linear, compose
from models.ring import Poly, RingContext, parse_poly
from models.weights import WeightVector, minimal_tau, sigma_sequence

__all__ = [
    'Elementary', 'Endo', 'ExplicitEndo', 'GeneralizedPermutation', 'GeneratorWord', 'Linear', 'compose',
    'Poly', 'RingContext', 'parse_poly',
    'WeightVector', 'minimal_tau', 'sigma_sequence',
]
