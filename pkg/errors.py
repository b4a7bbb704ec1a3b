"""Exception hierarchy shared by the engine, the CLI and the HTTP surface."""
from typing import Any, Dict, Optional


class CoordinateError(Exception):
    """Base class for every error raised by the certification engine."""

    code = 'coordinate_error'

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        return {
            'error': self.message,
            'code': self.code,
            'details': {key: _plain(value) for key, value in self.details.items()},
        }


def _plain(value: Any) -> Any:
    if isinstance(value, (str, int, bool)) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, dict):
        return {str(key): _plain(item) for key, item in value.items()}
    return str(value)


# Ring layer

class RingError(CoordinateError):
    code = 'ring_error'


class ContextMismatch(RingError):
    code = 'context_mismatch'


class PolySyntaxError(RingError):
    code = 'poly_syntax'

    def __init__(self, message: str, position: Optional[int] = None, **details: Any):
        super().__init__(message, position=position, **details)
        self.position = position


class UnknownVariable(RingError):
    code = 'unknown_variable'

    def __init__(self, name: str, position: Optional[int] = None):
        super().__init__(f"Unknown variable '{name}'", name=name, position=position)
        self.name = name
        self.position = position


class NegativePower(RingError):
    code = 'negative_power'


class NotOverR(RingError):
    code = 'not_over_r'


class MissingImage(RingError):
    code = 'missing_image'


# Group layer

class GroupError(CoordinateError):
    code = 'group_error'


class InvalidGenerator(GroupError):
    code = 'invalid_generator'


class ShapeMismatch(GroupError):
    code = 'shape_mismatch'


class WitnessNotInATau(GroupError):
    code = 'witness_not_in_a_tau'


class NonElementaryGenerator(GroupError):
    code = 'non_elementary_generator'


# Weights

class WeightError(CoordinateError):
    code = 'weight_error'


class YImageNotIntegral(WeightError):
    code = 'y_image_not_integral'


class RhoTauNotNatural(WeightError):
    code = 'rho_tau_not_natural'


class IncomparableWeights(WeightError):
    code = 'incomparable_weights'


class ZeroPolynomial(WeightError):
    code = 'zero_polynomial'


# Reductions and pipelines

class ReductionError(CoordinateError):
    code = 'reduction_error'


class PreconditionFailed(ReductionError):
    code = 'precondition_failed'

    def __init__(self, which: str, message: Optional[str] = None, **details: Any):
        super().__init__(message or f"Precondition failed: {which}", which=which, **details)
        self.which = which


class HypothesisViolation(ReductionError):
    code = 'hypothesis_violation'

    def __init__(self, stage: int, inequality: str, **details: Any):
        super().__init__(f"Stage {stage}: {inequality}", stage=stage, inequality=inequality, **details)
        self.stage = stage
        self.inequality = inequality


class NotInIATau(ReductionError):
    code = 'not_in_ia_tau'


class AlphaNotInIASigma0(ReductionError):
    code = 'alpha_not_in_ia_sigma0'


class ElementaryNotInEASigma(ReductionError):
    code = 'elementary_not_in_ea_sigma'


class JacobianNotUnit(ReductionError):
    code = 'jacobian_not_unit'


class SplitFailure(ReductionError):
    code = 'split_failure'


class GapNotRankOne(ReductionError):
    code = 'gap_not_rank_one'


class PatternMismatch(ReductionError):
    code = 'pattern_mismatch'


class QNotInASigma0(ReductionError):
    code = 'q_not_in_a_sigma0'


class NonTermination(ReductionError):
    code = 'non_termination'


# Alarms: a theorem-guaranteed property failed at runtime

class FalsificationAlarm(CoordinateError):
    """Raised when a guaranteed membership or identity fails; carries a replayable dump."""

    code = 'falsification_alarm'

    def __init__(self, message: str, dump: Optional[Dict[str, Any]] = None, **details: Any):
        super().__init__(message, dump=dump or {}, **details)
        self.dump = dump or {}


class MembershipViolation(FalsificationAlarm):
    code = 'membership_violation'


class ConjugateEscapesIATau(FalsificationAlarm):
    code = 'conjugate_escapes_ia_tau'


class InternalContradiction(FalsificationAlarm):
    code = 'internal_contradiction'
