from audit.step_log import ReductionStep, StepLogger

__all__ = ['ReductionStep', 'StepLogger']
