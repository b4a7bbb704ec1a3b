from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional
import logging

logger = logging.getLogger(__name__)


@dataclass
class ReductionStep:
    """One rewrite performed by a reduction or pipeline."""

    kind: str
    stage: Optional[int] = None
    details: Dict[str, Any] = field(default_factory=dict)
    logged_at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def to_dict(self) -> Dict[str, Any]:
        data = {'kind': self.kind, 'details': self.details}
        if self.stage is not None:
            data['stage'] = self.stage
        return data


class StepLogger:
    """Rewrite trace for the pipelines; every step is also sent to the application log"""

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self.steps: List[ReductionStep] = []

    def log_step(self, kind, stage=None, **details):
        """Record a rewrite step"""
        step = ReductionStep(kind=kind, stage=stage, details=details)
        self.steps.append(step)
        if not self.enabled:
            return step

        log_msg = f"STEP: {kind}"
        if stage is not None:
            log_msg += f" stage:{stage}"
        logger.info(log_msg)
        if details:
            logger.debug(f"STEP {kind} details: {details}")
        return step

    def log_check(self, stage, name, passed):
        """Record the outcome of a certificate check"""
        return self.log_step('check', stage=stage, name=name, passed=bool(passed))

    def log_alarm(self, alarm):
        """Log a falsification alarm with its replay dump"""
        self.steps.append(ReductionStep(kind='alarm', details={'code': alarm.code,
                                                               'message': alarm.message}))
        logger.error(f"ALARM: {alarm.code}: {alarm.message}")
        if getattr(alarm, 'dump', None):
            logger.error(f"ALARM dump: {alarm.dump}")

    def extend(self, other: 'StepLogger'):
        self.steps.extend(other.steps)

    def to_list(self) -> List[Dict[str, Any]]:
        return [step.to_dict() for step in self.steps]

    def __len__(self):
        return len(self.steps)
