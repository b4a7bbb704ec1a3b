import logging
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

from audit.step_log import StepLogger
from catalog.presets import ConstructionCatalog, NamedExample, catalog as default_catalog
from config.production import ReductionSettings
from errors import InvalidGenerator
from models.group import Elementary, GeneratorWord
from serialization.schemas import (
    dump_certificate,
    dump_endo,
    dump_word,
    load_at2_input,
    load_certificate,
    load_endo,
    load_stages,
)
from services.mt2 import Mt2Stage, mt2_pipeline
from services.reduction import Certificate, Mt1Stage, at2_pipeline, at2_stages, mt1_pipeline, n2_reduce
from services.verification import verify_certificate

logger = logging.getLogger(__name__)


class CoordinateCertifier:
    """Single entry point shared by the CLI, the HTTP blueprint and the Celery tasks."""

    def __init__(self, settings: Optional[ReductionSettings] = None,
                 catalog: Optional[ConstructionCatalog] = None):
        self.settings = settings or ReductionSettings.from_config()
        self.catalog = catalog or default_catalog
        self.pipelines = {
            'at2': self._run_at2,
            'mt1': self._run_mt1,
            'mt2': self._run_mt2,
            'n2': self._run_n2,
        }

    def certify(self, pipeline: str, payload: Dict[str, Any]) -> Dict[str, Any]:
        """Run a pipeline on a JSON payload and return its certificate document."""
        if pipeline not in self.pipelines:
            raise ValueError(f"Unsupported pipeline: {pipeline}")

        log = StepLogger(enabled=self.settings.enable_step_log)
        result = self.pipelines[pipeline](payload, log)
        logger.info(f"{pipeline} run finished with {len(log)} logged steps")
        return {
            'success': True,
            'pipeline': pipeline,
            'generated_at': datetime.now(timezone.utc).isoformat(),
            **result,
        }

    def _certificate(self, certificate: Certificate) -> Dict[str, Any]:
        return {'passed': certificate.passed, 'certificate': dump_certificate(certificate)}

    def _run_at2(self, payload, log):
        data = load_at2_input(payload)
        ctx = data['context']
        alpha = GeneratorWord(ctx, tuple(data['alpha']))
        word = GeneratorWord(ctx, tuple(data['word']))
        return self._certificate(at2_pipeline(alpha, word, settings=self.settings, log=log))

    def _run_mt1(self, payload, log):
        data = load_stages(payload)
        ctx = data['context']
        stages = [Mt1Stage.build(ctx, alpha=GeneratorWord(ctx, tuple(s['alpha'])), rho=s['rho'],
                                 phi=GeneratorWord(ctx, tuple(s['phi'])), tau=s['tau'])
                  for s in data['stages']]
        return self._certificate(mt1_pipeline(stages, ctx=ctx, settings=self.settings, log=log))

    def _run_mt2(self, payload, log):
        data = load_stages(payload)
        ctx = data['context']
        stages: List[Mt2Stage] = []
        for i, s in enumerate(data['stages']):
            if len(s['phi']) != 1 or not isinstance(s['phi'][0], Elementary):
                raise InvalidGenerator(f"Stage {i} needs exactly one elementary Phi", stage=i)
            stages.append(Mt2Stage.build(ctx, s['phi'][0], alpha=GeneratorWord(ctx, tuple(s['alpha'])),
                                         rho=s['rho']))
        return self._certificate(mt2_pipeline(stages, ctx=ctx, settings=self.settings, log=log))

    def _run_n2(self, payload, log):
        result = n2_reduce(load_endo(payload), log=log)
        return {
            'passed': result.endo.is_over_r(),
            'endo': dump_endo(result.endo),
            'word': dump_word(result.word),
            'iterations': result.iterations,
            'steps': log.to_list(),
        }

    def verify(self, document: Dict[str, Any]) -> Dict[str, Any]:
        report = verify_certificate(load_certificate(document))
        return {'success': True, **report}

    def list_presets(self) -> List[Dict[str, Any]]:
        return [self.catalog.get(name).summary() for name in self.catalog.names()]

    def preset(self, name: str, **params) -> Dict[str, Any]:
        """Evaluate a preset and, when it can be certified, run its pipeline."""
        example = self.catalog.get(name, **params)
        result: Dict[str, Any] = {
            'success': True,
            'preset': example.summary(),
            'matches_expectation': example.matches(),
            'evaluation': dump_endo(example.evaluate()),
            'word': dump_word(example.word),
        }
        if example.certifiable:
            certificate = self.certify_example(example)
            result.update(self._certificate(certificate))
        return result

    def certify_example(self, example: NamedExample, log: Optional[StepLogger] = None) -> Certificate:
        if not example.certifiable:
            raise ValueError(f"Preset {example.identifier} is evaluation-only")
        log = log if log is not None else StepLogger(enabled=self.settings.enable_step_log)
        if example.pipeline == 'at2':
            return at2_pipeline(example.alpha, example.phi_word, settings=self.settings, log=log)
        stages = at2_stages(example.alpha, example.phi_word)
        return mt1_pipeline(stages, ctx=example.ctx, settings=self.settings, log=log,
                            pipeline=example.pipeline, input_word=example.input_word())
