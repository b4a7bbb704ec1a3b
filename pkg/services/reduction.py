"""Reductions behind the first certification path.

Every function here takes exact inputs, rewrites them with the constructive
recipes of the reduction lemmas, re-verifies the result and either returns
it or raises.  A failure of something the lemmas guarantee is raised as a
``FalsificationAlarm`` carrying a replayable dump.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from audit.step_log import StepLogger
from config.production import ReductionSettings
from errors import (
    AlphaNotInIASigma0,
    ConjugateEscapesIATau,
    ElementaryNotInEASigma,
    HypothesisViolation,
    IncomparableWeights,
    JacobianNotUnit,
    MembershipViolation,
    NotInIATau,
    PreconditionFailed,
    ShapeMismatch,
    SplitFailure,
    WitnessNotInATau,
)
from models.group import (
    Elementary,
    Endo,
    GeneralizedPermutation,
    Generator,
    GeneratorWord,
    canonical_ia_form,
    compose,
    coordinate_checks,
    endo_equal,
    fixes_y,
    is_ia_tau,
    preserves_a_tau,
    validate_elementary_tau,
)
from models.ring import Poly, RingContext
from models.weights import (
    Order,
    WeightVector,
    a_tau_member,
    as_weight,
    sigma_box,
    sigma_sequence,
)

logger = logging.getLogger(__name__)

CHECK_NAMES = ('over_r', 'id_mod_x', 'inverse_over_r', 'roundtrip', 'y_match', 'jacobian_unit')


def _render(value: Any) -> Any:
    if isinstance(value, Endo):
        return value.render()
    if isinstance(value, (Poly, GeneratorWord, Generator)):
        return str(value)
    if isinstance(value, WeightVector):
        return value.to_list()
    if isinstance(value, (list, tuple)):
        return [_render(item) for item in value]
    return value


def make_dump(**items: Any) -> Dict[str, Any]:
    """Render inputs of a failing step as grammar strings."""
    return {key: _render(value) for key, value in items.items()}


def as_word(obj: Union[GeneratorWord, Generator, None], ctx: RingContext) -> GeneratorWord:
    if obj is None:
        return GeneratorWord(ctx)
    if isinstance(obj, GeneratorWord):
        return obj
    if isinstance(obj, Generator):
        return GeneratorWord.of(ctx, obj)
    if isinstance(obj, (list, tuple)):
        return GeneratorWord(ctx, tuple(obj))
    raise TypeError(f"Expected a generator word, got {type(obj).__name__}")


def join_words(*words: GeneratorWord) -> GeneratorWord:
    """Concatenate words, reusing their cached evaluations."""
    ctx = words[0].ctx
    generators: List[Generator] = []
    endo = Endo.identity(ctx)
    for word in words:
        if not len(word):
            continue
        generators.extend(word.generators)
        endo = endo.then(word.endo)
    return GeneratorWord.with_endo(ctx, generators, endo)


def _require_ia(endo: Endo, tau: WeightVector, what: str = 'alpha'):
    try:
        return canonical_ia_form(endo, tau)
    except (ShapeMismatch, WitnessNotInATau) as exc:
        raise NotInIATau(f"{what} is not in IA^{tau}: {exc.message}",
                         tau=tau.to_list(), endo=endo.render()) from exc


def is_ia(endo: Endo) -> bool:
    """IA(R): over R and the identity mod x."""
    return is_ia_tau(endo, WeightVector.zero(endo.ctx.n))


# Taylor gaps

def taylor_gap(alpha: Endo, poly: Poly, tau) -> Poly:
    """(alpha(P) - P) / x for alpha in IA^tau and P in A_tau; the result lies in A_tau."""
    tau = as_weight(tau)
    _require_ia(alpha, tau)
    if not a_tau_member(poly, tau):
        raise PreconditionFailed('poly_in_a_tau', f"{poly.render()} is not in A_{tau}")
    gap = (alpha.apply(poly) - poly).times_x(-1)
    if not gap.is_over_r() or not a_tau_member(gap, tau):
        raise MembershipViolation(f"alpha(P) - P is not in x*A_{tau}",
                                  dump=make_dump(alpha=alpha, poly=poly, tau=tau, gap=gap))
    return gap


def algebra_generators(ctx: RingContext, tau) -> List[Poly]:
    """y_1..y_m and x^t_k z_k, which generate A_tau over R."""
    tau = as_weight(tau)
    gens = [Poly.var(ctx, index) for index in ctx.y_indices]
    gens.extend(Poly.var(ctx, ctx.z_index(k)).times_x(tau[k]) for k in range(ctx.n))
    return gens


def taylor_series_check(alpha: Endo, tau) -> Dict[str, Poly]:
    """Taylor gaps on every algebra generator of A_tau, keyed by generator."""
    return {gen.render(): taylor_gap(alpha, gen, tau) for gen in algebra_generators(alpha.ctx, tau)}


# Pushing alpha across phi

def alpha_push(alpha: Endo, phi: GeneratorWord, tau, log: Optional[StepLogger] = None) -> Endo:
    """alpha' = phi^-1 o alpha o phi, so that alpha o phi = phi o alpha'."""
    tau = as_weight(tau)
    ctx = alpha.ctx
    phi = as_word(phi, ctx)
    _require_ia(alpha, tau)
    if not fixes_y(phi.endo):
        raise PreconditionFailed('phi_fixes_y', "phi must fix the y-variables", phi=str(phi))
    if not preserves_a_tau(phi, tau):
        raise PreconditionFailed('phi_in_ga_tau', f"phi does not preserve A_{tau}", phi=str(phi))

    pushed = compose(phi.inverse(), alpha, phi)
    if not is_ia_tau(pushed, tau):
        raise ConjugateEscapesIATau(f"phi^-1 o alpha o phi left IA^{tau}",
                                    dump=make_dump(alpha=alpha, phi=phi, tau=tau))
    if not endo_equal(alpha.then(phi.endo), phi.endo.then(pushed)):
        raise MembershipViolation("alpha o phi != phi o alpha'",
                                  dump=make_dump(alpha=alpha, phi=phi, tau=tau))
    if log is not None:
        log.log_step('push', tau=tau.to_list(), generators=len(phi))
    return pushed


# The strongIA induction

def verify_sigma_box(endo: Endo, tau, settings: ReductionSettings, dump: Dict[str, Any]) -> int:
    """Check endo in IA^sigma for the sigma <= tau box; returns the number of sigma checked."""
    points = sigma_box(as_weight(tau), settings.sigma_box_exhaustive_limit,
                       settings.sigma_box_samples, settings.random_seed)
    for sigma in points:
        if not is_ia_tau(endo, sigma):
            raise MembershipViolation(f"Result is not in IA^{sigma}",
                                      dump={**dump, 'sigma': sigma.to_list()})
    return len(points)


def strong_ia_reduce(alpha: Endo, tau, target=None, settings: Optional[ReductionSettings] = None,
                     log: Optional[StepLogger] = None) -> Tuple[GeneratorWord, Endo]:
    """phi in EA^tau with phi o alpha in IA^sigma for every sigma <= tau.

    ``target`` stops the raise early: afterwards every z_k tail has the form
    x z_k G + x^(-t_k + target_k + 1) H with G, H in A_tau.
    """
    tau = as_weight(tau)
    settings = settings or ReductionSettings()
    ctx = alpha.ctx
    try:
        canonical_ia_form(alpha, tau)
    except (ShapeMismatch, WitnessNotInATau) as exc:
        raise PreconditionFailed('alpha_in_ia_tau', f"alpha is not in IA^{tau}: {exc.message}") from exc
    target = tau if target is None else as_weight(target)
    if not target <= tau or not target.natural:
        raise IncomparableWeights(f"Raise target {target} is not between 0 and {tau}")

    images = list(alpha.images)
    emitted: List[Elementary] = []
    for k in range(ctx.n):
        slot = ctx.z_slot(k)
        z_var = Poly.var(ctx, ctx.z_index(k))
        for s in range(target[k]):
            current = Endo(ctx, tuple(images))
            scale = tau[k] - s - 1
            tail = (images[slot] - z_var).times_x(scale)
            free, _ = tail.split_by_var(ctx.z_index(k))
            if free.is_zero():
                continue
            if not a_tau_member(free, tau):
                raise MembershipViolation(f"z_{k + 1}-free tail is not in A_{tau}",
                                          dump=make_dump(alpha=alpha, tau=tau, step=s, tail=tail))
            correction = free.times_x(-scale)
            images[slot] = images[slot] - current.apply(correction)
            emitted.append(Elementary.in_z(ctx, k, -correction))

    beta = Endo(ctx, tuple(images))
    phi = GeneratorWord(ctx, tuple(reversed(emitted)))
    dump = make_dump(alpha=alpha, tau=tau, phi=phi)
    if not endo_equal(phi.endo.then(alpha), beta):
        raise MembershipViolation("phi o alpha does not match the raised map", dump=dump)
    checked = 0
    if target == tau:
        checked = verify_sigma_box(beta, tau, settings, dump)
    if log is not None:
        log.log_step('strongIA', tau=tau.to_list(), target=target.to_list(),
                     elementaries=len(phi), sigma_checked=checked)
    return phi, beta


def _merge_same_slot(word: GeneratorWord) -> GeneratorWord:
    """Collapse a word of elementaries in one z-variable into a single elementary."""
    generators = [g for g in word.generators if not g.is_identity()]
    if len(generators) <= 1:
        return GeneratorWord(word.ctx, tuple(generators))
    total = generators[0].poly
    for generator in generators[1:]:
        total = total + generator.poly
    return GeneratorWord.of(word.ctx, Elementary(word.ctx, generators[0].slot, total))


def ia_reduce(alpha: Union[GeneratorWord, Generator], tau, sigma,
              settings: Optional[ReductionSettings] = None,
              log: Optional[StepLogger] = None) -> Tuple[GeneratorWord, GeneratorWord]:
    """alpha = beta o phi with beta in IA^sigma and phi in EA^tau.

    Raising alpha^-1 by tau - sigma gives psi with psi o alpha^-1 in IA^sigma,
    so beta = alpha o psi^-1 and phi = psi.
    """
    tau, sigma = as_weight(tau), as_weight(sigma)
    order = sigma.compare(tau)
    if order not in (Order.LESS, Order.EQUAL):
        raise IncomparableWeights(f"sigma {sigma} is not below tau {tau}",
                                  sigma=sigma.to_list(), tau=tau.to_list())
    ctx = alpha.ctx
    alpha = as_word(alpha, ctx)
    _require_ia(alpha.endo, tau)
    if order is Order.EQUAL:
        return alpha, GeneratorWord(ctx)

    psi, _ = strong_ia_reduce(alpha.inverse().endo, tau, target=tau - sigma, settings=settings)
    if sigma.rank_one_gap(tau) is not None:
        psi = _merge_same_slot(psi)
    beta = join_words(alpha, psi.inverse())
    if not is_ia_tau(beta.endo, sigma):
        raise MembershipViolation(f"IA-reduction left IA^{sigma}",
                                  dump=make_dump(alpha=alpha, tau=tau, sigma=sigma, phi=psi))
    for generator in psi:
        if not validate_elementary_tau(generator, tau):
            raise MembershipViolation("IA-reduction produced an elementary outside EA^tau",
                                      dump=make_dump(alpha=alpha, tau=tau, generator=generator))
    if log is not None:
        log.log_step('ia-reduce', tau=tau.to_list(), sigma=sigma.to_list(), elementaries=len(psi))
    return beta, psi


# The crucial reduction

@dataclass(frozen=True)
class CrucialResult:
    phi_tilde: GeneratorWord
    theta: GeneratorWord
    conjugate: Endo


def crucial_reduce(alpha: Union[GeneratorWord, Generator], phi: Union[GeneratorWord, Generator], tau,
                   settings: Optional[ReductionSettings] = None,
                   log: Optional[StepLogger] = None, stage: Optional[int] = None) -> CrucialResult:
    """phi~ o alpha o phi in IA^sigma for every sigma <= tau, with phi~ = psi o phi^-1."""
    tau = as_weight(tau)
    ctx = alpha.ctx
    alpha, phi = as_word(alpha, ctx), as_word(phi, ctx)
    conjugate = alpha_push(alpha.endo, phi, tau, log=log)
    psi, beta = strong_ia_reduce(conjugate, tau, settings=settings, log=log)
    phi_tilde = psi + phi.inverse()
    theta = GeneratorWord.with_endo(ctx, phi_tilde.generators + alpha.generators + phi.generators, beta)
    if log is not None:
        log.log_step('crucial', stage=stage, tau=tau.to_list(), phi_tilde=len(phi_tilde),
                     tame=theta.is_tame())
    return CrucialResult(phi_tilde=phi_tilde, theta=theta, conjugate=conjugate)


# Pipelines

@dataclass(frozen=True)
class Mt1Stage:
    """alpha_i o rho_i o Phi_i together with the weight tau_i it is certified against."""

    alpha: GeneratorWord
    rho: GeneralizedPermutation
    phi: GeneratorWord
    tau: WeightVector

    @classmethod
    def build(cls, ctx: RingContext, alpha=None, rho=None, phi=None, tau=None) -> 'Mt1Stage':
        return cls(
            alpha=as_word(alpha, ctx),
            rho=rho or GeneralizedPermutation.identity(ctx),
            phi=as_word(phi, ctx),
            tau=WeightVector.zero(ctx.n) if tau is None else as_weight(tau),
        )

    @property
    def ctx(self) -> RingContext:
        return self.alpha.ctx

    @property
    def rho_tau(self) -> WeightVector:
        return self.rho.apply_tau(self.tau)

    def rho_word(self) -> GeneratorWord:
        if self.rho.is_identity():
            return GeneratorWord(self.ctx)
        return GeneratorWord.of(self.ctx, self.rho)

    def rho_inverse_word(self) -> GeneratorWord:
        if self.rho.is_identity():
            return GeneratorWord(self.ctx)
        return GeneratorWord.of(self.ctx, self.rho.inverse())

    def word(self) -> GeneratorWord:
        return join_words(self.alpha, self.rho_word(), self.phi)


@dataclass
class Certificate:
    ctx: RingContext
    pipeline: str
    input_word: GeneratorWord
    tau_sequence: Tuple[WeightVector, ...]
    theta_word: GeneratorWord
    composite: Endo
    checks: Dict[str, bool]
    conjugate: Optional[Endo] = None
    stages: Tuple[Mt1Stage, ...] = ()
    steps: List[Dict[str, Any]] = field(default_factory=list)
    rewrite_trace: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def theta(self) -> Endo:
        return self.theta_word.endo

    @property
    def theta_inverse_word(self) -> GeneratorWord:
        return self.theta_word.inverse()

    @property
    def tame_flag(self) -> bool:
        return bool(self.checks.get('tame_flag'))

    @property
    def passed(self) -> bool:
        return all(self.checks.get(name) for name in CHECK_NAMES)


def run_checks(theta_word: GeneratorWord, composite: Endo) -> Dict[str, bool]:
    checks = coordinate_checks(theta_word, composite)
    checks['tame_flag'] = theta_word.is_tame()
    return checks


def check_mt1_hypotheses(stages: Sequence[Mt1Stage]):
    """rho_i(tau_i) >= tau_{i+1}, alpha_i in IA^tau_i and Phi_i in GA_n^{rho_i(tau_i)}."""
    for i, stage in enumerate(stages):
        if not stage.tau.natural:
            raise HypothesisViolation(i, f"tau_{i} = {stage.tau} is not natural")
        rho_tau = stage.rho_tau
        if not rho_tau.natural:
            raise HypothesisViolation(i, f"rho_{i}(tau_{i}) = {rho_tau} is not natural")
        next_tau = stages[i + 1].tau if i + 1 < len(stages) else WeightVector.zero(stage.ctx.n)
        if not rho_tau >= next_tau:
            raise HypothesisViolation(i, f"rho_{i}(tau_{i}) = {rho_tau} >= tau_{i + 1} = {next_tau}")
        if not is_ia_tau(stage.alpha.endo, stage.tau):
            raise HypothesisViolation(i, f"alpha_{i} in IA^{stage.tau}")
        if not fixes_y(stage.phi.endo) or not preserves_a_tau(stage.phi, rho_tau):
            raise HypothesisViolation(i, f"Phi_{i} in GA_n^{rho_tau}")


def mt1_pipeline(stages: Sequence[Mt1Stage], ctx: Optional[RingContext] = None,
                 settings: Optional[ReductionSettings] = None, log: Optional[StepLogger] = None,
                 pipeline: str = 'mt1', input_word: Optional[GeneratorWord] = None) -> Certificate:
    """theta_i = phi~ o (rho_i^-1 o theta_{i-1} o alpha_i o rho_i) o Phi_i, certified at the end."""
    stages = list(stages)
    if ctx is None:
        if not stages:
            raise PreconditionFailed('context', "An empty stage list needs an explicit ring context")
        ctx = stages[0].ctx
    settings = settings or ReductionSettings()
    log = log if log is not None else StepLogger(enabled=settings.enable_step_log)
    check_mt1_hypotheses(stages)

    if input_word is None:
        input_word = join_words(GeneratorWord(ctx), *(stage.word() for stage in stages))
    composite = input_word.endo
    theta = GeneratorWord(ctx)
    conjugate = None
    for i, stage in enumerate(stages):
        rho_tau = stage.rho_tau
        next_tau = stages[i + 1].tau if i + 1 < len(stages) else WeightVector.zero(ctx.n)
        inner = join_words(stage.rho_inverse_word(), theta, stage.alpha, stage.rho_word())
        if not is_ia_tau(inner.endo, rho_tau):
            raise MembershipViolation(f"Stage {i}: conjugated product left IA^{rho_tau}",
                                      dump=make_dump(stage=i, inner=inner, tau=rho_tau))
        result = crucial_reduce(inner, stage.phi, rho_tau, settings=settings, log=log, stage=i)
        theta, conjugate = result.theta, result.conjugate
        if not is_ia_tau(theta.endo, next_tau):
            raise MembershipViolation(f"Stage {i}: theta is not in IA^{next_tau}",
                                      dump=make_dump(stage=i, theta=theta.endo, tau=next_tau))
        log.log_step('mt1-iterate', stage=i, tau=stage.tau.to_list(), rho_tau=rho_tau.to_list(),
                     theta_generators=len(theta))

    checks = run_checks(theta, composite)
    failed = [name for name in CHECK_NAMES if not checks[name]]
    for name in CHECK_NAMES:
        log.log_check(None, name, checks[name])
    if failed:
        alarm = MembershipViolation(f"Certificate checks failed: {', '.join(failed)}",
                                    dump=make_dump(theta=theta.endo, composite=composite,
                                                   failed=failed))
        log.log_alarm(alarm)
        raise alarm
    logger.info(f"Certified {pipeline} run over {len(stages)} stages")
    return Certificate(
        ctx=ctx,
        pipeline=pipeline,
        input_word=input_word,
        tau_sequence=tuple(stage.tau for stage in stages),
        theta_word=theta,
        composite=composite,
        checks=checks,
        conjugate=conjugate,
        stages=tuple(stages),
        steps=log.to_list(),
    )


def at2_stages(alpha: Union[GeneratorWord, Generator], word: GeneratorWord) -> List[Mt1Stage]:
    """Stages (alpha, id, Phi_0, sigma_0), (id, id, Phi_i, sigma_i) read off the sigma-sequence."""
    ctx = word.ctx
    alpha = as_word(alpha, ctx)
    sigmas = sigma_sequence(word.generators, ctx).sigmas
    sigma0 = sigmas[0] if sigmas else WeightVector.zero(ctx.n)
    if not is_ia_tau(alpha.endo, sigma0):
        raise AlphaNotInIASigma0(f"alpha is not in IA^{sigma0}", sigma=sigma0.to_list())
    for i, generator in enumerate(word):
        if not validate_elementary_tau(generator, sigmas[i]):
            raise ElementaryNotInEASigma(f"Phi_{i} is not in EA^{sigmas[i]}",
                                         generator=str(generator), sigma=sigmas[i].to_list())
    if not len(word):
        return [Mt1Stage.build(ctx, alpha=alpha)]
    return [Mt1Stage.build(ctx, alpha=alpha if i == 0 else None, phi=generator, tau=sigmas[i])
            for i, generator in enumerate(word)]


def at2_pipeline(alpha: Union[GeneratorWord, Generator], word: GeneratorWord,
                 settings: Optional[ReductionSettings] = None,
                 log: Optional[StepLogger] = None) -> Certificate:
    ctx = word.ctx
    stages = at2_stages(alpha, word)
    input_word = join_words(as_word(alpha, ctx), word)
    return mt1_pipeline(stages, ctx=ctx, settings=settings, log=log, pipeline='at2',
                        input_word=input_word)


# Two-variable reduction

@dataclass(frozen=True)
class N2Result:
    endo: Endo
    word: GeneratorWord

    @property
    def iterations(self) -> int:
        return len(self.word)


def n2_reduce(phi: Endo, log: Optional[StepLogger] = None) -> N2Result:
    """Pre-compose (y, z + x^-t P) with (y, z - x^-t P_0(y)) until the z-component is over R."""
    ctx = phi.ctx
    if ctx.m != 1 or ctx.n != 1:
        raise PreconditionFailed('two_variables', "n2_reduce works in k[x][y, z] only (m = n = 1)")
    y_var = Poly.var(ctx, ctx.y_index(0))
    z_index = ctx.z_index(0)
    if (phi.images[0] - y_var).x_order() < 1:
        raise PreconditionFailed('y_component', "The y-component must have the form y + xQ",
                                 image=phi.images[0].render())
    if phi.jacobian().unit_value is None:
        raise JacobianNotUnit("Jacobian determinant is not a nonzero rational",
                              determinant=phi.jacobian().determinant.render())

    z_var = Poly.var(ctx, z_index)
    current = phi
    emitted: List[Elementary] = []
    previous = -math.inf
    while True:
        order = (current.z_image(0) - z_var).x_order()
        if order >= 0:
            break
        if order <= previous:
            raise SplitFailure("The pole order of the z-component did not drop",
                               image=current.z_image(0).render())
        previous = order
        t = -order
        head = (current.z_image(0) - z_var).times_x(t).x_free_part()
        if head.uses(z_index):
            raise SplitFailure("Leading part of the z-component involves z",
                               leading=head.render(), t=t)
        elementary = Elementary.in_z(ctx, 0, -head.times_x(-t))
        current = elementary.endo().then(current)
        emitted.append(elementary)
        if log is not None:
            log.log_step('n2', t=t, leading=head.render())
    if not current.is_over_r():
        raise MembershipViolation("n2 reduction did not land over R",
                                  dump=make_dump(phi=phi, result=current))
    return N2Result(endo=current, word=GeneratorWord(ctx, tuple(reversed(emitted))))
