"""Rewrite toolkit and driver for words in two z-variables.

The driver turns an arbitrary word alpha_0 o rho_0 o Phi_0 o ... of
elementaries over S into stages satisfying rho_i(tau_i) >= tau_{i+1}, then
hands them to the first pipeline.  Each rewrite re-checks that the
evaluated word is unchanged.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from audit.step_log import StepLogger
from config.production import ReductionSettings
from errors import (
    CoordinateError,
    GapNotRankOne,
    HypothesisViolation,
    InternalContradiction,
    InvalidGenerator,
    MembershipViolation,
    NonTermination,
    PatternMismatch,
    PreconditionFailed,
    YImageNotIntegral,
)
from models.group import (
    Elementary,
    Endo,
    GeneralizedPermutation,
    Generator,
    GeneratorWord,
    compose,
    endo_equal,
    fixes_y,
    is_ia_tau,
    validate_elementary_tau,
)
from models.ring import X, Poly, RingContext
from models.weights import Order, WeightVector, as_weight, minimal_tau
from services.reduction import (
    Certificate,
    Mt1Stage,
    _require_ia,
    alpha_push,
    as_word,
    ia_reduce,
    join_words,
    make_dump,
    mt1_pipeline,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Mt2Stage:
    """alpha_i o rho_i o Phi_i with its minimal weight tau_i and suffix omega_i once annotated."""

    alpha: GeneratorWord
    rho: GeneralizedPermutation
    phi: Elementary
    tau: Optional[WeightVector] = None
    omega: Optional[Endo] = field(default=None, compare=False, repr=False)

    @classmethod
    def build(cls, ctx: RingContext, phi: Elementary, alpha=None, rho=None) -> 'Mt2Stage':
        if not isinstance(phi, Elementary) or not phi.is_z:
            raise InvalidGenerator("Each stage needs one elementary in a z-variable", phi=str(phi))
        return cls(alpha=as_word(alpha, ctx), rho=rho or GeneralizedPermutation.identity(ctx), phi=phi)

    @property
    def ctx(self) -> RingContext:
        return self.phi.ctx

    @property
    def rho_tau(self) -> WeightVector:
        return self.rho.apply_tau(self.tau)

    def rho_word(self) -> GeneratorWord:
        if self.rho.is_identity():
            return GeneratorWord(self.ctx)
        return GeneratorWord.of(self.ctx, self.rho)

    def word(self) -> GeneratorWord:
        return join_words(self.alpha, self.rho_word(), GeneratorWord.of(self.ctx, self.phi))


def annotate(stages: Sequence[Mt2Stage]) -> List[Mt2Stage]:
    """Fill in omega_i and the minimal tau_i; alpha_i must lie in IA^tau_i."""
    if not stages:
        return []
    ctx = stages[0].ctx
    omega = Endo.identity(ctx)
    annotated = []
    for stage in reversed(stages):
        omega = stage.word().endo.then(omega)
        annotated.append(replace(stage, tau=minimal_tau(omega), omega=omega))
    annotated.reverse()
    for i, stage in enumerate(annotated):
        if not is_ia_tau(stage.alpha.endo, stage.tau):
            raise HypothesisViolation(i, f"alpha_{i} in IA^{stage.tau}")
    return annotated


def _suffix(stages: Sequence[Mt2Stage], i: int) -> Endo:
    if i < len(stages):
        return stages[i].omega
    return Endo.identity(stages[0].ctx)


def _next_tau(stages: Sequence[Mt2Stage], i: int) -> WeightVector:
    if i + 1 < len(stages):
        return stages[i + 1].tau
    return WeightVector.zero(stages[0].ctx.n)


def _order_at(stages: Sequence[Mt2Stage], i: int) -> Order:
    order = stages[i].rho_tau.compare(_next_tau(stages, i))
    if order is Order.INCOMPARABLE:
        raise InternalContradiction(
            f"rho_{i}(tau_{i}) and tau_{i + 1} are incomparable",
            dump=make_dump(stage=i, rho_tau=stages[i].rho_tau, next_tau=_next_tau(stages, i)))
    return order


def _z_generator_image(endo: Endo, tau: WeightVector, k: int) -> Poly:
    """endo(x^t_k z_k)."""
    return endo.z_image(k).times_x(tau[k])


def _elementary_of(endo: Endo) -> Optional[Elementary]:
    """The single elementary an endo equals, None for the identity."""
    ctx = endo.ctx
    identity = Endo.identity(ctx)
    moved = [slot for slot in range(ctx.slot_count) if endo.images[slot] != identity.images[slot]]
    if not moved:
        return None
    if len(moved) > 1:
        raise PatternMismatch("Result is not elementary", moved=[ctx.slot_name(s) for s in moved])
    slot = moved[0]
    poly = endo.images[slot] - identity.images[slot]
    try:
        return Elementary(ctx, slot, poly)
    except InvalidGenerator as exc:
        raise PatternMismatch(f"Result is not elementary: {exc.message}") from exc


# Permutation conjugation

def ia_rho_conjugate(alpha: Union[GeneratorWord, Generator], rho: GeneralizedPermutation,
                     tau) -> GeneratorWord:
    """rho^-1 o alpha o rho, which lies in IA^{rho(tau)}."""
    tau = as_weight(tau)
    ctx = rho.ctx
    alpha = as_word(alpha, ctx)
    rho_tau = rho.apply_tau(tau).require_natural('rho(tau)')
    _require_ia(alpha.endo, tau)
    if rho.is_identity():
        return alpha
    result = join_words(GeneratorWord.of(ctx, rho.inverse()), alpha, GeneratorWord.of(ctx, rho))
    if not is_ia_tau(result.endo, rho_tau):
        raise MembershipViolation(f"rho^-1 o alpha o rho is not in IA^{rho_tau}",
                                  dump=make_dump(alpha=alpha, rho=rho, tau=tau))
    return result


def rho_push(phi: Union[GeneratorWord, Generator], rho: GeneralizedPermutation, tau) -> GeneratorWord:
    """phi' with phi o rho = rho o phi'; elementaries map to elementaries one for one."""
    tau = as_weight(tau)
    ctx = rho.ctx
    phi = as_word(phi, ctx)
    rho_tau = rho.apply_tau(tau).require_natural('rho(tau)')
    for generator in phi:
        if not isinstance(generator, Elementary) or not generator.is_z \
                or not validate_elementary_tau(generator, tau):
            raise PreconditionFailed('phi_in_ea_tau', f"{generator} is not an elementary of EA^{tau}")
    if rho.is_identity():
        return phi

    inverse = rho.inverse()
    pushed = []
    for generator in phi:
        moved = _elementary_of(compose(inverse, generator, rho))
        if moved is None:
            moved = Elementary.in_z(ctx, rho.perm[generator.z_position], Poly.zero(ctx))
        if not validate_elementary_tau(moved, rho_tau):
            raise MembershipViolation(f"Pushed elementary left EA^{rho_tau}",
                                      dump=make_dump(generator=generator, rho=rho, tau=tau))
        pushed.append(moved)
    result = GeneratorWord(ctx, tuple(pushed))
    if not endo_equal(compose(phi, rho), compose(rho, result)):
        raise MembershipViolation("phi o rho != rho o phi'",
                                  dump=make_dump(phi=phi, rho=rho, result=result))
    return result


# Single-lemma checks and factorizations

def _require_two(ctx: RingContext):
    if ctx.n != 2:
        raise PreconditionFailed('n_equals_two', f"Needs exactly two z-variables, got n={ctx.n}")


def phi_ea_tau_check(phi: Elementary, sigma, tau, omega: Endo) -> bool:
    """Phi in EA_2^tau, given omega(x^t_k z_k) in R minus xR and (Phi o omega)(A_sigma) in R."""
    sigma, tau = as_weight(sigma), as_weight(tau)
    ctx = phi.ctx
    _require_two(ctx)
    if not sigma <= tau:
        raise PreconditionFailed('sigma_le_tau', f"sigma {sigma} is not below tau {tau}")
    for k in range(ctx.n):
        image = _z_generator_image(omega, tau, k)
        if not image.is_over_r() or image.x_order() != 0:
            raise PreconditionFailed('omega_generators',
                                     f"omega(x^{tau[k]} {ctx.z_names[k]}) is not in R minus xR",
                                     image=image.render())
    product = phi.endo().then(omega)
    integral = all(image.is_over_r() for image in product.y_images()) and all(
        _z_generator_image(product, sigma, k).is_over_r() for k in range(ctx.n))
    if not integral:
        raise PreconditionFailed('phi_omega_integral', f"(Phi o omega)(A_{sigma}) is not inside R")
    return validate_elementary_tau(phi, tau)


@dataclass(frozen=True)
class AcFactor:
    rho: GeneralizedPermutation
    phi: Elementary


def acnonzero_factor(phi: Elementary, beta: Union[Generator, GeneratorWord, Endo], tau) -> AcFactor:
    """Phi o beta = rho o Phi' when the row of beta outside Phi's variable is a monomial."""
    tau = as_weight(tau)
    ctx = phi.ctx
    _require_two(ctx)
    if not phi.is_z:
        raise PreconditionFailed('phi_in_z', "acnonzero_factor needs an elementary in a z-variable")
    linear = compose(beta)
    if not fixes_y(linear):
        raise PreconditionFailed('beta_fixes_y', "beta must fix the y-variables")
    own = phi.z_position
    other = 1 - own
    row_other = linear.z_image(other)
    if len(row_other.terms) != 1:
        raise PatternMismatch("No entry of beta vanishes in the row outside Phi's variable",
                              row=row_other.render())
    used = next(j for j in range(ctx.n) if row_other.uses(ctx.z_index(j)))
    free = 1 - used
    part = linear.z_image(own).filter_terms(lambda exp: exp[ctx.z_index(free)] == 1)
    if len(part.terms) != 1:
        raise PatternMismatch("beta is singular on the remaining variable", row=part.render())
    images = [None, None]
    images[other], images[own] = row_other, part
    try:
        rho = GeneralizedPermutation.from_monomial_images(ctx, images)
    except InvalidGenerator as exc:
        raise PatternMismatch(f"beta does not factor through a permutation: {exc.message}") from exc

    product = compose(phi, linear)
    factor = _elementary_of(compose(rho.inverse(), product))
    if factor is None:
        factor = Elementary(ctx, phi.slot, Poly.zero(ctx))
    if not endo_equal(product, compose(rho, factor)):
        raise MembershipViolation("Phi o beta != rho o Phi'", dump=make_dump(phi=phi, beta=linear))
    if not validate_elementary_tau(factor, tau):
        raise MembershipViolation(f"Phi' is not in EA^{tau}",
                                  dump=make_dump(phi=phi, beta=linear, factor=factor, tau=tau))
    return AcFactor(rho=rho, phi=factor)


def bar_elementary(generator: Elementary, tau) -> Elementary:
    """The reduction mod x of an elementary of EA^tau, kept in the tau-conjugated frame."""
    tau = as_weight(tau)
    ctx = generator.ctx
    k = generator.z_position
    z_indices = list(ctx.z_indices)

    def on_level(exp) -> bool:
        weight = sum(tau[j] * exp[index] for j, index in enumerate(z_indices) if j != k)
        return exp[X] == weight - tau[k]

    return Elementary(ctx, generator.slot, generator.poly.filter_terms(on_level))


@dataclass(frozen=True)
class EabarFactor:
    alpha: GeneratorWord
    bars: Tuple[Elementary, ...]


def eabar_factor(ws: Sequence[Elementary], tau) -> EabarFactor:
    """Phi_1 o ... o Phi_q = alpha o bar(Phi_1) o ... o bar(Phi_q) with alpha in IA^tau."""
    tau = as_weight(tau)
    ws = list(ws)
    if not ws:
        raise PreconditionFailed('nonempty', "eabar_factor needs at least one elementary")
    ctx = ws[0].ctx
    for generator in ws:
        if not isinstance(generator, Elementary) or not generator.is_z \
                or not validate_elementary_tau(generator, tau):
            raise PreconditionFailed('elementaries_in_ea_tau', f"{generator} is not in EA^{tau}")

    bars = [bar_elementary(generator, tau) for generator in ws]
    prefix = GeneratorWord(ctx)
    parts = []
    for generator, bar in zip(ws, bars):
        gap = GeneratorWord.of(ctx, generator, bar.inverse())
        if not is_ia_tau(gap.endo, tau):
            raise MembershipViolation("Phi o bar(Phi)^-1 is not in IA^tau",
                                      dump=make_dump(generator=generator, tau=tau))
        pushed = alpha_push(gap.endo, prefix.inverse(), tau)
        parts.append(GeneratorWord.with_endo(
            ctx, prefix.generators + gap.generators + prefix.inverse().generators, pushed))
        prefix = prefix + GeneratorWord.of(ctx, bar)
    alpha = join_words(GeneratorWord(ctx), *parts)
    if not endo_equal(compose(*ws), alpha.endo.then(prefix.endo)):
        raise MembershipViolation("eabar factorization does not reproduce the product",
                                  dump=make_dump(ws=ws, tau=tau))
    if not is_ia_tau(alpha.endo, tau):
        raise MembershipViolation(f"eabar alpha is not in IA^{tau}", dump=make_dump(ws=ws, tau=tau))
    return EabarFactor(alpha=alpha, bars=tuple(bars))


@dataclass(frozen=True)
class SameVariable:
    """All elementaries act on one variable; ``merged`` is their product."""

    merged: Elementary
    degree_profile: Tuple[Tuple[Any, Any], ...] = ()


@dataclass(frozen=True)
class OnlyOnePhi:
    alpha: GeneratorWord
    rho: GeneralizedPermutation
    phi: Elementary
    degree_profile: Tuple[Tuple[Any, Any], ...] = ()


def merge_adjacent(ws: Sequence[Elementary]) -> List[Elementary]:
    """Multiply neighbouring elementaries in the same variable and drop identities, to a fixpoint."""
    current = [w for w in ws if not w.is_identity()]
    changed = True
    while changed:
        changed = False
        merged: List[Elementary] = []
        for generator in current:
            if merged and merged[-1].slot == generator.slot:
                combined = Elementary(generator.ctx, generator.slot, merged[-1].poly + generator.poly)
                merged.pop()
                changed = True
                if not combined.is_identity():
                    merged.append(combined)
            else:
                merged.append(generator)
        current = merged
    return current


def _degree(poly: Poly):
    degree = poly.mod_x().total_degree_yz()
    return None if degree == float('-inf') else int(degree)


def _linear_row(row: Poly, own: int, other: int, tau: WeightVector) -> Tuple[Poly, Poly]:
    """(a, b) with row = a z_own + b x^(t_other - t_own) z_other, a and b free of x and z."""
    ctx = row.ctx
    own_index, other_index = ctx.z_index(own), ctx.z_index(other)
    z_indices = tuple(ctx.z_indices)
    own_terms: Dict = {}
    other_terms: Dict = {}
    for exp, coeff in row.terms.items():
        degrees = [exp[i] for i in z_indices]
        if sum(degrees) != 1:
            raise InternalContradiction("Reduced product is not linear", dump={'row': row.render()})
        rest = list(exp)
        if exp[own_index]:
            rest[own_index] = 0
            if rest[X] != 0:
                raise InternalContradiction("Diagonal entry involves x", dump={'row': row.render()})
            own_terms[tuple(rest)] = coeff
        else:
            rest[other_index] = 0
            if rest[X] != tau[other] - tau[own]:
                raise InternalContradiction("Off-diagonal entry has the wrong x-power",
                                            dump={'row': row.render()})
            rest[X] = 0
            other_terms[tuple(rest)] = coeff
    return Poly(ctx, own_terms), Poly(ctx, other_terms)


def _unit(poly: Poly, what: str) -> Fraction:
    value = poly.constant_value()
    if not value:
        raise InternalContradiction(f"{what} is not a nonzero constant", dump={what: poly.render()})
    return value


def only_one_phi_factor(ws: Sequence[Elementary], tau, omega: Endo,
                        log: Optional[StepLogger] = None) -> Union[SameVariable, OnlyOnePhi]:
    """Collapse Phi_1 o ... o Phi_q into one elementary, or into alpha o rho o Phi with Phi linear."""
    tau = as_weight(tau)
    ws = list(ws)
    if not ws:
        raise PreconditionFailed('nonempty', "only_one_phi_factor needs at least one elementary")
    ctx = ws[0].ctx
    _require_two(ctx)
    for generator in ws:
        if not isinstance(generator, Elementary) or not generator.is_z \
                or not validate_elementary_tau(generator, tau):
            raise PreconditionFailed('elementaries_in_ea_tau', f"{generator} is not in EA^{tau}")
    own = ws[0].z_position
    other = 1 - own

    first, second = _z_generator_image(omega, tau, own), _z_generator_image(omega, tau, other)
    if not (first.is_over_r() and second.is_over_r()) or \
            (first.x_order() >= 1) == (second.x_order() >= 1):
        raise PreconditionFailed('assumption_1', "omega must send exactly one of x^t_k z_k into xR")

    suffix = omega
    suffixes = [None] * len(ws)
    for i in range(len(ws) - 1, -1, -1):
        suffix = ws[i].endo().then(suffix)
        suffixes[i] = suffix
    profile = []
    for i in range(1, len(ws)):
        f, g = (_z_generator_image(suffixes[i], tau, k) for k in range(2))
        if not (f.is_over_r() and g.is_over_r()) or f.x_order() != 0 or g.x_order() != 0:
            raise PreconditionFailed('assumption_2', f"omega_{i + 1}(x^t z) must lie in R minus xR",
                                     stage=i)
        profile.append((_degree(f), _degree(g)))
    if _z_generator_image(suffixes[0], tau, own).x_order() < 1:
        raise PreconditionFailed('assumption_3', "omega_1(x^t_k z_k) must lie in xR")
    profile = tuple(profile)
    if log is not None:
        log.log_step('degree-profile', tau=tau.to_list(), profile=[list(p) for p in profile])

    merged = merge_adjacent(ws)
    if len(merged) <= 1:
        result = merged[0] if merged else Elementary(ctx, ws[0].slot, Poly.zero(ctx))
        return SameVariable(merged=result, degree_profile=profile)

    eabar = eabar_factor(merged, tau)
    reduced = compose(*eabar.bars)
    own = merged[0].z_position
    other = 1 - own
    a, b = _linear_row(reduced.z_image(own), own, other, tau)
    d, c = _linear_row(reduced.z_image(other), other, own, tau)
    if a and b:
        raise InternalContradiction("Both entries of the first row survive",
                                    dump=make_dump(ws=ws, tau=tau, reduced=reduced))
    z_own = Poly.var(ctx, ctx.z_index(own))
    z_other = Poly.var(ctx, ctx.z_index(other))
    images = [None, None]
    if not b:
        a_value, d_value = _unit(a, 'a'), _unit(d, 'd')
        images[own] = z_own.scale(a_value)
        images[other] = z_other.scale(d_value)
        phi = Elementary.in_z(ctx, other, (c * z_own).times_x(tau[own] - tau[other]).scale(1 / d_value))
    else:
        b_value, c_value = _unit(b, 'b'), _unit(c, 'c')
        images[own] = z_other.times_x(tau[other] - tau[own]).scale(b_value)
        images[other] = z_own.times_x(tau[own] - tau[other]).scale(c_value)
        phi = Elementary.in_z(ctx, own, (d * z_other).times_x(tau[other] - tau[own]).scale(1 / c_value))
    rho = GeneralizedPermutation.from_monomial_images(ctx, images)

    if not endo_equal(compose(rho, phi), reduced):
        raise InternalContradiction("rho o Phi does not reproduce the reduced product",
                                    dump=make_dump(ws=ws, tau=tau, reduced=reduced))
    if not endo_equal(compose(*ws), compose(eabar.alpha, rho, phi)):
        raise MembershipViolation("alpha o rho o Phi does not reproduce the product",
                                  dump=make_dump(ws=ws, tau=tau))
    return OnlyOnePhi(alpha=eabar.alpha, rho=rho, phi=phi, degree_profile=profile)


# Consolidation

@dataclass(frozen=True)
class Consolidated:
    alpha: GeneratorWord
    rho: GeneralizedPermutation
    phis: Tuple[GeneratorWord, ...]

    def elementaries(self) -> List[Elementary]:
        return [generator for word in self.phis for generator in word]


def no_alpha_no_rho(stages: Sequence[Tuple[Any, GeneralizedPermutation, Any]], taus: Sequence,
                    settings: Optional[ReductionSettings] = None,
                    log: Optional[StepLogger] = None) -> Consolidated:
    """alpha_0 rho_0 phi_0 ... alpha_q rho_q phi_q = alpha' (rho_0 ... rho_q) phi'_0 ... phi'_{q-1} phi_q."""
    stages = list(stages)
    taus = [as_weight(tau) for tau in taus]
    if not stages:
        raise PreconditionFailed('nonempty', "no_alpha_no_rho needs at least one stage")
    if len(taus) != len(stages) + 1:
        raise PreconditionFailed('tau_count', "Pass one weight per stage plus the trailing weight")
    ctx = stages[0][1].ctx
    stages = [(as_word(alpha, ctx), rho, as_word(phi, ctx)) for alpha, rho, phi in stages]
    for i, (alpha, rho, phi) in enumerate(stages):
        if not is_ia_tau(alpha.endo, taus[i]):
            raise HypothesisViolation(i, f"alpha_{i} in IA^{taus[i]}")
        if not all(isinstance(g, Elementary) and g.is_z and validate_elementary_tau(g, taus[i + 1])
                   for g in phi):
            raise HypothesisViolation(i, f"phi_{i} in EA^{taus[i + 1]}")
        if not rho.apply_tau(taus[i]) <= taus[i + 1]:
            raise HypothesisViolation(i, f"rho_{i}(tau_{i}) = {rho.apply_tau(taus[i])} <= tau_{i + 1} = {taus[i + 1]}")

    last_alpha, last_rho, last_phi = stages[-1]
    alpha_acc, rho_acc = last_alpha, last_rho
    heads: List[GeneratorWord] = []
    for i in range(len(stages) - 2, -1, -1):
        alpha, rho, phi = stages[i]
        following = taus[i + 1]
        pushed = alpha_push(alpha_acc.endo, phi.inverse(), following, log=log)
        pushed_word = GeneratorWord.with_endo(
            ctx, phi.generators + alpha_acc.generators + phi.inverse().generators, pushed)
        conjugated = ia_rho_conjugate(pushed_word, rho.inverse(), following)
        pulled = rho.inverse().apply_tau(following)
        beta, tilde = ia_reduce(conjugated, pulled, taus[i], settings=settings, log=log)
        moved = rho_push(tilde, rho, pulled)
        heads.insert(0, rho_push(moved + phi, rho_acc, following))
        alpha_acc = join_words(alpha, beta)
        rho_acc = rho.then(rho_acc)

    result = Consolidated(alpha=alpha_acc, rho=rho_acc, phis=tuple(heads) + (last_phi,))
    original = join_words(*(join_words(a, GeneratorWord.of(ctx, r), p) for a, r, p in stages))
    rewritten = join_words(result.alpha, GeneratorWord.of(ctx, result.rho), *result.phis)
    if not endo_equal(original.endo, rewritten.endo):
        raise MembershipViolation("Consolidation changed the word",
                                  dump=make_dump(original=original, rewritten=rewritten))
    if log is not None:
        log.log_step('no-alpha-no-rho', stages=len(stages), elementaries=len(result.elementaries()))
    return result


@dataclass(frozen=True)
class MergeResult:
    alpha: GeneratorWord
    rho: GeneralizedPermutation
    phi: Optional[Elementary]


def alpharho_merge(alpha1, rho1: GeneralizedPermutation, alpha2, rho2: GeneralizedPermutation,
                   tau1, tau2, settings: Optional[ReductionSettings] = None,
                   log: Optional[StepLogger] = None) -> MergeResult:
    """alpha1 o rho1 o alpha2 o rho2 = alpha' o rho' o Phi with Phi elementary, for a rank-one gap."""
    tau1, tau2 = as_weight(tau1), as_weight(tau2)
    ctx = rho1.ctx
    alpha1, alpha2 = as_word(alpha1, ctx), as_word(alpha2, ctx)
    if rho1.apply_tau(tau1).rank_one_gap(tau2) is None:
        raise GapNotRankOne(f"tau2 - rho1(tau1) = {tau2 - rho1.apply_tau(tau1)} is not a multiple of one e_k",
                            tau1=tau1.to_list(), tau2=tau2.to_list())
    _require_ia(alpha1.endo, tau1)
    pulled = rho1.inverse().apply_tau(tau2).require_natural('rho1^-1(tau2)')

    conjugated = ia_rho_conjugate(alpha2, rho1.inverse(), tau2)
    beta, tilde = ia_reduce(conjugated, pulled, tau1, settings=settings, log=log)
    rho_prime = rho1.then(rho2)
    phi_word = merge_adjacent(list(rho_push(tilde, rho_prime, pulled)))
    if len(phi_word) > 1:
        raise InternalContradiction("Rank-one reduction produced more than one elementary",
                                    dump=make_dump(alpha2=alpha2, tau1=tau1, tau2=tau2))
    phi = phi_word[0] if phi_word else None
    alpha_prime = join_words(alpha1, beta)

    tail = GeneratorWord.of(ctx, phi) if phi is not None else GeneratorWord(ctx)
    if not endo_equal(compose(alpha1, rho1, alpha2, rho2), compose(alpha_prime, rho_prime, tail)):
        raise MembershipViolation("alpha-rho merge changed the word",
                                  dump=make_dump(alpha1=alpha1, alpha2=alpha2, tau1=tau1, tau2=tau2))
    if log is not None:
        log.log_step('alpharho-merge', tau1=tau1.to_list(), tau2=tau2.to_list(),
                     elementary=phi is not None)
    return MergeResult(alpha=alpha_prime, rho=rho_prime, phi=phi)


# The four minimality formulations

@dataclass
class TechnicalEntry:
    stage: int
    formulations: List[Optional[List[int]]]
    equivalent: bool
    delta: Optional[Tuple[int, int]] = None
    gap_consequence: Optional[bool] = None
    unit_consequence: Optional[bool] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'stage': self.stage,
            'formulations': self.formulations,
            'equivalent': self.equivalent,
            'delta': list(self.delta) if self.delta else None,
            'gap_consequence': self.gap_consequence,
            'unit_consequence': self.unit_consequence,
        }


@dataclass
class TechnicalReport:
    entries: List[TechnicalEntry]
    alarms: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.alarms

    def to_dict(self) -> Dict[str, Any]:
        return {'entries': [e.to_dict() for e in self.entries], 'alarms': list(self.alarms), 'ok': self.ok}


def _safe_minimal(endo: Endo) -> Optional[WeightVector]:
    try:
        return minimal_tau(endo)
    except YImageNotIntegral:
        return None


def technical_conditions(stages: Sequence[Mt2Stage]) -> TechnicalReport:
    """Compare the four ways of defining the minimal tau_i and check the two consequences."""
    stages = annotate(stages) if stages and stages[0].tau is None else list(stages)
    entries, alarms = [], []
    for i, stage in enumerate(stages):
        ctx = stage.ctx
        after = _suffix(stages, i + 1)
        conjugated = _elementary_of(compose(stage.rho, stage.phi, stage.rho.inverse()))
        conjugated_word = GeneratorWord.of(ctx, conjugated) if conjugated else GeneratorWord(ctx)
        through_phi = _safe_minimal(compose(stage.phi, after))
        pulled = None
        if through_phi is not None:
            raw = stage.rho.inverse().apply_tau(through_phi)
            pulled = WeightVector(tuple(max(0, v) for v in raw))
        candidates = [
            _safe_minimal(stage.omega),
            pulled,
            _safe_minimal(compose(stage.rho, stage.phi, after)),
            _safe_minimal(compose(conjugated_word, stage.rho, after)),
        ]
        listed = [c.to_list() if c is not None else None for c in candidates]
        equivalent = all(c == candidates[0] for c in candidates)
        entry = TechnicalEntry(stage=i, formulations=listed, equivalent=equivalent)
        if not equivalent:
            alarms.append(f"stage {i}: minimality formulations disagree: {listed}")
        else:
            j = stage.phi.z_position
            gap = stage.rho_tau - _next_tau(stages, i)
            entry.gap_consequence = all(v == 0 for k, v in enumerate(gap) if k != j)
            entry.delta = (j, gap[j])
            if not entry.gap_consequence:
                alarms.append(f"stage {i}: rho(tau) - tau_next = {gap} is not a multiple of e_{j + 1}")
            if conjugated is not None:
                moved = compose(stage.rho, after)
                entry.unit_consequence = all(
                    _z_generator_image(moved, stage.tau, k).is_over_r()
                    and _z_generator_image(moved, stage.tau, k).x_order() == 0
                    for k in range(ctx.n) if k != conjugated.z_position)
                if not entry.unit_consequence:
                    alarms.append(f"stage {i}: (rho o omega)(x^t z) left R minus xR off the moved variable")
        entries.append(entry)
    return TechnicalReport(entries=entries, alarms=alarms)


# Driver

def _state_key(stages: Sequence[Mt2Stage]) -> Tuple:
    return tuple((tuple(s.alpha.endo.render()), str(s.rho), str(s.phi)) for s in stages)


def _max_violator(stages: Sequence[Mt2Stage], start: int = 0, stop: Optional[int] = None) -> Optional[int]:
    stop = len(stages) if stop is None else stop
    for i in range(stop - 1, start - 1, -1):
        if _order_at(stages, i) is Order.LESS:
            return i
    return None


def _multiply(first: Elementary, second: Elementary) -> Elementary:
    return Elementary(first.ctx, first.slot, first.poly + second.poly)


def _rewrite_segment(stages: List[Mt2Stage], a: int, settings: ReductionSettings,
                     log: StepLogger, trace: List[Dict[str, Any]]) -> List[Mt2Stage]:
    ctx = stages[0].ctx
    q = len(stages) - 1
    if a >= q:
        raise HypothesisViolation(a, f"rho_{a}(tau_{a}) < tau_{a + 1} at the last stage")
    b = next((i for i in range(a + 1, q + 1) if _order_at(stages, i) is Order.GREATER), q)

    phi_ea_tau_check(stages[a].phi, stages[a].rho_tau, stages[a + 1].tau, stages[a + 1].omega)
    segment = stages[a:b + 1]
    lemma_taus = [s.tau for s in segment] + [stages[b].rho_tau]
    consolidated = no_alpha_no_rho(
        [(s.alpha, s.rho, GeneratorWord.of(ctx, s.phi)) for s in segment], lemma_taus,
        settings=settings, log=log)
    elementaries = consolidated.elementaries()
    kept = [e for e in elementaries if not e.is_identity()] or elementaries[-1:]
    flat = [Mt2Stage.build(ctx, kept[0], alpha=consolidated.alpha, rho=consolidated.rho)]
    flat += [Mt2Stage.build(ctx, e) for e in kept[1:]]
    rebuilt = annotate(stages[:a] + flat + stages[b + 1:])
    end = a + len(flat) - 1
    trace.append({'kind': 'consolidate', 'a': a, 'b': b, 'elementaries': len(flat)})

    start = _max_violator(rebuilt, a, end)
    if start is None:
        trace.append({'kind': 'rescan', 'a': None, 'note': 'no violation left inside the segment'})
        return rebuilt
    trace.append({'kind': 'rescan', 'a': start, 'previous_a': a})

    tau = rebuilt[start + 1].tau
    omega = _suffix(rebuilt, end + 1)
    ws = [s.phi for s in rebuilt[start:end + 1]]
    head = rebuilt[start]
    factor = only_one_phi_factor(ws, tau, omega, log=log)
    trace.append({'kind': 'degree-profile', 'a': start,
                  'profile': [list(p) for p in factor.degree_profile]})

    if isinstance(factor, SameVariable):
        trace.append({'kind': 'merge-same-variable', 'a': start})
        replacement = [Mt2Stage.build(ctx, factor.merged, alpha=head.alpha, rho=head.rho)]
    else:
        merged = alpharho_merge(head.alpha, head.rho, factor.alpha, factor.rho, head.tau, tau,
                                settings=settings, log=log)
        if merged.phi is None or merged.phi.is_identity():
            trace.append({'kind': 'merge-trivial', 'a': start})
            replacement = [Mt2Stage.build(ctx, factor.phi, alpha=merged.alpha, rho=merged.rho)]
        elif merged.phi.slot == factor.phi.slot:
            trace.append({'kind': 'merge-same-variable', 'a': start})
            replacement = [Mt2Stage.build(ctx, _multiply(merged.phi, factor.phi),
                                          alpha=merged.alpha, rho=merged.rho)]
        else:
            try:
                split = acnonzero_factor(merged.phi, factor.phi, tau)
            except PatternMismatch as exc:
                raise PatternMismatch(f"No acnonzero split at rewrite position {start}: {exc.message}",
                                      **{**exc.details, 'position': start}) from exc
            trace.append({'kind': 'acnonzero', 'a': start})
            replacement = [Mt2Stage.build(ctx, split.phi, alpha=merged.alpha,
                                          rho=merged.rho.then(split.rho))]
    return annotate(rebuilt[:start] + replacement + rebuilt[end + 1:])


def mt2_pipeline(stages: Sequence[Mt2Stage], ctx: Optional[RingContext] = None,
                 settings: Optional[ReductionSettings] = None,
                 log: Optional[StepLogger] = None) -> Certificate:
    """Rewrite until rho_i(tau_i) >= tau_{i+1} everywhere, then certify through the first pipeline."""
    stages = [Mt2Stage.build(s.ctx, s.phi, alpha=s.alpha, rho=s.rho) for s in stages]
    if ctx is None:
        if not stages:
            raise PreconditionFailed('context', "An empty stage list needs an explicit ring context")
        ctx = stages[0].ctx
    _require_two(ctx)
    settings = settings or ReductionSettings()
    log = log if log is not None else StepLogger(enabled=settings.enable_step_log)
    input_word = join_words(GeneratorWord(ctx), *(s.word() for s in stages))
    trace: List[Dict[str, Any]] = []

    current = annotate(stages)
    seen = set()
    for iteration in range(settings.mt2_max_iterations):
        a = _max_violator(current) if current else None
        if a is None:
            break
        key = _state_key(current)
        if key in seen:
            raise NonTermination("Rewriting revisited an earlier word", iteration=iteration, a=a)
        seen.add(key)
        before = len(current)
        trace.append({'kind': 'iterate', 'iteration': iteration, 'a': a, 'stages': before})
        log.log_step('mt2-iterate', stage=a, stages=before)
        try:
            current = _rewrite_segment(current, a, settings, log, trace)
        except CoordinateError as exc:
            exc.details.setdefault('position', a)
            raise
        if len(current) >= before:
            raise NonTermination(f"Iteration {iteration} did not shorten the word",
                                 iteration=iteration, a=a, before=before, after=len(current))
    else:
        raise NonTermination(f"No normal form after {settings.mt2_max_iterations} iterations",
                             stages=len(current))

    logger.info(f"mt2 rewriting left {len(current)} stages in normal form")
    mt1_stages = [Mt1Stage.build(ctx, alpha=s.alpha, rho=s.rho, phi=s.phi, tau=s.tau) for s in current]
    certificate = mt1_pipeline(mt1_stages, ctx=ctx, settings=settings, log=log, pipeline='mt2',
                               input_word=input_word)
    certificate.rewrite_trace = trace
    certificate.steps = log.to_list()
    return certificate
