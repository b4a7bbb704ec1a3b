"""Wire formats for contexts, generators, words, stages and certificates.

Polynomials travel as canonical grammar strings; loading a word needs its
ring context first, so the ``load_*`` helpers bind the context before the
nested generators are parsed.
"""
from fractions import Fraction
from typing import Any, Dict, Optional

from marshmallow import (
    EXCLUDE,
    Schema,
    ValidationError,
    fields,
    post_load,
    pre_dump,
    validate,
    validates_schema,
)

from errors import CoordinateError
from models.group import (
    Elementary,
    Endo,
    ExplicitEndo,
    GeneralizedPermutation,
    GeneratorWord,
    Linear,
)
from models.ring import RingContext, parse_poly
from models.weights import WeightVector

SCHEMA_VERSION = 1
GENERATOR_KINDS = ('elementary', 'linear', 'genperm', 'explicit')
PIPELINES = ('at2', 'mt1', 'mt2')


def _ctx(schema: Schema) -> RingContext:
    ctx = schema.context.get('ctx')
    if ctx is None:
        raise ValidationError("No ring context bound for loading")
    return ctx


def _parse(text: str, ctx: RingContext, field_name: str):
    try:
        return parse_poly(text, ctx)
    except CoordinateError as exc:
        raise ValidationError({field_name: [f"{exc.code}: {exc.message}"]}) from exc


class ContextSchema(Schema):
    class Meta:
        unknown = EXCLUDE

    m = fields.Integer(load_default=1, validate=validate.Range(min=0))
    n = fields.Integer(load_default=1, validate=validate.Range(min=1))
    p = fields.Integer(load_default=0, validate=validate.Range(min=0))
    y_names = fields.List(fields.String(), load_default=None, allow_none=True)
    z_names = fields.List(fields.String(), load_default=None, allow_none=True)
    u_names = fields.List(fields.String(), load_default=None, allow_none=True)

    @post_load
    def make_context(self, data, **kwargs):
        names = {key: tuple(data[key]) if data.get(key) is not None else None
                 for key in ('y_names', 'z_names', 'u_names')}
        try:
            return RingContext(m=data['m'], n=data['n'], p=data['p'], **names)
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc


class GeneratorSchema(Schema):
    """One generator, discriminated by ``kind``."""

    class Meta:
        unknown = EXCLUDE

    kind = fields.String(required=True, validate=validate.OneOf(GENERATOR_KINDS))
    var = fields.String()
    poly = fields.String()
    matrix = fields.List(fields.List(fields.String()))
    perm = fields.List(fields.Integer())
    scalars = fields.List(fields.String())
    shifts = fields.List(fields.Integer())
    images = fields.List(fields.String())
    inverse_images = fields.List(fields.String())
    tame = fields.Boolean()

    _required = {
        'elementary': ('var', 'poly'),
        'linear': ('matrix',),
        'genperm': ('perm', 'scalars', 'shifts'),
        'explicit': ('images', 'inverse_images'),
    }

    @pre_dump
    def flatten(self, generator, **kwargs):
        ctx = generator.ctx
        if isinstance(generator, Elementary):
            return {'kind': 'elementary', 'var': ctx.slot_name(generator.slot),
                    'poly': generator.poly.render()}
        if isinstance(generator, Linear):
            return {'kind': 'linear',
                    'matrix': [[entry.render() for entry in row] for row in generator.matrix]}
        if isinstance(generator, GeneralizedPermutation):
            return {'kind': 'genperm', 'perm': list(generator.perm),
                    'scalars': [str(s) for s in generator.scalars], 'shifts': list(generator.shifts)}
        if isinstance(generator, ExplicitEndo):
            return {'kind': 'explicit', 'images': [i.render() for i in generator.images],
                    'inverse_images': [i.render() for i in generator.inverse_images],
                    'tame': generator.tame}
        raise ValidationError(f"Cannot serialize {type(generator).__name__}")

    @validates_schema
    def check_fields(self, data, **kwargs):
        missing = [name for name in self._required.get(data.get('kind'), ()) if name not in data]
        if missing:
            raise ValidationError({name: ["Missing data for required field."] for name in missing})

    @post_load
    def make_generator(self, data, **kwargs):
        ctx = _ctx(self)
        kind = data['kind']
        try:
            if kind == 'elementary':
                slot = ctx.index_of(data['var']) - 1 - ctx.p
                if not 0 <= slot < ctx.slot_count:
                    raise ValidationError({'var': [f"'{data['var']}' is not a y- or z-variable"]})
                return Elementary(ctx, slot, _parse(data['poly'], ctx, 'poly'))
            if kind == 'linear':
                matrix = tuple(tuple(_parse(e, ctx, 'matrix') for e in row) for row in data['matrix'])
                return Linear(ctx, matrix)
            if kind == 'genperm':
                scalars = tuple(Fraction(s) for s in data['scalars'])
                return GeneralizedPermutation(ctx, tuple(data['perm']), scalars, tuple(data['shifts']))
            return ExplicitEndo(ctx, tuple(_parse(i, ctx, 'images') for i in data['images']),
                                tuple(_parse(i, ctx, 'inverse_images') for i in data['inverse_images']),
                                tame=data.get('tame', False))
        except (CoordinateError, ValueError, ZeroDivisionError) as exc:
            message = exc.message if isinstance(exc, CoordinateError) else str(exc)
            raise ValidationError({'generator': [message]}) from exc


class WordSchema(Schema):
    class Meta:
        unknown = EXCLUDE

    version = fields.Integer(load_default=SCHEMA_VERSION, validate=validate.Equal(SCHEMA_VERSION))
    context = fields.Nested(ContextSchema, required=True)
    generators = fields.List(fields.Nested(GeneratorSchema), load_default=list)

    @pre_dump
    def flatten(self, word, **kwargs):
        return {'version': SCHEMA_VERSION, 'context': word.ctx, 'generators': list(word.generators)}

    @post_load
    def make_word(self, data, **kwargs):
        return GeneratorWord(data['context'], tuple(data['generators']))


class EndoSchema(Schema):
    class Meta:
        unknown = EXCLUDE

    version = fields.Integer(load_default=SCHEMA_VERSION, validate=validate.Equal(SCHEMA_VERSION))
    context = fields.Nested(ContextSchema, required=True)
    images = fields.List(fields.String(), required=True)

    @pre_dump
    def flatten(self, endo, **kwargs):
        return {'version': SCHEMA_VERSION, 'context': endo.ctx, 'images': endo.render()}

    @post_load
    def make_endo(self, data, **kwargs):
        ctx = data['context']
        try:
            return Endo(ctx, tuple(_parse(i, ctx, 'images') for i in data['images']))
        except CoordinateError as exc:
            raise ValidationError({'images': [exc.message]}) from exc


class StageSchema(Schema):
    """alpha_i, rho_i, Phi_i and an optional tau_i."""

    class Meta:
        unknown = EXCLUDE

    alpha = fields.List(fields.Nested(GeneratorSchema), load_default=list)
    rho = fields.Nested(GeneratorSchema, load_default=None, allow_none=True)
    phi = fields.List(fields.Nested(GeneratorSchema), load_default=list)
    tau = fields.List(fields.Integer(), load_default=None, allow_none=True)

    @pre_dump
    def flatten(self, stage, **kwargs):
        return {
            'alpha': list(stage.alpha.generators),
            'rho': None if stage.rho.is_identity() else stage.rho,
            'phi': list(stage.phi.generators) if isinstance(stage.phi, GeneratorWord) else [stage.phi],
            'tau': stage.tau.to_list() if stage.tau is not None else None,
        }

    @validates_schema
    def check_rho(self, data, **kwargs):
        rho = data.get('rho')
        if rho is not None and not isinstance(rho, GeneralizedPermutation):
            raise ValidationError({'rho': ["rho must be a generalized permutation"]})


class StageListSchema(Schema):
    class Meta:
        unknown = EXCLUDE

    version = fields.Integer(load_default=SCHEMA_VERSION, validate=validate.Equal(SCHEMA_VERSION))
    context = fields.Nested(ContextSchema, required=True)
    stages = fields.List(fields.Nested(StageSchema), required=True)


class At2InputSchema(Schema):
    class Meta:
        unknown = EXCLUDE

    version = fields.Integer(load_default=SCHEMA_VERSION, validate=validate.Equal(SCHEMA_VERSION))
    context = fields.Nested(ContextSchema, required=True)
    alpha = fields.List(fields.Nested(GeneratorSchema), load_default=list)
    word = fields.List(fields.Nested(GeneratorSchema), required=True)


class CertificateSchema(Schema):
    """Self-contained certificate; ``verify`` needs nothing beyond this document."""

    class Meta:
        unknown = EXCLUDE

    version = fields.Integer(required=True, validate=validate.Equal(SCHEMA_VERSION))
    pipeline = fields.String(required=True, validate=validate.OneOf(PIPELINES))
    context = fields.Nested(ContextSchema, required=True)
    input_word = fields.List(fields.Nested(GeneratorSchema), required=True)
    tau_sequence = fields.List(fields.List(fields.Integer()), load_default=list)
    theta_word = fields.List(fields.Nested(GeneratorSchema), required=True)
    theta = fields.List(fields.String(), required=True)
    composite = fields.List(fields.String(), required=True)
    conjugate = fields.List(fields.String(), load_default=None, allow_none=True)
    checks = fields.Dict(keys=fields.String(), values=fields.Boolean(), load_default=dict)
    tame_flag = fields.Boolean(load_default=False)
    passed = fields.Boolean(load_default=False)
    stages = fields.List(fields.Nested(StageSchema), load_default=list)
    steps = fields.List(fields.Dict(), load_default=list)
    rewrite_trace = fields.List(fields.Dict(), load_default=list)

    @pre_dump
    def flatten(self, certificate, **kwargs):
        return {
            'version': SCHEMA_VERSION,
            'pipeline': certificate.pipeline,
            'context': certificate.ctx,
            'input_word': list(certificate.input_word.generators),
            'tau_sequence': [tau.to_list() for tau in certificate.tau_sequence],
            'theta_word': list(certificate.theta_word.generators),
            'theta': certificate.theta.render(),
            'composite': certificate.composite.render(),
            'conjugate': certificate.conjugate.render() if certificate.conjugate is not None else None,
            'checks': dict(certificate.checks),
            'tame_flag': certificate.tame_flag,
            'passed': certificate.passed,
            'stages': list(certificate.stages),
            'steps': list(certificate.steps),
            'rewrite_trace': list(certificate.rewrite_trace),
        }

    @post_load
    def make_record(self, data, **kwargs):
        ctx = data['context']

        def endo(images, name):
            if images is None:
                return None
            try:
                return Endo(ctx, tuple(_parse(i, ctx, name) for i in images))
            except CoordinateError as exc:
                raise ValidationError({name: [exc.message]}) from exc

        data['input_word'] = GeneratorWord(ctx, tuple(data['input_word']))
        data['theta_word'] = GeneratorWord(ctx, tuple(data['theta_word']))
        data['theta'] = endo(data['theta'], 'theta')
        data['composite'] = endo(data['composite'], 'composite')
        data['conjugate'] = endo(data['conjugate'], 'conjugate')
        data['tau_sequence'] = [WeightVector(tuple(t)) for t in data['tau_sequence']]
        return data


def _bind(data: Any) -> RingContext:
    if not isinstance(data, dict):
        raise ValidationError("Expected a JSON object")
    if 'context' not in data:
        raise ValidationError({'context': ["Missing data for required field."]})
    return ContextSchema().load(data['context'])


def _load(schema_class, data: Dict[str, Any], ctx: Optional[RingContext] = None):
    ctx = ctx or _bind(data)
    return schema_class(context={'ctx': ctx}).load(data)


def load_word(data: Dict[str, Any]) -> GeneratorWord:
    return _load(WordSchema, data)


def load_endo(data: Dict[str, Any]) -> Endo:
    return _load(EndoSchema, data)


def load_stages(data: Dict[str, Any]) -> Dict[str, Any]:
    return _load(StageListSchema, data)


def load_at2_input(data: Dict[str, Any]) -> Dict[str, Any]:
    return _load(At2InputSchema, data)


def load_certificate(data: Dict[str, Any]) -> Dict[str, Any]:
    return _load(CertificateSchema, data)


def dump_word(word: GeneratorWord) -> Dict[str, Any]:
    return WordSchema().dump(word)


def dump_endo(endo: Endo) -> Dict[str, Any]:
    return EndoSchema().dump(endo)


def dump_certificate(certificate) -> Dict[str, Any]:
    return CertificateSchema().dump(certificate)
