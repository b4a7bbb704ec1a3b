"""Command-line entry point: ``coordcert <command>``.

Sources are JSON documents (a path, or ``-`` for stdin) or catalog preset
names.  Exit codes: 0 on success, 1 on a failed check or engine error,
2 on usage and validation errors.
"""
import functools
import json
import logging
import os
import sys
from fractions import Fraction
from typing import Any, Dict, Optional

import click
from marshmallow import ValidationError

from catalog.presets import NamedExample
from config.production import ReductionSettings, get_config
from errors import CoordinateError
from models.group import Endo, GeneratorWord
from models.ring import RingContext, parse_poly
from models.weights import minimal_tau, sigma_sequence
from serialization.schemas import dump_endo, dump_word, load_at2_input, load_endo, load_word
from services.certifier import CoordinateCertifier
from services.verification import REQUIRED_CHECKS

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(levelname)s: %(message)s [in %(pathname)s:%(lineno)d]'


class CheckFailed(click.ClickException):
    exit_code = 1


def handle_errors(command):
    """Map engine and validation errors onto the exit codes."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except ValidationError as exc:
            click.echo(f"error: invalid input: {json.dumps(exc.messages, default=str)}", err=True)
            sys.exit(2)
        except CoordinateError as exc:
            logger.debug(f"{exc.code} details: {exc.details}")
            click.echo(f"error: {exc.code}: {exc.message}", err=True)
            sys.exit(1)
        except (ValueError, OSError) as exc:
            raise click.UsageError(str(exc))

    return wrapper


class Options:
    def __init__(self, as_json: bool, m: int, n: int, p: int):
        self.as_json = as_json
        self.m, self.n, self.p = m, n, p
        self.certifier = CoordinateCertifier(ReductionSettings.from_config(get_config()))

    @property
    def ctx(self) -> RingContext:
        return RingContext(m=self.m, n=self.n, p=self.p)

    def emit(self, data: Dict[str, Any], human: str):
        if self.as_json:
            click.echo(json.dumps(data, indent=2, default=str))
        else:
            click.echo(human)


pass_options = click.make_pass_decorator(Options)


def _read_document(source: str) -> Dict[str, Any]:
    with click.open_file(source, 'r', encoding='utf-8') as handle:
        return json.load(handle)


def _is_preset(options: Options, source: str) -> bool:
    return source != '-' and not os.path.exists(source) and source in options.certifier.catalog.names()


def _preset(options: Options, source: str) -> NamedExample:
    return options.certifier.catalog.get(source)


def _load_source_word(options: Options, source: str, prefer_phi: bool = False) -> GeneratorWord:
    if _is_preset(options, source):
        example = _preset(options, source)
        if prefer_phi and example.phi_word is not None:
            return example.phi_word
        return example.input_word()
    document = _read_document(source)
    if 'generators' in document:
        return load_word(document)
    if 'word' in document:
        data = load_at2_input(document)
        generators = tuple(data['word']) if prefer_phi else tuple(data['alpha']) + tuple(data['word'])
        return GeneratorWord(data['context'], generators)
    raise ValueError(f"{source} is neither a word nor an at2 input document")


def _load_source_endo(options: Options, source: Optional[str], images) -> Endo:
    if images:
        ctx = options.ctx
        if len(images) != ctx.slot_count:
            raise ValueError(f"Expected {ctx.slot_count} --image values for m={ctx.m}, n={ctx.n}")
        return Endo(ctx, tuple(parse_poly(text, ctx) for text in images))
    if source is None:
        raise ValueError("Give a source or --image expressions")
    if not _is_preset(options, source):
        document = _read_document(source)
        if 'images' in document:
            return load_endo(document)
    return _load_source_word(options, source).endo


def _render_endo(endo: Endo) -> str:
    ctx = endo.ctx
    names = ctx.y_names + ctx.z_names
    return '\n'.join(f"  {name} -> {image}" for name, image in zip(names, endo.render()))


def _render_certificate(result: Dict[str, Any]) -> str:
    certificate = result['certificate']
    lines = [f"pipeline: {certificate['pipeline']}",
             f"tau sequence: {certificate['tau_sequence']}",
             "theta:"]
    names = certificate['context']['y_names'] + certificate['context']['z_names']
    lines.extend(f"  {name} -> {image}" for name, image in zip(names, certificate['theta']))
    lines.append("checks:")
    lines.extend(f"  {name}: {'ok' if certificate['checks'].get(name) else 'FAILED'}" for name in REQUIRED_CHECKS)
    lines.append(f"tame: {certificate['tame_flag']}")
    return '\n'.join(lines)


def _finish_certificate(options: Options, result: Dict[str, Any]):
    options.emit(result, _render_certificate(result))
    if not result['passed']:
        failed = [name for name in REQUIRED_CHECKS if not result['certificate']['checks'].get(name)]
        raise CheckFailed(f"certificate checks failed: {', '.join(failed)}")


@click.group()
@click.option('--json', 'as_json', is_flag=True, help='Emit machine-readable JSON.')
@click.option('--m', 'm', default=1, show_default=True, type=click.IntRange(min=0), help='Number of y variables.')
@click.option('--n', 'n', default=1, show_default=True, type=click.IntRange(min=1), help='Number of z variables.')
@click.option('--p', 'p', default=0, show_default=True, type=click.IntRange(min=0), help='Number of parameters u.')
@click.option('--verbose', is_flag=True, help='Log engine steps to stderr.')
@click.pass_context
def cli(ctx, as_json, m, n, p, verbose):
    """Certify strongly residual coordinates over A[x]."""
    if verbose:
        logging.basicConfig(level=logging.DEBUG, format=LOG_FORMAT, stream=sys.stderr, force=True)
    else:
        logging.basicConfig(level=logging.WARNING, format=LOG_FORMAT, stream=sys.stderr)
    ctx.obj = Options(as_json, m, n, p)


@cli.command()
@click.argument('sources', nargs=-1)
@pass_options
@handle_errors
def compose(options, sources):
    """Evaluate the composite of the given words, left to right."""
    word = None
    for source in sources:
        part = _load_source_word(options, source)
        word = part if word is None else word + part
    if word is None:
        word = GeneratorWord(options.ctx)
    endo = word.endo
    options.emit(dump_endo(endo), _render_endo(endo))


@cli.command()
@click.argument('source')
@pass_options
@handle_errors
def invert(options, source):
    """Invert a word generator by generator."""
    inverse = _load_source_word(options, source).inverse()
    options.emit({'word': dump_word(inverse), 'endo': dump_endo(inverse.endo)},
                 f"{inverse}\n{_render_endo(inverse.endo)}")


@cli.command()
@click.argument('source', required=False)
@click.option('--image', 'images', multiple=True, help='Image of the next y/z variable, in order.')
@pass_options
@handle_errors
def jacobian(options, source, images):
    """Jacobian matrix and determinant of a map."""
    report = _load_source_endo(options, source, images).jacobian()
    unit = report.unit_value
    data = {**report.to_dict(), 'unit': str(unit) if unit is not None else None}
    options.emit(data, f"det = {report.determinant}" + ('' if unit is not None else '  (not a unit)'))


@cli.command('sigma-seq')
@click.argument('source')
@pass_options
@handle_errors
def sigma_seq(options, source):
    """Sigma-sequence of a word of elementaries in the z-variables."""
    word = _load_source_word(options, source, prefer_phi=True)
    sequence = sigma_sequence(word.generators, word.ctx)
    human = ','.join('(' + ','.join(str(v) for v in sigma) + ')' for sigma in sequence.sigmas)
    options.emit({'sigmas': sequence.to_list(), 'monotone': sequence.monotone}, human)


@cli.command('minimal-tau')
@click.argument('source', required=False)
@click.option('--image', 'images', multiple=True, help='Image of the next y/z variable, in order.')
@pass_options
@handle_errors
def minimal_tau_command(options, source, images):
    """Least tau with phi(A_tau) inside R."""
    tau = minimal_tau(_load_source_endo(options, source, images))
    options.emit({'tau': tau.to_list()}, str(tau))


@cli.command()
@click.argument('source')
@pass_options
@handle_errors
def at2(options, source):
    """Certify alpha o Phi_0 o ... o Phi_q via its sigma-sequence."""
    if _is_preset(options, source):
        result = options.certifier.preset(source)
        if 'certificate' not in result:
            raise click.UsageError(f"Preset {source} is evaluation-only")
    else:
        result = options.certifier.certify('at2', _read_document(source))
    _finish_certificate(options, result)


@cli.command()
@click.argument('source')
@pass_options
@handle_errors
def mt1(options, source):
    """Certify a stage list whose weights already satisfy rho_i(tau_i) >= tau_{i+1}."""
    _finish_certificate(options, options.certifier.certify('mt1', _read_document(source)))


@cli.command()
@click.argument('source')
@pass_options
@handle_errors
def mt2(options, source):
    """Rewrite an n = 2 stage list into normal form, then certify it."""
    _finish_certificate(options, options.certifier.certify('mt2', _read_document(source)))


@cli.command()
@click.argument('source', required=False)
@click.option('--image', 'images', multiple=True, help='Image of y, then of z.')
@pass_options
@handle_errors
def n2(options, source, images):
    """Strip the poles of the z-component of a map of k[x, 1/x][y, z]."""
    endo = _load_source_endo(options, source, images)
    result = options.certifier.certify('n2', dump_endo(endo))
    human = _render_endo(load_endo(result['endo'])) + f"\niterations: {result['iterations']}"
    options.emit(result, human)


@cli.command()
@click.argument('source')
@pass_options
@handle_errors
def verify(options, source):
    """Re-check a stored certificate using only ring and group operations."""
    document = _read_document(source)
    if 'certificate' in document:
        document = document['certificate']
    report = options.certifier.verify(document)
    human = '\n'.join(f"{name}: {'ok' if passed else 'FAILED'}" for name, passed in report['checks'].items())
    options.emit(report, human)
    if not report['valid']:
        raise CheckFailed('; '.join(f"{f['check']}: {f['reason']}" for f in report['failures']))


@cli.command()
@click.argument('name', required=False)
@click.option('--q', 'q', default=None, help='Q(w1, w2) for venereau-type.')
@click.option('--f', 'f', default=None, help='f(x, y) for russell.')
@click.option('--s', 's', default=None, type=click.IntRange(min=0), help='Exponent s for russell.')
@click.option('--lambda', 'lam', default=None, help='Nonzero rational lambda for russell.')
@pass_options
@handle_errors
def catalog(options, name, q, f, s, lam):
    """List presets, or evaluate and certify one."""
    if name is None:
        presets = options.certifier.list_presets()
        options.emit({'presets': presets},
                     '\n'.join(f"{p['name']:<20} {p['description']}" for p in presets))
        return
    params: Dict[str, Any] = {}
    if q is not None:
        params['q'] = q
    if f is not None:
        params['f'] = f
    if s is not None:
        params['s'] = s
    if lam is not None:
        params['lam'] = Fraction(lam)
    try:
        result = options.certifier.preset(name, **params)
    except TypeError as exc:
        raise click.UsageError(f"Preset {name} does not take these options: {exc}")
    if 'certificate' in result:
        _finish_certificate(options, result)
        return
    evaluation = load_endo(result['evaluation'])
    options.emit(result, f"{result['preset']['description']}\n{_render_endo(evaluation)}\n"
                         f"matches expectation: {result['matches_expectation']}")
    if not result['matches_expectation']:
        raise CheckFailed(f"preset {name} does not reproduce its expectation")


def main():
    cli(prog_name='coordcert')
