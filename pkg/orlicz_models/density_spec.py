"""
Text grammar for densities and random variables.

    density  := 'uniform'
              | 'beta' ['beta=' R]                      beta x^(beta-1), default beta = 1
              | 'divergenza'
              | 'co419' ['t0=' T] ['beta=' R]            co419 density, or co419_q(t0, beta) when a parameter is given
              | 'piecewise' '[' piece (';' piece)* ']'   pieces must cover [0, 1] and integrate to 1
    variable := 'const' C
              | 'poly' C0 C1 ...                         C0 + C1 x + ... on [0, 1]
              | 'piecewise' '[' piece (';' piece)* ']'   signed pieces
    piece    := A B 'const' C
              | A B 'power' C ('left' | 'right') R      C (x-A)^R or C (B-x)^R on (A, B]
              | A B 'beta' C R                         C x^R on (A, B]
              | A B 'poly' C0 C1 ...

Numbers are decimals or fractions such as 1/2.
"""
from fractions import Fraction

from .counterexamples import co419_density, co419_q, divergenza_density
from .measure_core import Density, Piece, RandomVariable, lebesgue
from .orlicz_utilities import DensitySpecError

DENSITY_FAMILIES = ('uniform', 'beta', 'divergenza', 'co419', 'piecewise')
VARIABLE_FAMILIES = ('const', 'poly', 'piecewise')


def _number(token):
    try:
        return float(token)
    except ValueError:
        pass
    try:
        return float(Fraction(token))
    except (ValueError, ZeroDivisionError):
        raise DensitySpecError(f'density_spec.py - expected a number, got {token!r}') from None


def _split(text):
    text = (text or '').strip()
    if not text:
        raise DensitySpecError('density_spec.py - empty specification')
    head, _, rest = text.partition(' ')
    return head.lower(), rest.strip()


def _parameters(rest, allowed):
    params = {}
    for token in rest.split():
        key, sep, value = token.partition('=')
        if not sep or key not in allowed:
            raise DensitySpecError(f'density_spec.py - unexpected parameter {token!r}; allowed: {allowed}')
        params[key] = _number(value)
    return params


def _piece(text):
    tokens = text.split()
    if len(tokens) < 4:
        raise DensitySpecError(f'density_spec.py - incomplete piece {text.strip()!r}')
    a, b, kind, args = _number(tokens[0]), _number(tokens[1]), tokens[2].lower(), tokens[3:]
    if not 0 <= a < b <= 1:
        raise DensitySpecError(f'density_spec.py - invalid interval ({tokens[0]}, {tokens[1]}]')
    try:
        if kind == 'const' and len(args) == 1:
            return Piece.constant(a, b, _number(args[0]))
        if kind == 'power' and len(args) == 3:
            return Piece.power(a, b, _number(args[0]), args[1].lower(), _number(args[2]))
        if kind == 'beta' and len(args) == 2:
            return Piece.beta_power(a, b, _number(args[0]), _number(args[1]))
        if kind == 'poly' and args:
            return Piece.polynomial(a, b, [_number(t) for t in args])
    except ValueError as e:
        raise DensitySpecError(f'density_spec.py - {e}') from None
    raise DensitySpecError(f'density_spec.py - cannot parse piece {text.strip()!r}')


def _pieces(rest):
    rest = rest.strip()
    if not (rest.startswith('[') and rest.endswith(']')):
        raise DensitySpecError(f'density_spec.py - piecewise expects [ ... ], got {rest!r}')
    body = rest[1:-1]
    pieces = [_piece(part) for part in body.split(';') if part.strip()]
    if not pieces:
        raise DensitySpecError('density_spec.py - piecewise without pieces')
    return sorted(pieces, key=lambda p: p.a)


def _check_cover(pieces, text):
    edge = 0.0
    for p in pieces:
        if p.a != edge:
            raise DensitySpecError(f'density_spec.py - pieces of {text!r} leave a gap or overlap at {edge:g}')
        edge = p.b
    if edge != 1.0:
        raise DensitySpecError(f'density_spec.py - pieces of {text!r} stop at {edge:g}')


def parse_density(text):
    """ Parses a density specification

    Parameters
    ----------
    text: str - see the module grammar

    Returns
    -------
    Density (validated: positive and normalized)

    Raises
    ------
    DensitySpecError on grammar errors or a density that fails validation
    """
    family, rest = _split(text)
    name = ' '.join(text.split())
    if family == 'uniform':
        _parameters(rest, ())
        return lebesgue()
    if family == 'beta':
        beta = _parameters(rest, ('beta',)).get('beta', 1.0)
        if beta <= 0:
            raise DensitySpecError('density_spec.py - beta must be positive')
        return Density([Piece.beta_power(0.0, 1.0, beta, beta - 1.0)], name=f'beta(beta={beta:g})')
    if family == 'divergenza':
        _parameters(rest, ())
        return divergenza_density()
    if family == 'co419':
        params = _parameters(rest, ('t0', 'beta'))
        if not params:
            return co419_density()
        try:
            return co419_q(params.get('t0', 0.25), params.get('beta', 2.0))
        except ValueError as e:
            raise DensitySpecError(f'density_spec.py - {e}') from None
    if family == 'piecewise':
        pieces = _pieces(rest)
        _check_cover(pieces, name)
        try:
            return Density(pieces, name=name).validate()
        except ValueError as e:
            raise DensitySpecError(f'density_spec.py - {e}') from None
    raise DensitySpecError(f'density_spec.py - unknown density family {family!r}; expected one of '
                           f'{DENSITY_FAMILIES}')


def parse_variable(text):
    """ Parses a random variable specification

    Returns
    -------
    RandomVariable
    """
    family, rest = _split(text)
    name = ' '.join(text.split())
    if family == 'const':
        tokens = rest.split()
        if len(tokens) != 1:
            raise DensitySpecError(f'density_spec.py - const expects one value, got {rest!r}')
        return RandomVariable([Piece.constant(0.0, 1.0, _number(tokens[0]))], name=name)
    if family == 'poly':
        tokens = rest.split()
        if not tokens:
            raise DensitySpecError('density_spec.py - poly expects coefficients')
        return RandomVariable([Piece.polynomial(0.0, 1.0, [_number(t) for t in tokens])], name=name)
    if family == 'piecewise':
        pieces = _pieces(rest)
        _check_cover(pieces, name)
        return RandomVariable(pieces, name=name)
    raise DensitySpecError(f'density_spec.py - unknown variable family {family!r}; expected one of '
                           f'{VARIABLE_FAMILIES}')


def parse_grid(text):
    """ 'a:b:step' (inclusive of b up to rounding) or a comma separated list """
    text = (text or '').strip()
    if ':' in text:
        parts = text.split(':')
        if len(parts) != 3:
            raise DensitySpecError(f'density_spec.py - grid {text!r} is not a:b:step')
        a, b, step = (_number(t) for t in parts)
        if step <= 0 or b < a:
            raise DensitySpecError(f'density_spec.py - grid {text!r} is empty')
        count = int(round((b - a) / step))
        values = [a + i * step for i in range(count + 1)]
        return [round(v, 15) for v in values if v <= b + 1e-12]
    values = [_number(t) for t in text.split(',') if t.strip()]
    if not values:
        raise DensitySpecError('density_spec.py - empty grid')
    return values


def parse_target(text):
    """ Parses a closure target: any density specification, or a piecewise density that may vanish on pieces

    Returns
    -------
    Density, with strictly_positive False when some piece is zero

    Raises
    ------
    DensitySpecError on grammar errors, negative pieces or a wrong total mass
    """
    family, rest = _split(text)
    if family != 'piecewise':
        return parse_density(text)
    name = ' '.join(text.split())
    pieces = _pieces(rest)
    _check_cover(pieces, name)
    mids = [float(p.form([0.5 * (p.a + p.b)])[0]) for p in pieces]
    if any(m < 0 for m in mids):
        raise DensitySpecError(f'density_spec.py - target {name!r} takes negative values')
    try:
        return Density(pieces, name=name, strictly_positive=all(m > 0 for m in mids)).validate()
    except ValueError as e:
        raise DensitySpecError(f'density_spec.py - {e}') from None
