"""Prefix text syntax for formulas.

Grammar::

    formula := '(' 'le' vector number ')'
             | '(' ('in' | 'out') [name] number number number number ')'
             | '(' 'not' formula ')'
             | '(' ('and' | 'or') formula+ ')'
             | '(' ('G' | 'F') int int formula ')'
             | '(' 'U' int int formula formula ')'
    vector  := '[' number* ']'

`(in key 1 1 2 2)` is the box [1, 2] x [1, 2]; `(G 0 10 phi)` means phi
holds at every step 0..10 ahead.
"""

from __future__ import annotations

import re

from ..core.exceptions import ContractError
from .formula import (
    Always, And, Eventually, Not, Or, Predicate, Region, StlFormula, Until
)


__all__ = ['StlSyntaxError', 'parse_formula', 'format_formula']


_TOKEN = re.compile(r'\s*(?:([()\[\]])|([^\s()\[\]]+))')
_NAME = re.compile(r'[A-Za-z_][A-Za-z0-9_]*$')


class StlSyntaxError(ContractError):
    """Raised for malformed formula text."""


def _tokenize(text: str) -> list[str]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None:
            raise StlSyntaxError(f'Unexpected character at offset {pos}')
        tokens.append(match.group(1) or match.group(2))
        pos = match.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[str]) -> None:
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        token = self.peek()
        if token is None:
            raise StlSyntaxError('Unexpected end of formula')
        self.pos += 1
        return token

    def expect(self, token: str) -> None:
        got = self.take()
        if got != token:
            raise StlSyntaxError(f'Expected {token!r}, got {got!r}')

    def number(self) -> float:
        token = self.take()
        try:
            return float(token)
        except ValueError:
            raise StlSyntaxError(f'Expected a number, got {token!r}') from None

    def integer(self) -> int:
        token = self.take()
        if not re.fullmatch(r'\d+', token):
            raise StlSyntaxError(f'Expected a step count, got {token!r}')
        return int(token)

    def formula(self) -> StlFormula:
        self.expect('(')
        op = self.take()
        match op:
            case 'le':
                self.expect('[')
                coeffs = []
                while self.peek() != ']':
                    coeffs.append(self.number())
                self.expect(']')
                node = Predicate(tuple(coeffs), self.number())
            case 'in' | 'out':
                name = None
                token = self.peek()
                if token is not None and _NAME.match(token):
                    name = self.take()
                lx, ly, hx, hy = (self.number() for _ in range(4))
                node = Region((lx, ly), (hx, hy), op == 'in', name)
            case 'not':
                node = Not(self.formula())
            case 'and' | 'or':
                children = [self.formula()]
                while self.peek() == '(':
                    children.append(self.formula())
                node = (And if op == 'and' else Or)(tuple(children))
            case 'G' | 'F':
                a, b = self.integer(), self.integer()
                node = (Always if op == 'G' else Eventually)(
                    a, b, self.formula()
                )
            case 'U':
                a, b = self.integer(), self.integer()
                node = Until(a, b, self.formula(), self.formula())
            case _:
                raise StlSyntaxError(f'Unknown operator {op!r}')
        self.expect(')')
        return node


def parse_formula(text: str) -> StlFormula:
    """Parses the prefix syntax into a formula tree.

    Raises:
        StlSyntaxError: If the text is malformed.
    """

    parser = _Parser(_tokenize(text))
    try:
        formula = parser.formula()
    except StlSyntaxError:
        raise
    except ContractError as e:
        raise StlSyntaxError(str(e)) from None

    if parser.peek() is not None:
        raise StlSyntaxError(f'Trailing input at {parser.peek()!r}')
    return formula


def _num(value: float) -> str:
    return repr(float(value))


def format_formula(formula: StlFormula) -> str:
    """Prints a formula so that parse_formula gives it back unchanged."""

    match formula:
        case Predicate(a, b):
            return f'(le [{" ".join(map(_num, a))}] {_num(b)})'
        case Region(lo, hi, inside, name):
            op = 'in' if inside else 'out'
            label = f' {name}' if name else ''
            return (f'({op}{label} {_num(lo[0])} {_num(lo[1])} '
                    f'{_num(hi[0])} {_num(hi[1])})')
        case Not(child):
            return f'(not {format_formula(child)})'
        case And(children) | Or(children):
            op = 'and' if isinstance(formula, And) else 'or'
            return f'({op} {" ".join(map(format_formula, children))})'
        case Always(a, b, child):
            return f'(G {a} {b} {format_formula(child)})'
        case Eventually(a, b, child):
            return f'(F {a} {b} {format_formula(child)})'
        case Until(a, b, left, right):
            return (f'(U {a} {b} {format_formula(left)} '
                    f'{format_formula(right)})')

    raise ContractError(f'Not a formula: {formula!r}')
