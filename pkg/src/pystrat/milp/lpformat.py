"""CPLEX LP text format writer, for cross-checking problems by hand."""

from __future__ import annotations

import re
from typing import TextIO

import numpy as np

from .problem import LinearProgram, MilpProblem, Relation, Sense


__all__ = ['write_lp']


_BAD_CHARS = re.compile(r'[^A-Za-z0-9_.]')


def _names(lp: LinearProgram) -> list[str]:
    if lp.names is None:
        return [f'x{j}' for j in range(lp.n_vars)]
    return [_BAD_CHARS.sub('_', name) for name in lp.names]


def _expr(coeffs: np.ndarray, names: list[str]) -> str:
    terms = []
    for j in np.flatnonzero(coeffs):
        value = coeffs[j]
        sign = '-' if value < 0 else '+'
        terms.append(f'{sign} {abs(value):.12g} {names[j]}')
    if not terms:
        return '0 ' + names[0] if names else '0'
    text = ' '.join(terms)
    return text[2:] if text.startswith('+ ') else text


def write_lp(problem: MilpProblem | LinearProgram, stream: TextIO) -> None:
    """Writes the problem to stream in CPLEX LP format."""

    if isinstance(problem, LinearProgram):
        problem = MilpProblem(problem)
    lp = problem.lp
    names = _names(lp)

    stream.write('\\ written by pystrat\n')
    stream.write('Minimize\n' if lp.sense is Sense.MIN else 'Maximize\n')
    stream.write(f' obj: {_expr(lp.c, names)}\n')

    stream.write('Subject To\n')
    ops = {Relation.LE: '<=', Relation.GE: '>=', Relation.EQ: '='}
    for i in range(lp.n_rows):
        stream.write(f' c{i}: {_expr(lp.A[i], names)} '
                     f'{ops[lp.relations[i]]} {lp.rhs[i]:.12g}\n')

    stream.write('Bounds\n')
    binaries = []
    generals = []
    for j, name in enumerate(names):
        lo, hi = lp.lo[j], lp.hi[j]
        if j in problem.integers:
            if lo == 0.0 and hi == 1.0:
                binaries.append(name)
                continue
            generals.append(name)

        if np.isneginf(lo) and np.isposinf(hi):
            stream.write(f' {name} free\n')
        elif np.isneginf(lo):
            stream.write(f' -inf <= {name} <= {hi:.12g}\n')
        elif np.isposinf(hi):
            if lo != 0.0:
                stream.write(f' {name} >= {lo:.12g}\n')
        else:
            stream.write(f' {lo:.12g} <= {name} <= {hi:.12g}\n')

    if generals:
        stream.write('Generals\n')
        stream.write(''.join(f' {name}\n' for name in generals))
    if binaries:
        stream.write('Binaries\n')
        stream.write(''.join(f' {name}\n' for name in binaries))
    stream.write('End\n')
