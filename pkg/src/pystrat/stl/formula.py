"""Signal temporal logic formula trees.

Time bounds are integer step offsets; dt only enters through the dynamics.
"""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from dataclasses import dataclass

from ..core.exceptions import ContractError


__all__ = [
    'Predicate', 'Region', 'Not', 'And', 'Or', 'Always', 'Eventually',
    'Until', 'StlFormula', 'formula_horizon', 'walk',
]


class _Node:
    """Prints every formula node in the prefix text syntax."""

    def __str__(self) -> str:
        from .syntax import format_formula
        return format_formula(self)


@dataclass(frozen=True)
class Predicate(_Node):
    """Linear predicate a^T x <= b over the leading len(a) state entries.

    Its robustness margin is b - a^T x.
    """

    a: tuple[float, ...]
    b: float

    def __post_init__(self) -> None:
        a = tuple(float(v) for v in self.a)
        if not a:
            raise ContractError('Predicate needs a non-empty coefficient list')
        object.__setattr__(self, 'a', a)
        object.__setattr__(self, 'b', float(self.b))


@dataclass(frozen=True)
class Region(_Node):
    """Membership (or non-membership) of the position in an axis-aligned box.

    Sugar for the conjunction of four half-plane predicates (inside) or the
    disjunction of the complementary ones (outside).
    """

    lo: tuple[float, float]
    hi: tuple[float, float]
    inside: bool = True
    name: str | None = None

    def __post_init__(self) -> None:
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 2 or len(hi) != 2 or not (lo[0] < hi[0] and
                                                lo[1] < hi[1]):
            raise ContractError(f'Invalid region bounds {lo} {hi}')
        object.__setattr__(self, 'lo', lo)
        object.__setattr__(self, 'hi', hi)

    def expand(self) -> And | Or:
        (lx, ly), (hx, hy) = self.lo, self.hi
        if self.inside:
            return And((
                Predicate((-1.0, 0.0), -lx), Predicate((1.0, 0.0), hx),
                Predicate((0.0, -1.0), -ly), Predicate((0.0, 1.0), hy),
            ))
        return Or((
            Predicate((1.0, 0.0), lx), Predicate((-1.0, 0.0), -hx),
            Predicate((0.0, 1.0), ly), Predicate((0.0, -1.0), -hy),
        ))

    def negated(self) -> Region:
        return Region(self.lo, self.hi, not self.inside, self.name)


@dataclass(frozen=True)
class Not(_Node):
    child: StlFormula


@dataclass(frozen=True)
class And(_Node):
    children: tuple[StlFormula, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, 'children', tuple(self.children))
        if not self.children:
            raise ContractError('and needs at least one operand')


@dataclass(frozen=True)
class Or(_Node):
    children: tuple[StlFormula, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, 'children', tuple(self.children))
        if not self.children:
            raise ContractError('or needs at least one operand')


def _check_interval(a: int, b: int) -> None:
    if not (isinstance(a, int) and isinstance(b, int)) or not 0 <= a <= b:
        raise ContractError(f'Invalid step interval [{a}, {b}]')


@dataclass(frozen=True)
class Always(_Node):
    a: int
    b: int
    child: StlFormula

    def __post_init__(self) -> None:
        _check_interval(self.a, self.b)


@dataclass(frozen=True)
class Eventually(_Node):
    a: int
    b: int
    child: StlFormula

    def __post_init__(self) -> None:
        _check_interval(self.a, self.b)


@dataclass(frozen=True)
class Until(_Node):
    """left holds at every step from t until right holds at some step in
    [t + a, t + b]."""

    a: int
    b: int
    left: StlFormula
    right: StlFormula

    def __post_init__(self) -> None:
        _check_interval(self.a, self.b)


StlFormula = Predicate | Region | Not | And | Or | Always | Eventually | Until


def formula_horizon(formula: StlFormula) -> int:
    """Number of steps past the evaluation time the formula looks at."""

    match formula:
        case Predicate() | Region():
            return 0
        case Not(child):
            return formula_horizon(child)
        case And(children) | Or(children):
            return max(formula_horizon(c) for c in children)
        case Always(_, b, child) | Eventually(_, b, child):
            return b + formula_horizon(child)
        case Until(_, b, left, right):
            return b + max(formula_horizon(left), formula_horizon(right))
    raise ContractError(f'Not a formula: {formula!r}')


def walk(formula: StlFormula) -> Iterator[StlFormula]:
    """Yields every node of the tree, parents before children."""

    yield formula
    match formula:
        case Not(child) | Always(_, _, child) | Eventually(_, _, child):
            yield from walk(child)
        case And(children) | Or(children):
            for child in children:
                yield from walk(child)
        case Until(_, _, left, right):
            yield from walk(left)
            yield from walk(right)
