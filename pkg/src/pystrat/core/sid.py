"""Code to work with scenario identifiers."""


from dataclasses import dataclass
from typing import Self


__all__ = ['ScenarioId', 'SID']


@dataclass(frozen=True, order=True)
class ScenarioId:
    """Identifies a generated scenario by its kind and seed.

    Attributes:
        kind: The scenario kind value (e.g. 'maze_plan').
        seed: The generation seed (unsigned 64-bit).
    """

    kind: str
    seed: int

    def __post_init__(self) -> None:
        if not (0 <= self.seed <= 0xFFFFFFFFFFFFFFFF):
            raise ValueError(f'Invalid seed {self.seed}')
        if not self.kind or '-' in self.kind:
            raise ValueError(f'Invalid scenario kind {self.kind!r}')

    def __str__(self) -> str:
        return f'{self.kind}-{self.seed}'

    @classmethod
    def from_str(cls, string: str) -> Self:
        """Creates a new ScenarioId from its string representation.

        Arguments:
            string: The string representation, '<kind>-<seed>'.

        Returns:
            A new ScenarioId instance.

        Raises:
            ValueError: If string is an invalid representation.
        """

        kind, sep, seed = string.rpartition('-')
        if not sep or not seed.isdigit():
            raise ValueError(f'Invalid string for scenario id {string}')

        return cls(kind, int(seed))


SID = ScenarioId
