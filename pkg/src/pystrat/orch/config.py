"""Strategy selections and pipeline configurations.

A pipeline is the declarative form of integration code: an ordered list of
API stages, each naming its parameters, where each input comes from, and the
name of its output. Inputs bind either a scenario field or the output of an
earlier stage; a Path feeds a reference only through the explicit
path-to-reference conversion.

Block grammar (JSON, schema_version 1)::

    {
      "schema_version": 1,
      "stages": [
        {"api": "rrt", "params": {"clearance": 0.15},
         "inputs": {"start": "x0", "goal": "goal", "obstacles": "obstacles"},
         "output": "path"},
        {"api": "pid", "params": {"kff": 1.0},
         "inputs": {"x0": "x0",
                    "reference": {"from": "path",
                                  "convert": "path_to_reference",
                                  "speed": 1.0, "fit_horizon": true}},
         "output": "traj"}
      ],
      "final": "traj"
    }
"""

from __future__ import annotations

import json
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Self

from .catalog import PortType


__all__ = [
    'PIPELINE_SCHEMA_VERSION', 'SCENARIO_FIELDS', 'CONVERT_PATH',
    'StrategySelection', 'Binding', 'StageConfig', 'PipelineConfig',
]


PIPELINE_SCHEMA_VERSION = 1
CONVERT_PATH = 'path_to_reference'

# Scenario fields a stage input may bind, with their semantic types.
SCENARIO_FIELDS: Mapping[str, PortType] = MappingProxyType({
    'x0': PortType.STATE,
    'goal': PortType.GOAL,
    'obstacles': PortType.OBSTACLES,
    'reference': PortType.TRAJECTORY,
    'stl_formula': PortType.FORMULA,
})


@dataclass(frozen=True)
class StrategySelection:
    """The APIs picked for a task, in order."""

    apis: tuple[str, ...]
    rationale: str = ''

    def to_dict(self) -> dict[str, Any]:
        return {'apis': list(self.apis), 'rationale': self.rationale}

    def to_block(self) -> str:
        return '```json\n' + json.dumps(self.to_dict()) + '\n```'


@dataclass(frozen=True)
class Binding:
    """Where a stage input comes from.

    Attributes:
        source: A scenario field or an earlier stage's output name.
        convert: CONVERT_PATH to time-parameterize a Path, else None.
        speed: Conversion speed [m/s].
        fit_horizon: Raise the speed so the path fits the horizon.
    """

    source: str
    convert: str | None = None
    speed: float = 1.0
    fit_horizon: bool = False

    def to_json(self) -> str | dict[str, Any]:
        if self.convert is None:
            return self.source
        return {'from': self.source, 'convert': self.convert,
                'speed': self.speed, 'fit_horizon': self.fit_horizon}


@dataclass(frozen=True)
class StageConfig:
    api: str
    output: str
    inputs: Mapping[str, Binding] = field(default_factory=dict)
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, 'inputs',
                           MappingProxyType(dict(self.inputs)))
        object.__setattr__(self, 'params',
                           MappingProxyType(dict(self.params)))

    def to_dict(self) -> dict[str, Any]:
        return {
            'api': self.api,
            'params': dict(self.params),
            'inputs': {k: b.to_json() for k, b in self.inputs.items()},
            'output': self.output,
        }


@dataclass(frozen=True)
class PipelineConfig:
    """An ordered list of stages and the name of the final trajectory."""

    stages: tuple[StageConfig, ...]
    final: str
    schema_version: int = PIPELINE_SCHEMA_VERSION

    @classmethod
    def build(cls, stages: Sequence[StageConfig], final: str | None = None
              ) -> Self:
        """A pipeline whose final output is the last stage's, by default."""

        stages = tuple(stages)
        return cls(stages, final if final is not None else stages[-1].output)

    @property
    def apis(self) -> tuple[str, ...]:
        return tuple(s.api for s in self.stages)

    def to_dict(self) -> dict[str, Any]:
        return {
            'schema_version': self.schema_version,
            'stages': [s.to_dict() for s in self.stages],
            'final': self.final,
        }

    def to_block(self) -> str:
        """The fenced block a model is asked to emit."""

        return '```json\n' + json.dumps(self.to_dict(), indent=2) + '\n```'
