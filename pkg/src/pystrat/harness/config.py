"""Batch experiment configuration."""

from __future__ import annotations

import itertools
import tomllib
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field, replace
from enum import StrEnum
from os import PathLike
from typing import Any, Self

from ..env.scenario import ScenarioKind
from ..llm import (
    ChatBackend, ChatOptions, HttpBackend, RuleBasedBackend, ScriptedBackend
)
from ..orch import MAX_ROUNDS, ApiCatalog, DocsMode


__all__ = [
    'BackendKind', 'BackendSpec', 'Setting', 'AblationSpec', 'BatchConfig',
    'load_config',
]


class BackendKind(StrEnum):
    HTTP = 'http'
    SCRIPTED = 'scripted'
    RULES = 'rules'


@dataclass(frozen=True)
class BackendSpec:
    """Which chat backend a batch talks to.

    Attributes:
        kind: Backend type.
        fault_p: Malformed-response probability of the rule-based backend.
        fault_seed: Seed of its fault draws.
        script: Transcript file of the scripted backend.
        endpoint: Endpoint URL of the HTTP backend; the environment
            supplies it when None.
        limit: Requests in flight for the HTTP backend.
    """

    kind: BackendKind = BackendKind.RULES
    fault_p: float = 0.0
    fault_seed: int = 0
    script: str | None = None
    endpoint: str | None = None
    limit: int = 4

    def __post_init__(self) -> None:
        object.__setattr__(self, 'kind', BackendKind(self.kind))
        if not 0.0 <= self.fault_p <= 1.0:
            raise ValueError(f'Invalid fault probability {self.fault_p}')
        if self.kind is BackendKind.SCRIPTED and not self.script:
            raise ValueError('The scripted backend needs a transcript file')
        if self.limit < 1:
            raise ValueError(f'Invalid request limit {self.limit}')

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Self:
        known = {k: data[k] for k in ('kind', 'fault_p', 'fault_seed',
                                      'script', 'endpoint', 'limit')
                 if k in data}
        return cls(**known)

    @property
    def per_episode(self) -> bool:
        """Whether each episode gets its own backend instance.

        A transcript is replayed from its start for every episode, which
        keeps scripted batches independent of scheduling.
        """

        return self.kind is BackendKind.SCRIPTED

    def create(self, catalog: ApiCatalog | None = None,
               model: str | None = None) -> ChatBackend:
        """Builds the backend.

        Raises:
            BackendError: Auth, for an HTTP backend without an API key.
        """

        match self.kind:
            case BackendKind.RULES:
                return RuleBasedBackend(catalog, self.fault_p,
                                        self.fault_seed)
            case BackendKind.SCRIPTED:
                return ScriptedBackend.from_file(self.script)
            case BackendKind.HTTP:
                return HttpBackend.from_env(self.endpoint, model,
                                            limit=self.limit)

    def to_dict(self) -> dict[str, Any]:
        return {'kind': str(self.kind), 'fault_p': self.fault_p,
                'fault_seed': self.fault_seed, 'script': self.script,
                'endpoint': self.endpoint, 'limit': self.limit}


@dataclass(frozen=True)
class Setting:
    """One point of an ablation sweep."""

    temperature: float
    model: str | None
    docs_mode: DocsMode

    @property
    def label(self) -> str:
        return (f'temperature={self.temperature:g},'
                f'model={self.model or "default"},docs={self.docs_mode}')


@dataclass(frozen=True)
class AblationSpec:
    """The swept settings; an empty axis keeps the batch's own value."""

    temperatures: tuple[float, ...] = ()
    models: tuple[str, ...] = ()
    docs_modes: tuple[DocsMode, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, 'temperatures',
                           tuple(float(t) for t in self.temperatures))
        object.__setattr__(self, 'models', tuple(self.models))
        object.__setattr__(self, 'docs_modes',
                           tuple(DocsMode(d) for d in self.docs_modes))
        for t in self.temperatures:
            if not 0.0 <= t <= 2.0:
                raise ValueError(f'Invalid temperature {t}, must be in '
                                 '[0, 2]')

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Self:
        return cls(tuple(data.get('temperatures', ())),
                   tuple(data.get('models', ())),
                   tuple(data.get('docs_modes', ())))

    @property
    def is_empty(self) -> bool:
        return not (self.temperatures or self.models or self.docs_modes)

    def settings(self, base: BatchConfig) -> Iterator[Setting]:
        """The Cartesian product of the axes, temperature varying slowest."""

        for t, m, d in itertools.product(
                self.temperatures or (base.temperature,),
                self.models or (base.model,),
                self.docs_modes or (base.docs_mode,)):
            yield Setting(t, m, d)

    def to_dict(self) -> dict[str, Any]:
        return {'temperatures': list(self.temperatures),
                'models': list(self.models),
                'docs_modes': [str(d) for d in self.docs_modes]}


@dataclass(frozen=True)
class BatchConfig:
    """A batch of episodes: every kind times seeds base .. base + N - 1.

    Attributes:
        kinds: Scenario kinds.
        experiments: Episodes per kind.
        seed_base: First seed.
        max_rounds: Round budget per episode.
        backend: The chat backend.
        timeout_s: Wall-clock budget of each pipeline execution.
        temperature: Sampling temperature.
        model: Model name, None for the backend's default.
        docs_mode: When API docs reach the model.
        baseline: Run the direct-prediction baseline instead of the
            pipeline loop.
        ablation: Settings swept by run_ablation.
        out_dir: Output directory.
        parallelism: Episodes run concurrently.
    """

    kinds: tuple[ScenarioKind, ...] = tuple(ScenarioKind)
    experiments: int = 100
    seed_base: int = 0
    max_rounds: int = MAX_ROUNDS
    backend: BackendSpec = field(default_factory=BackendSpec)
    timeout_s: float = 30.0
    temperature: float = 0.1
    model: str | None = None
    docs_mode: DocsMode = DocsMode.ON_DEMAND
    baseline: bool = False
    ablation: AblationSpec = field(default_factory=AblationSpec)
    out_dir: str = 'results'
    parallelism: int = 1

    def __post_init__(self) -> None:
        kinds = tuple(dict.fromkeys(ScenarioKind(k) for k in self.kinds))
        object.__setattr__(self, 'kinds', kinds)
        object.__setattr__(self, 'docs_mode', DocsMode(self.docs_mode))

        if not kinds:
            raise ValueError('A batch needs at least one scenario kind')
        if self.experiments < 1:
            raise ValueError(f'Invalid experiment count {self.experiments}')
        if self.seed_base < 0:
            raise ValueError(f'Invalid seed base {self.seed_base}')
        if self.max_rounds < 1:
            raise ValueError(f'Invalid round budget {self.max_rounds}')
        if not self.timeout_s > 0:
            raise ValueError(f'Invalid timeout {self.timeout_s}')
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f'Invalid temperature {self.temperature}, must '
                             'be in [0, 2]')
        if self.parallelism < 1:
            raise ValueError(f'Invalid parallelism {self.parallelism}')

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Self:
        """Builds a config from a mapping with the field names as keys;
        `backend` and `ablation` are nested tables."""

        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f'Unknown batch settings: '
                             f'{", ".join(sorted(unknown))}')

        values = dict(data)
        if 'kinds' in values:
            values['kinds'] = tuple(values['kinds'])
        if 'backend' in values:
            values['backend'] = BackendSpec.from_dict(values['backend'])
        if 'ablation' in values:
            values['ablation'] = AblationSpec.from_dict(values['ablation'])
        return cls(**values)

    def updated(self, **changes: Any) -> Self:
        """A copy with the given fields replaced; None values are ignored."""

        return replace(self, **{k: v for k, v in changes.items()
                                if v is not None})

    @property
    def options(self) -> ChatOptions:
        return ChatOptions(self.model, self.temperature)

    def to_dict(self) -> dict[str, Any]:
        return {
            'kinds': [str(k) for k in self.kinds],
            'experiments': self.experiments,
            'seed_base': self.seed_base,
            'max_rounds': self.max_rounds,
            'backend': self.backend.to_dict(),
            'timeout_s': self.timeout_s,
            'temperature': self.temperature,
            'model': self.model,
            'docs_mode': str(self.docs_mode),
            'baseline': self.baseline,
            'ablation': self.ablation.to_dict(),
            'out_dir': self.out_dir,
            'parallelism': self.parallelism,
        }


def load_config(path: str | PathLike) -> BatchConfig:
    """Reads a BatchConfig from a TOML file."""

    with open(path, 'rb') as f:
        return BatchConfig.from_dict(tomllib.load(f))
