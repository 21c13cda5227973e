"""Prompt construction from the editable templates in `templates/`."""

from __future__ import annotations

import functools
import json
from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum
from importlib import resources
from string import Template
from typing import TYPE_CHECKING

import numpy as np

from ..env.scenario import ScenarioSpec
from .catalog import ApiCatalog
from .config import (
    SCENARIO_FIELDS, Binding, PipelineConfig, StageConfig, StrategySelection
)

if TYPE_CHECKING:
    from .episode import RoundRecord


__all__ = [
    'HISTORY_LIMIT', 'DocsMode', 'DocsBundle', 'load_template',
    'system_prompt', 'prompt_messages', 'retrieve_api_docs',
    'build_selection_prompt', 'build_pipeline_prompt',
    'build_baseline_prompt',
]


HISTORY_LIMIT = 3


class DocsMode(StrEnum):
    """When full API documentation reaches the model."""

    ON_DEMAND = 'on_demand'
    UPFRONT = 'upfront'


@dataclass(frozen=True)
class DocsBundle:
    """Documentation entries as (api id, text) pairs."""

    entries: tuple[tuple[str, str], ...]

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(api for api, _ in self.entries)

    @property
    def text(self) -> str:
        return '\n\n'.join(text for _, text in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


@functools.cache
def load_template(name: str) -> Template:
    """Loads templates/<name>.txt shipped with the package."""

    source = resources.files(__package__).joinpath('templates', f'{name}.txt')
    return Template(source.read_text(encoding='utf-8'))


def system_prompt() -> str:
    return load_template('system').template.strip()


def prompt_messages(prompt: str) -> list[dict[str, str]]:
    """The chat messages carrying a prompt."""

    return [{'role': 'system', 'content': system_prompt()},
            {'role': 'user', 'content': prompt}]


def retrieve_api_docs(selection: StrategySelection, catalog: ApiCatalog,
                      mode: DocsMode = DocsMode.ON_DEMAND) -> DocsBundle:
    """Full docs of the selected APIs in selection order (on demand), or of
    the whole catalog (upfront)."""

    ids = tuple(catalog) if mode is DocsMode.UPFRONT else selection.apis
    return DocsBundle(tuple((api, catalog[api].docs) for api in ids))


def _history(history: Sequence[RoundRecord]) -> str:
    failed = [r for r in history if r.error is not None][-HISTORY_LIMIT:]
    if not failed:
        return ''
    lines = ['', '## Previous attempts',
             'Earlier rounds failed; fix the cause before answering.']
    lines.extend(f'- Round {r.index}: {r.diagnostic}' for r in failed)
    return '\n'.join(lines)


def build_selection_prompt(task_text: str, env_summary: str,
                           catalog: ApiCatalog,
                           history: Sequence[RoundRecord] = (),
                           mode: DocsMode = DocsMode.ON_DEMAND) -> str:
    """The strategy selection prompt.

    Only the catalog descriptions are shown, unless the docs are provided
    upfront. The diagnostics of the most recent failed rounds are appended.
    """

    docs = ''
    if mode is DocsMode.UPFRONT:
        bundle = DocsBundle(tuple((api, catalog[api].docs)
                                  for api in catalog))
        docs = '\n## API documentation\n' + bundle.text + '\n'

    return load_template('selection').substitute(
        environment=env_summary,
        task=task_text,
        catalog=catalog.descriptions(),
        docs=docs,
        history=_history(history),
    ).strip() + '\n'


def _example(selection: StrategySelection, catalog: ApiCatalog) -> str:
    """A syntactic example chaining the selected APIs one after another."""

    stages = []
    for k, api in enumerate(selection.apis, 1):
        example = catalog[api].example
        inputs = {}
        for name, value in example.get('inputs', {}).items():
            spec = {'from': value} if isinstance(value, str) else value
            source = spec['from']
            if source not in SCENARIO_FIELDS and k > 1:
                source = f'out{k - 1}'
            inputs[name] = Binding(source, spec.get('convert'),
                                   spec.get('speed', 1.0),
                                   spec.get('fit_horizon', False))
        stages.append(StageConfig(api, f'out{k}', inputs,
                                  example.get('params', {})))
    return json.dumps(PipelineConfig.build(stages).to_dict(), indent=2)


def build_pipeline_prompt(task_text: str, env_summary: str,
                          selection: StrategySelection, docs: DocsBundle,
                          history: Sequence[RoundRecord] = (),
                          catalog: ApiCatalog | None = None) -> str:
    """The pipeline prompt: the docs bundle verbatim and the configuration
    grammar."""

    catalog = catalog or ApiCatalog.build()
    return load_template('pipeline').substitute(
        environment=env_summary,
        task=task_text,
        selection=', '.join(selection.apis),
        docs=docs.text,
        fields=', '.join(SCENARIO_FIELDS),
        example=_example(selection, catalog),
        history=_history(history),
    ).strip() + '\n'


def build_baseline_prompt(task_text: str, env_summary: str,
                          scenario: ScenarioSpec,
                          history: Sequence[RoundRecord] = ()) -> str:
    """The prompt asking for the motion itself as a numeric table; tracking
    scenarios include their reference states."""

    reference = ''
    if scenario.reference is not None:
        rows = '\n'.join(' '.join(f'{v:.4f}' for v in state)
                         for state in np.asarray(scenario.reference.states))
        reference = f'\n## Reference states\n```reference\n{rows}\n```\n'

    return load_template('baseline').substitute(
        environment=env_summary,
        task=task_text,
        reference=reference,
        horizon=scenario.horizon,
        states=scenario.horizon + 1,
        m=scenario.model.m,
        n=scenario.model.n,
        dt=f'{scenario.dt:g}',
        history=_history(history),
    ).strip() + '\n'
