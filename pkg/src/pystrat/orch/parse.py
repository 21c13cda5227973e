"""Reading model responses: fenced blocks, selections, pipelines, tables."""

from __future__ import annotations

import json
import re
from collections.abc import Mapping
from typing import Any

import numpy as np

from ..core.exceptions import ParseError
from .catalog import ApiCatalog
from .config import (
    CONVERT_PATH, PIPELINE_SCHEMA_VERSION, Binding, PipelineConfig,
    StageConfig, StrategySelection
)


__all__ = [
    'extract_block', 'parse_selection', 'parse_pipeline', 'parse_table',
]


_FENCE = '```'
_BLOCK = re.compile(r'```([A-Za-z0-9_+-]*)[ \t]*\r?\n(.*?)```', re.DOTALL)


def extract_block(text: str) -> tuple[str, str]:
    """Returns (language tag, body) of the last fenced block in text.

    Raises:
        ParseError: If there is no complete fenced block.
    """

    blocks = _BLOCK.findall(text or '')
    if not blocks:
        if _FENCE in (text or ''):
            raise ParseError('unterminated structured block')
        raise ParseError('missing structured block')
    tag, body = blocks[-1]
    return tag.lower(), body.strip()


def _load_json(body: str, what: str) -> Any:
    try:
        return json.loads(body)
    except json.JSONDecodeError as e:
        raise ParseError(f'malformed {what} block: {e.msg} at line '
                         f'{e.lineno} column {e.colno}') from None


def _api_id(name: str, catalog: ApiCatalog) -> str:
    """Matches name to a catalog id regardless of case and padding."""

    key = name.strip().lower()
    return key if key in catalog else name


def parse_selection(text: str, catalog: ApiCatalog) -> StrategySelection:
    """Reads the strategy selection from the last fenced block.

    The block holds either a JSON list of API ids or an object
    {"apis": [...], "rationale": "..."}.

    Raises:
        ParseError: On a missing or malformed block, an empty list, an
            unknown id or a duplicate.
    """

    data = _load_json(extract_block(text)[1], 'selection')
    rationale = ''
    if isinstance(data, Mapping):
        rationale = data.get('rationale', '')
        if not isinstance(rationale, str):
            raise ParseError('selection rationale must be text')
        data = data.get('apis')
    if not isinstance(data, list) or not all(
            isinstance(a, str) for a in data):
        raise ParseError('selection must be a list of API ids')
    if not data:
        raise ParseError('selection is empty')

    data = [_api_id(a, catalog) for a in data]
    unknown = [a for a in data if a not in catalog]
    if unknown:
        raise ParseError(
            'unknown API id ' + ', '.join(repr(a) for a in unknown)
            + '; valid ids are ' + ', '.join(catalog)
        )
    duplicates = sorted({a for a in data if data.count(a) > 1})
    if duplicates:
        raise ParseError(f'duplicate API id {", ".join(duplicates)}')

    return StrategySelection(tuple(data), rationale)


def _binding(stage: int, name: str, value: Any) -> Binding:
    if isinstance(value, str):
        return Binding(value)
    if not isinstance(value, Mapping) or not isinstance(value.get('from'),
                                                        str):
        raise ParseError(
            f'stage {stage}: input {name} must be a name or an object with '
            '"from"'
        )

    unknown = set(value) - {'from', 'convert', 'speed', 'fit_horizon'}
    if unknown:
        raise ParseError(f'stage {stage}: input {name} has unknown keys '
                         + ', '.join(sorted(unknown)))
    convert = value.get('convert')
    if convert is not None and convert != CONVERT_PATH:
        raise ParseError(f'stage {stage}: unknown conversion {convert!r}')
    speed = value.get('speed', 1.0)
    fit = value.get('fit_horizon', False)
    if isinstance(speed, bool) or not isinstance(speed, (int, float)):
        raise ParseError(f'stage {stage}: speed of input {name} must be a '
                         'number')
    if not isinstance(fit, bool):
        raise ParseError(f'stage {stage}: fit_horizon of input {name} must '
                         'be true or false')
    return Binding(value['from'], convert, float(speed), fit)


def _stage(index: int, data: Any, catalog: ApiCatalog) -> StageConfig:
    if not isinstance(data, Mapping):
        raise ParseError(f'stage {index} must be an object')
    unknown = set(data) - {'api', 'params', 'inputs', 'output'}
    if unknown:
        raise ParseError(f'stage {index} has unknown keys '
                         + ', '.join(sorted(unknown)))

    api, output = data.get('api'), data.get('output')
    params, inputs = data.get('params', {}), data.get('inputs', {})
    if not isinstance(api, str):
        raise ParseError(f'stage {index} needs an "api" name')
    if not isinstance(output, str) or not output:
        raise ParseError(f'stage {index} needs an "output" name')
    if not isinstance(params, Mapping):
        raise ParseError(f'stage {index}: "params" must be an object')
    if not isinstance(inputs, Mapping):
        raise ParseError(f'stage {index}: "inputs" must be an object')

    return StageConfig(
        _api_id(api, catalog), output,
        {name: _binding(index, name, v) for name, v in inputs.items()},
        params,
    )


def parse_pipeline(text: str, catalog: ApiCatalog) -> PipelineConfig:
    """Reads a PipelineConfig from the last fenced block.

    Only structure is checked here; whether the stages make sense is left
    to validate_pipeline. API names are matched to catalog ids regardless
    of case, and names the catalog does not know are kept as written.

    Raises:
        ParseError: On a missing, truncated or structurally malformed block.
    """

    data = _load_json(extract_block(text)[1], 'pipeline')
    if not isinstance(data, Mapping):
        raise ParseError('pipeline block must be an object')

    version = data.get('schema_version', PIPELINE_SCHEMA_VERSION)
    if version != PIPELINE_SCHEMA_VERSION:
        raise ParseError(f'unsupported pipeline schema_version {version!r}')
    stages = data.get('stages')
    if not isinstance(stages, list) or not stages:
        raise ParseError('pipeline needs a non-empty "stages" list')

    parsed = tuple(_stage(i, s, catalog) for i, s in enumerate(stages, 1))
    final = data.get('final', parsed[-1].output)
    if not isinstance(final, str):
        raise ParseError('"final" must name a stage output')

    return PipelineConfig(parsed, final, version)


def parse_table(text: str) -> np.ndarray:
    """Reads a whitespace-separated numeric table from the last fenced
    block; every row must have the same number of columns.

    Raises:
        ParseError: On a missing block, a non-numeric cell or ragged rows.
    """

    _, body = extract_block(text)
    rows = []
    for k, line in enumerate(body.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        try:
            rows.append([float(v) for v in line.replace(',', ' ').split()])
        except ValueError:
            raise ParseError(f'table row {k} is not numeric: {line!r}'
                             ) from None

    if not rows:
        raise ParseError('table is empty')
    if len({len(r) for r in rows}) != 1:
        raise ParseError('table rows have different lengths')

    table = np.array(rows)
    if not np.all(np.isfinite(table)):
        raise ParseError('table holds non-finite values')
    return table
