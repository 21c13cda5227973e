"""Static checks of pipeline configurations against a scenario."""

from __future__ import annotations

from ..core.exceptions import PipelineValidationError
from ..env.scenario import ScenarioSpec
from .catalog import ApiCatalog, PortType
from .config import (
    SCENARIO_FIELDS, PipelineConfig, StageConfig, StrategySelection
)


__all__ = ['scenario_values', 'pipeline_violations', 'validate_pipeline']


def scenario_values(scenario: ScenarioSpec) -> dict[str, PortType]:
    """The scenario fields this scenario actually carries."""

    return {name: kind for name, kind in SCENARIO_FIELDS.items()
            if getattr(scenario, name) is not None}


def _stage_violations(index: int, stage: StageConfig, catalog: ApiCatalog,
                      scenario: ScenarioSpec,
                      available: dict[str, PortType | None],
                      later: set[str]) -> list[str]:
    label = f'stage {index} ({stage.api})'
    spec = catalog[stage.api]
    found = []

    for name, value in stage.params.items():
        param = spec.param(name)
        if param is None:
            found.append(f'{label}: unknown parameter {name}')
        elif (problem := param.check(value)) is not None:
            found.append(f'{label}: {problem}')

    for rule in spec.rules:
        if not rule.applies(scenario.model):
            found.append(f'{label}: {rule.message}')

    for name in stage.inputs:
        if spec.input(name) is None:
            found.append(f'{label}: unknown input {name}')

    for port in spec.inputs:
        binding = stage.inputs.get(port.name)
        if binding is None:
            if port.required:
                found.append(f'{label}: missing required input {port.name} '
                             f'({" | ".join(port.types)})')
            continue

        where = f'{label}: input {port.name}'
        if binding.source in available and available[binding.source] is None:
            continue  # produced by an unknown API
        source = available.get(binding.source)
        if source is None:
            if binding.source in later:
                found.append(f'{where} uses {binding.source!r} before the '
                             'stage producing it')
            elif binding.source in SCENARIO_FIELDS:
                found.append(f'{where} is bound to {binding.source!r}, which '
                             f'this {scenario.kind} scenario does not have')
            else:
                found.append(f'{where} is bound to undeclared value '
                             f'{binding.source!r}')
            continue

        if binding.convert is not None:
            if source is not PortType.PATH:
                found.append(f'{where}: path_to_reference needs a Path, '
                             f'{binding.source!r} is a {source}')
            elif PortType.TRAJECTORY not in port.types:
                found.append(f'{where} takes {" | ".join(port.types)}, not a '
                             'converted reference')
            if not binding.speed > 0:
                found.append(f'{where}: conversion speed must be positive')
        elif source not in port.types:
            hint = ''
            if (source is PortType.PATH
                    and PortType.TRAJECTORY in port.types):
                hint = ('; a Path feeds a reference only through '
                        'path_to_reference')
            found.append(f'{where} takes {" | ".join(port.types)}, got '
                         f'{source} from {binding.source!r}{hint}')

    return found


def pipeline_violations(config: PipelineConfig, scenario: ScenarioSpec,
                        catalog: ApiCatalog,
                        selection: StrategySelection | None = None
                        ) -> list[str]:
    """Every rule the configuration breaks, in stage order."""

    available: dict[str, PortType | None] = dict(scenario_values(scenario))
    outputs = [s.output for s in config.stages]
    found = []

    if config.schema_version != 1:
        found.append(f'unsupported schema_version {config.schema_version}')
    if not config.stages:
        found.append('pipeline has no stages')

    for index, stage in enumerate(config.stages, 1):
        later = set(outputs[index:])
        if stage.api not in catalog:
            found.append(f'stage {index}: unknown API id {stage.api!r}')
        else:
            if selection is not None and stage.api not in selection.apis:
                found.append(f'stage {index} ({stage.api}): API was not '
                             'selected')
            found.extend(_stage_violations(index, stage, catalog, scenario,
                                           available, later))

        if stage.output in SCENARIO_FIELDS:
            found.append(f'stage {index} ({stage.api}): output name '
                         f'{stage.output!r} shadows a scenario field')
        elif stage.output in available:
            found.append(f'stage {index} ({stage.api}): output name '
                         f'{stage.output!r} is already used')
        spec = catalog.get(stage.api)
        available[stage.output] = None if spec is None else spec.output

    producers = [i for i, s in enumerate(config.stages, 1)
                 if s.output == config.final]
    if not producers:
        found.append(f'final output {config.final!r} is not produced by any '
                     'stage')
    else:
        kind = available.get(config.final)
        if kind is not None and kind is not PortType.TRAJECTORY:
            found.append(f'final output {config.final!r} is a {kind}, a '
                         'Trajectory is required')

    return found


def validate_pipeline(config: PipelineConfig, scenario: ScenarioSpec,
                      catalog: ApiCatalog,
                      selection: StrategySelection | None = None) -> None:
    """Checks bindings, types, parameter ranges and model compatibility.

    The verdict is a pure function of the arguments. When a selection is
    given, every stage must use a selected API.

    Raises:
        PipelineValidationError: Listing every violated rule.
    """

    found = pipeline_violations(config, scenario, catalog, selection)
    if found:
        raise PipelineValidationError(found)
