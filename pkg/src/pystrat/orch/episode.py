"""The bounded refinement loop.

Each round asks the model for a strategy selection, retrieves the docs of
the selected APIs, asks for a pipeline configuration, validates and executes
it, and judges the trajectory. A failed round is summarized into a
diagnostic that the next round's prompts carry.
"""

from __future__ import annotations

import asyncio
import logging
import time
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from enum import StrEnum
from typing import Any

import numpy as np

from ..core.exceptions import (
    BackendError, BackendErrorKind, DeadlineExceeded, NumericOverflowError,
    ParseError, PipelineValidationError, StageError
)
from ..core.sid import ScenarioId
from ..dynamics import Trajectory, rollout
from ..env import (
    OutcomeReason, ScenarioSpec, TaskOutcome, check_outcome,
    render_task_description, summarize_environment
)
from ..llm.backend import ChatBackend, ChatOptions
from .catalog import ApiCatalog
from .config import PipelineConfig, StrategySelection
from .execute import execute_pipeline
from .parse import parse_pipeline, parse_selection, parse_table
from .prompts import (
    DocsMode, build_baseline_prompt, build_pipeline_prompt,
    build_selection_prompt, prompt_messages, retrieve_api_docs
)
from .validate import validate_pipeline


__all__ = [
    'MAX_ROUNDS', 'DEFAULT_TIMEOUT_S', 'REASK_AFTER', 'ErrorKind',
    'RoundRecord', 'EpisodeResult', 'diagnostic_summary', 'run_episode',
    'predict_baseline_episode', 'count_errors',
]


logger = logging.getLogger(__name__)

MAX_ROUNDS = 6
DEFAULT_TIMEOUT_S = 30.0
# consecutive pipeline-level failures before the selection is re-asked
REASK_AFTER = 2

_ABORTING = (BackendErrorKind.AUTH, BackendErrorKind.TRANSPORT,
             BackendErrorKind.RATE_LIMITED)


class ErrorKind(StrEnum):
    PARSE = 'Parse'
    VALIDATION = 'Validation'
    TIMEOUT = 'Timeout'
    TASK_FAILURE = 'TaskFailure'


@dataclass(frozen=True)
class RoundRecord:
    """What happened in one round.

    Attributes:
        index: Round number, 1-based.
        selection: The strategy selection in force, if any.
        config: The parsed pipeline, if any.
        error: The round's error kind, None on success.
        detail: The raw error message.
        violations: Every violated rule, for Validation errors.
        outcome: The judged outcome, when a trajectory was produced.
        diagnostic: The summary fed back to the model.
        wall_time: Seconds the round took.
    """

    index: int
    selection: StrategySelection | None = None
    config: PipelineConfig | None = None
    error: ErrorKind | None = None
    detail: str = ''
    violations: tuple[str, ...] = ()
    outcome: TaskOutcome | None = None
    diagnostic: str = ''
    wall_time: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            'index': self.index,
            'selection': (None if self.selection is None
                          else self.selection.to_dict()),
            'config': None if self.config is None else self.config.to_dict(),
            'error': None if self.error is None else str(self.error),
            'detail': self.detail,
            'violations': list(self.violations),
            'outcome': None if self.outcome is None else {
                'success': self.outcome.success,
                'reason': str(self.outcome.reason),
                'metric': self.outcome.metric,
                'failure_step': self.outcome.failure_step,
            },
            'diagnostic': self.diagnostic,
            'wall_time': self.wall_time,
        }


@dataclass(frozen=True, eq=False)
class EpisodeResult:
    """The result of one task attempt.

    Attributes:
        scenario_id: The scenario.
        success: Whether some round accomplished the task.
        records: One record per round played.
        outcome: The last judged outcome.
        trajectory: The last executed trajectory.
        controls: Its controls, when known.
        aborted: The backend became unavailable.
    """

    scenario_id: ScenarioId
    success: bool
    records: tuple[RoundRecord, ...]
    outcome: TaskOutcome | None = None
    trajectory: Trajectory | None = None
    controls: np.ndarray | None = None
    aborted: bool = False

    @property
    def rounds_used(self) -> int:
        return len(self.records)

    def error_counts(self) -> Counter[ErrorKind]:
        return Counter(r.error for r in self.records if r.error is not None)

    def to_dict(self) -> dict[str, Any]:
        return {
            'scenario_id': str(self.scenario_id),
            'success': self.success,
            'rounds_used': self.rounds_used,
            'aborted': self.aborted,
            'records': [r.to_dict() for r in self.records],
            'trajectory': (None if self.trajectory is None
                           else self.trajectory.to_dict()),
            'controls': (None if self.controls is None
                         else np.asarray(self.controls).tolist()),
        }


def _outcome_text(outcome: TaskOutcome) -> str:
    match outcome.reason:
        case OutcomeReason.COLLISION:
            return (f'collision with an obstacle at step '
                    f'{outcome.failure_step}')
        case OutcomeReason.OUT_OF_BOUNDS:
            return f'left the workspace at step {outcome.failure_step}'
        case OutcomeReason.GOAL_MISSED:
            return f'final goal distance {outcome.metric:.2f} m'
        case OutcomeReason.STL_VIOLATED:
            return f'STL robustness {outcome.metric:.2f}'
        case OutcomeReason.TRACKING_ERROR:
            return (f'RMS tracking error {outcome.metric:.3f} m exceeds '
                    'the 0.150 m tolerance')
        case _:
            return f'{outcome.reason} (metric {outcome.metric:.3f})'


def diagnostic_summary(record: RoundRecord) -> str:
    """One deterministic paragraph naming the error kind, the offending
    element and, for task failures, the outcome metric."""

    match record.error:
        case None:
            return f'Round {record.index} succeeded.'
        case ErrorKind.PARSE:
            return (f'Parse error: {record.detail}. Answer with exactly one '
                    'fenced block in the requested format.')
        case ErrorKind.VALIDATION:
            rules = record.violations or (record.detail,)
            return (f'Validation error: the pipeline breaks {len(rules)} '
                    f'rule(s): ' + '; '.join(rules) + '.')
        case ErrorKind.TIMEOUT:
            return (f'Timeout: {record.detail}. Use faster APIs or smaller '
                    'iteration budgets.')
        case ErrorKind.TASK_FAILURE if record.outcome is not None:
            text = _outcome_text(record.outcome)
            apis = ''
            if record.config is not None:
                apis = f' with pipeline {" -> ".join(record.config.apis)}'
            return (f'TaskFailure: the executed trajectory{apis} failed '
                    f'the task: {text}.')
        case _:
            return f'TaskFailure: {record.detail}.'


def _finish(record: RoundRecord, started: float) -> RoundRecord:
    record = replace(record, wall_time=time.perf_counter() - started)
    return replace(record, diagnostic=diagnostic_summary(record))


async def _ask(backend: ChatBackend, prompt: str, options: ChatOptions
               ) -> str:
    return await backend.complete(prompt_messages(prompt), options)


@dataclass
class _Loop:
    """Per-episode state of the refinement loop."""

    scenario: ScenarioSpec
    backend: ChatBackend
    catalog: ApiCatalog
    options: ChatOptions
    timeout_s: float
    docs_mode: DocsMode
    task: str = ''
    env: str = ''
    selection: StrategySelection | None = None
    pipeline_failures: int = 0
    records: list[RoundRecord] = field(default_factory=list)
    trajectory: Trajectory | None = None
    controls: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.task = render_task_description(self.scenario)
        self.env = summarize_environment(self.scenario)

    async def play(self, index: int) -> RoundRecord:
        """Plays one round; raises BackendError when the backend fails."""

        if self.selection is None or self.pipeline_failures >= REASK_AFTER:
            self.selection = None
            self.pipeline_failures = 0
            text = await _ask(self.backend, build_selection_prompt(
                self.task, self.env, self.catalog, self.records,
                self.docs_mode
            ), self.options)
            try:
                self.selection = parse_selection(text, self.catalog)
            except ParseError as e:
                return RoundRecord(index, None, error=ErrorKind.PARSE,
                                   detail=f'selection: {e}')

        record = RoundRecord(index, self.selection)
        docs = retrieve_api_docs(self.selection, self.catalog,
                                 self.docs_mode)
        text = await _ask(self.backend, build_pipeline_prompt(
            self.task, self.env, self.selection, docs, self.records,
            self.catalog
        ), self.options)

        try:
            config = parse_pipeline(text, self.catalog)
        except ParseError as e:
            return replace(record, error=ErrorKind.PARSE,
                           detail=f'pipeline: {e}')
        record = replace(record, config=config)

        try:
            validate_pipeline(config, self.scenario, self.catalog,
                              self.selection)
            traj, controls = await asyncio.to_thread(
                execute_pipeline, config, self.scenario, self.timeout_s,
                self.catalog
            )
        except PipelineValidationError as e:
            return replace(record, error=ErrorKind.VALIDATION,
                           detail=str(e), violations=e.violations)
        except DeadlineExceeded:
            return replace(record, error=ErrorKind.TIMEOUT,
                           detail=f'the pipeline exceeded its '
                                  f'{self.timeout_s:g} s budget')
        except StageError as e:
            return replace(record, error=ErrorKind.TASK_FAILURE,
                           detail=str(e))

        self.trajectory, self.controls = traj, controls
        outcome = check_outcome(self.scenario, traj, controls)
        if outcome.success:
            return replace(record, outcome=outcome)
        return replace(record, error=ErrorKind.TASK_FAILURE, outcome=outcome,
                       detail=str(outcome.reason))


async def run_episode(scenario: ScenarioSpec, backend: ChatBackend,
                      max_rounds: int = MAX_ROUNDS,
                      timeout_s: float = DEFAULT_TIMEOUT_S, *,
                      catalog: ApiCatalog | None = None,
                      docs_mode: DocsMode = DocsMode.ON_DEMAND,
                      options: ChatOptions | None = None) -> EpisodeResult:
    """Runs the refinement loop on one scenario.

    The selection is re-asked only after it failed to parse or after
    REASK_AFTER consecutive pipeline-level failures; otherwise later rounds
    reuse it. Failures are data: the result records one ErrorKind per
    failed round. An Auth, Transport or RateLimited backend failure ends the
    episode early with `aborted` set; the backend's BadResponse and Timeout
    count as Parse errors of the round.

    Arguments:
        scenario: The task.
        backend: The chat backend.
        max_rounds: Round budget, at least 1.
        timeout_s: Wall-clock budget of each pipeline execution.
        catalog: The API catalog, the standard one by default.
        docs_mode: When full API docs are provided.
        options: Chat options for every request.

    Returns:
        The EpisodeResult.
    """

    if max_rounds < 1:
        raise ValueError(f'Invalid round budget {max_rounds}')

    loop = _Loop(scenario, backend, catalog or ApiCatalog.build(),
                 options or ChatOptions(), timeout_s, DocsMode(docs_mode))
    success = aborted = False

    for index in range(1, max_rounds + 1):
        started = time.perf_counter()
        try:
            record = await loop.play(index)
        except BackendError as e:
            aborted = e.kind in _ABORTING
            record = RoundRecord(index, loop.selection, error=ErrorKind.PARSE,
                                 detail=f'backend {e.kind}: {e.detail}')

        record = _finish(record, started)
        loop.records.append(record)
        logger.info('%s round %d: %s', scenario.id, index,
                    record.error or 'success')

        if record.error is None:
            success = True
            break
        if loop.selection is not None:
            loop.pipeline_failures += 1
        if aborted:
            logger.error('%s: backend unavailable, episode aborted',
                         scenario.id)
            break

    last = loop.records[-1]
    return EpisodeResult(scenario.id, success, tuple(loop.records),
                         last.outcome, loop.trajectory, loop.controls,
                         aborted)


def _table_trajectory(scenario: ScenarioSpec, table: np.ndarray
                      ) -> tuple[Trajectory, np.ndarray | None]:
    """Interprets a predicted table as controls or as states.

    Raises:
        PipelineValidationError: On a table of the wrong shape, controls
            outside the bounds or states not starting at x0.
    """

    model, H = scenario.model, scenario.horizon
    if table.shape == (H, model.m):
        low = np.any(table < model.lower - 1e-9, axis=1)
        high = np.any(table > model.upper + 1e-9, axis=1)
        bad = np.flatnonzero(low | high)
        if bad.size:
            raise PipelineValidationError([
                f'control row {bad[0] + 1} exceeds the control bounds'
            ])
        return rollout(model, scenario.x0, table, scenario.dt), table

    if table.shape == (H + 1, model.n):
        if not np.allclose(table[0], scenario.x0, atol=1e-3):
            raise PipelineValidationError([
                'the first state row must be the initial state'
            ])
        return Trajectory(table, scenario.dt), None

    raise PipelineValidationError([
        f'table has {table.shape[0]} rows of {table.shape[1]} values; '
        f'expected {H} rows of {model.m} controls or {H + 1} rows of '
        f'{model.n} states'
    ])


async def predict_baseline_episode(scenario: ScenarioSpec,
                                   backend: ChatBackend,
                                   max_rounds: int = MAX_ROUNDS, *,
                                   options: ChatOptions | None = None
                                   ) -> EpisodeResult:
    """The direct-prediction baseline: the model emits the controls or the
    trajectory as a numeric table, judged and refined like run_episode."""

    if max_rounds < 1:
        raise ValueError(f'Invalid round budget {max_rounds}')

    options = options or ChatOptions()
    task = render_task_description(scenario)
    env = summarize_environment(scenario)
    records: list[RoundRecord] = []
    trajectory = controls = None
    success = aborted = False

    for index in range(1, max_rounds + 1):
        started = time.perf_counter()
        record = RoundRecord(index)
        try:
            text = await _ask(backend, build_baseline_prompt(
                task, env, scenario, records
            ), options)
            trajectory, controls = _table_trajectory(scenario,
                                                     parse_table(text))
            outcome = check_outcome(scenario, trajectory, controls)
            record = replace(record, outcome=outcome)
            if not outcome.success:
                record = replace(record, error=ErrorKind.TASK_FAILURE,
                                 detail=str(outcome.reason))
        except BackendError as e:
            aborted = e.kind in _ABORTING
            record = replace(record, error=ErrorKind.PARSE,
                             detail=f'backend {e.kind}: {e.detail}')
        except ParseError as e:
            record = replace(record, error=ErrorKind.PARSE, detail=str(e))
        except PipelineValidationError as e:
            record = replace(record, error=ErrorKind.VALIDATION,
                             detail=str(e), violations=e.violations)
        except NumericOverflowError as e:
            record = replace(record, error=ErrorKind.TASK_FAILURE,
                             detail=f'rollout diverged: {e}')

        record = _finish(record, started)
        records.append(record)
        if record.error is None:
            success = True
            break
        if aborted:
            break

    last = records[-1]
    return EpisodeResult(scenario.id, success, tuple(records), last.outcome,
                         trajectory, controls, aborted)


def count_errors(results: Sequence[EpisodeResult]) -> Counter[ErrorKind]:
    total: Counter[ErrorKind] = Counter()
    for result in results:
        total.update(result.error_counts())
    return total
