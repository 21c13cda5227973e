"""Batch runs, aggregation and ablation sweeps."""

from __future__ import annotations

import asyncio
import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from typing import Any, Self

from ..core.sid import ScenarioId
from ..env.scenario import ScenarioKind, generate_scenario
from ..lib.aio import WorkerPool
from ..llm import ChatBackend
from ..orch import (
    ApiCatalog, EpisodeResult, ErrorKind, predict_baseline_episode,
    run_episode
)
from .config import BatchConfig, Setting


__all__ = [
    'REPORT_SCHEMA_VERSION', 'ROW_FIELDS', 'EpisodeRow', 'KindSummary',
    'BatchReport', 'aggregate', 'run_batch', 'run_ablation',
    'comparison_table',
]


logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1

ROW_FIELDS = (
    'scenario_id', 'kind', 'seed', 'success', 'rounds_used', 'parse',
    'validation', 'timeout', 'task_failure', 'reason', 'metric',
)

_ERROR_FIELDS = {
    ErrorKind.PARSE: 'parse',
    ErrorKind.VALIDATION: 'validation',
    ErrorKind.TIMEOUT: 'timeout',
    ErrorKind.TASK_FAILURE: 'task_failure',
}


@dataclass(frozen=True, order=True)
class EpisodeRow:
    """One line of the per-episode table.

    Attributes:
        scenario_id: The scenario.
        success: Whether the episode succeeded.
        rounds_used: Rounds played.
        errors: Count per ErrorKind.
        reason: Last judged outcome reason, '' when none was judged.
        metric: Its metric, None when none was judged.
    """

    scenario_id: ScenarioId
    success: bool = field(compare=False)
    rounds_used: int = field(compare=False)
    errors: Mapping[ErrorKind, int] = field(compare=False,
                                            default_factory=dict)
    reason: str = field(compare=False, default='')
    metric: float | None = field(compare=False, default=None)

    @classmethod
    def from_result(cls, result: EpisodeResult) -> Self:
        outcome = result.outcome
        return cls(
            result.scenario_id, result.success, result.rounds_used,
            dict(result.error_counts()),
            '' if outcome is None else str(outcome.reason),
            None if outcome is None else float(outcome.metric),
        )

    @classmethod
    def from_csv(cls, row: Mapping[str, str]) -> Self:
        return cls(
            ScenarioId.from_str(row['scenario_id']),
            row['success'] == 'true',
            int(row['rounds_used']),
            {kind: int(row[name]) for kind, name in _ERROR_FIELDS.items()
             if int(row[name])},
            row['reason'],
            float(row['metric']) if row['metric'] else None,
        )

    @property
    def kind(self) -> ScenarioKind:
        return ScenarioKind(self.scenario_id.kind)

    def to_csv(self) -> dict[str, str]:
        row = {
            'scenario_id': str(self.scenario_id),
            'kind': str(self.kind),
            'seed': str(self.scenario_id.seed),
            'success': 'true' if self.success else 'false',
            'rounds_used': str(self.rounds_used),
            'reason': self.reason,
            'metric': '' if self.metric is None else repr(self.metric),
        }
        for kind, name in _ERROR_FIELDS.items():
            row[name] = str(self.errors.get(kind, 0))
        return row


@dataclass(frozen=True)
class KindSummary:
    """Aggregates of one scenario kind.

    Attributes:
        kind: The scenario kind.
        episodes: Number of episodes.
        successes: Number of successful episodes.
        avg_rounds: Mean rounds over successful episodes, None without any.
        cumulative: Share of episodes succeeded within r rounds, for
            r = 1 .. max_rounds.
        errors: Recorded errors per ErrorKind.
    """

    kind: ScenarioKind
    episodes: int
    successes: int
    avg_rounds: float | None
    cumulative: tuple[float, ...]
    errors: Mapping[ErrorKind, int]

    @property
    def success_rate(self) -> float:
        return self.successes / self.episodes if self.episodes else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            'kind': str(self.kind),
            'episodes': self.episodes,
            'successes': self.successes,
            'success_rate': self.success_rate,
            'avg_rounds': self.avg_rounds,
            'cumulative_success': list(self.cumulative),
            'errors': {str(k): self.errors.get(k, 0) for k in ErrorKind},
        }


def aggregate(rows: Iterable[EpisodeRow], max_rounds: int
              ) -> dict[ScenarioKind, KindSummary]:
    """Per-kind summaries; the result does not depend on row order."""

    by_kind: dict[ScenarioKind, list[EpisodeRow]] = {}
    for row in sorted(rows):
        by_kind.setdefault(row.kind, []).append(row)

    summaries = {}
    for kind in sorted(by_kind, key=list(ScenarioKind).index):
        group = by_kind[kind]
        wins = [r.rounds_used for r in group if r.success]
        cumulative = tuple(
            sum(1 for w in wins if w <= r) / len(group)
            for r in range(1, max_rounds + 1)
        )
        errors = {k: sum(r.errors.get(k, 0) for r in group)
                  for k in ErrorKind}
        summaries[kind] = KindSummary(
            kind, len(group), len(wins),
            sum(wins) / len(wins) if wins else None, cumulative, errors
        )
    return summaries


@dataclass(frozen=True, eq=False)
class BatchReport:
    """The outcome of a batch.

    Attributes:
        rows: Per-episode rows, sorted by scenario.
        summaries: Per-kind aggregates.
        max_rounds: The round budget.
        complete: False when the batch was aborted.
        setting: The ablation setting, if any.
        results: Full episode results by scenario, for emission.
    """

    rows: tuple[EpisodeRow, ...]
    summaries: Mapping[ScenarioKind, KindSummary]
    max_rounds: int
    complete: bool = True
    setting: Setting | None = None
    results: Mapping[ScenarioId, EpisodeResult] = field(default_factory=dict)

    @classmethod
    def build(cls, rows: Iterable[EpisodeRow], max_rounds: int,
              **kwargs: Any) -> Self:
        rows = tuple(sorted(rows))
        return cls(rows, aggregate(rows, max_rounds), max_rounds, **kwargs)

    def to_dict(self) -> dict[str, Any]:
        data = {
            'schema_version': REPORT_SCHEMA_VERSION,
            'complete': self.complete,
            'max_rounds': self.max_rounds,
            'episodes': len(self.rows),
            'avg_rounds_over': 'successful episodes',
            'kinds': {str(k): s.to_dict() for k, s in self.summaries.items()},
        }
        if self.setting is not None:
            data['setting'] = {'temperature': self.setting.temperature,
                               'model': self.setting.model,
                               'docs_mode': str(self.setting.docs_mode)}
        return data


async def _episode(config: BatchConfig, sid: ScenarioId,
                   backend: ChatBackend | None, catalog: ApiCatalog
                   ) -> EpisodeResult:
    scenario = await asyncio.to_thread(generate_scenario, sid.kind, sid.seed)
    own = backend is None
    if own:
        backend = config.backend.create(catalog, config.model)
    logger.info('Episode %s started (seed %d)', sid, sid.seed)

    try:
        if config.baseline:
            return await predict_baseline_episode(
                scenario, backend, config.max_rounds, options=config.options
            )
        return await run_episode(
            scenario, backend, config.max_rounds, config.timeout_s,
            catalog=catalog, docs_mode=config.docs_mode,
            options=config.options
        )
    finally:
        if own:
            await backend.aclose()


async def run_batch(config: BatchConfig, *, catalog: ApiCatalog | None = None,
                    backend: ChatBackend | None = None,
                    setting: Setting | None = None) -> BatchReport:
    """Runs every kind of the config over seeds base .. base + N - 1.

    Episodes run `parallelism` at a time. When an episode finds the backend
    unavailable, episodes not yet started are skipped and the report is
    flagged incomplete; finished episodes are kept, the aborted one is not.

    Arguments:
        config: The batch.
        catalog: The API catalog, the standard one by default.
        backend: A shared backend; built from config.backend when None.
        setting: Recorded in the report.

    Raises:
        BackendError: Auth, when an HTTP backend has no API key.
    """

    catalog = catalog or ApiCatalog.build()
    shared = backend
    if shared is None and not config.backend.per_episode:
        shared = config.backend.create(catalog, config.model)

    pool = WorkerPool.build(config.parallelism)
    sids = [ScenarioId(str(kind), config.seed_base + i)
            for kind in config.kinds for i in range(config.experiments)]

    async def job(sid: ScenarioId) -> EpisodeResult:
        result = await _episode(config, sid, shared, catalog)
        if result.aborted:
            logger.error('Backend unavailable during %s, aborting the batch',
                         sid)
            pool.abort.set()
        else:
            logger.info('Episode %s: %s after %d round(s)', sid,
                        'success' if result.success else 'failure',
                        result.rounds_used)
        return result

    try:
        results = await pool.map([lambda s=sid: job(s) for sid in sids])
    finally:
        if backend is None and shared is not None:
            await shared.aclose()

    done = {r.scenario_id: r for r in results
            if r is not None and not r.aborted}
    complete = len(done) == len(sids)
    report = BatchReport.build(
        (EpisodeRow.from_result(r) for r in done.values()),
        config.max_rounds, complete=complete, setting=setting, results=done
    )
    if not complete:
        logger.error('Batch incomplete: %d of %d episodes finished',
                     len(done), len(sids))
    return report


async def run_ablation(config: BatchConfig, *,
                       catalog: ApiCatalog | None = None,
                       backend: ChatBackend | None = None
                       ) -> list[tuple[Setting, BatchReport]]:
    """One batch per setting of the config's ablation sweep.

    The sweep stops after the first incomplete batch.

    Raises:
        ValueError: If the ablation spec is empty.
    """

    if config.ablation.is_empty:
        raise ValueError('The ablation sweep declares no settings')

    reports = []
    for setting in config.ablation.settings(config):
        logger.info('Ablation setting %s', setting.label)
        batch = replace(config, temperature=setting.temperature,
                        model=setting.model, docs_mode=setting.docs_mode)
        report = await run_batch(batch, catalog=catalog, backend=backend,
                                 setting=setting)
        reports.append((setting, report))
        if not report.complete:
            break
    return reports


def comparison_table(reports: Sequence[tuple[Setting, BatchReport]]
                     ) -> list[dict[str, str]]:
    """One row per setting and kind, for the ablation comparison CSV."""

    table = []
    for setting, report in reports:
        for kind, summary in report.summaries.items():
            table.append({
                'temperature': f'{setting.temperature:g}',
                'model': setting.model or '',
                'docs_mode': str(setting.docs_mode),
                'kind': str(kind),
                'episodes': str(summary.episodes),
                'success_rate': f'{summary.success_rate:.4f}',
                'avg_rounds': ('' if summary.avg_rounds is None
                               else f'{summary.avg_rounds:.4f}'),
                'complete': 'true' if report.complete else 'false',
            })
    return table
