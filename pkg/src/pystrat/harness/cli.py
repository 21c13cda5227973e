"""The `pystrat` command line.

Subcommands:
    scenario gen     Generate a scenario and print or save it.
    scenario show    Describe a scenario the way prompts do.
    episode run      Run one episode.
    batch run        Run a batch and write its outputs.
    ablate run       Run one batch per ablation setting.
    report render    Recompute and redraw a report from its episode table.

Exit codes are 0 for a complete run, 2 when the backend became unavailable
and the results are partial, and 1 for usage errors.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
from collections.abc import Sequence
from dataclasses import replace
from pathlib import Path
from typing import NoReturn

from ..core.exceptions import BackendError, OutputError
from ..env import (
    ScenarioKind, ScenarioSpec, dump_scenario, generate_scenario,
    load_scenario, render_task_description, summarize_environment
)
from ..orch import (
    ApiCatalog, DocsMode, EpisodeResult, predict_baseline_episode, run_episode
)
from .batch import comparison_table, run_ablation, run_batch
from .config import AblationSpec, BackendKind, BatchConfig, load_config
from .output import atomic_write, emit_comparison, emit_outputs
from .report import format_report, load_report


__all__ = ['EXIT_OK', 'EXIT_USAGE', 'EXIT_PARTIAL', 'build_parser', 'main']


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARTIAL = 2

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


class UsageError(Exception):
    """Invalid arguments or configuration."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f'{self.prog}: error: {message}\n')


def _add_scenario_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--kind', choices=[str(k) for k in ScenarioKind])
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--scenario', metavar='FILE',
                        help='scenario file instead of --kind and --seed')


def _add_batch_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', metavar='FILE',
                        help='TOML batch configuration; flags override it')
    parser.add_argument('--kinds', nargs='+',
                        choices=[str(k) for k in ScenarioKind])
    parser.add_argument('--experiments', type=int,
                        help='episodes per scenario kind')
    parser.add_argument('--seed-base', type=int)
    parser.add_argument('--max-rounds', type=int)
    parser.add_argument('--timeout', dest='timeout_s', type=float,
                        help='pipeline budget in seconds')
    parser.add_argument('--temperature', type=float)
    parser.add_argument('--model')
    parser.add_argument('--docs-mode', choices=[str(d) for d in DocsMode])
    parser.add_argument('--baseline', action=argparse.BooleanOptionalAction,
                        help='predict trajectories directly')
    parser.add_argument('--out-dir')
    parser.add_argument('--parallelism', type=int)

    backend = parser.add_argument_group('backend')
    backend.add_argument('--backend', choices=[str(k) for k in BackendKind])
    backend.add_argument('--fault-p', type=float,
                         help='malformed-response probability (rules)')
    backend.add_argument('--fault-seed', type=int)
    backend.add_argument('--script', metavar='FILE',
                         help='transcript file (scripted)')
    backend.add_argument('--endpoint', help='chat completions URL (http)')
    backend.add_argument('--limit', type=int,
                         help='requests in flight (http)')


def _add_ablation_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--temperatures', nargs='+', type=float)
    parser.add_argument('--models', nargs='+')
    parser.add_argument('--docs-modes', nargs='+',
                        choices=[str(d) for d in DocsMode])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='pystrat', description='Language-model strategy '
                     'selection for robot planning and control tasks.')
    parser.add_argument('--log-level', default='WARNING',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    commands = parser.add_subparsers(dest='command', required=True)

    scenario = commands.add_parser('scenario', help='scenario worlds')
    scenario_cmds = scenario.add_subparsers(dest='action', required=True)
    gen = scenario_cmds.add_parser('gen', help='generate a scenario')
    gen.add_argument('--kind', required=True,
                     choices=[str(k) for k in ScenarioKind])
    gen.add_argument('--seed', type=int, default=0)
    gen.add_argument('--out', metavar='FILE', help='write here, not stdout')
    gen.set_defaults(handler=_scenario_gen)
    show = scenario_cmds.add_parser('show', help='describe a scenario')
    _add_scenario_args(show)
    show.set_defaults(handler=_scenario_show)

    episode = commands.add_parser('episode', help='single episodes')
    episode_cmds = episode.add_subparsers(dest='action', required=True)
    run = episode_cmds.add_parser('run', help='run one episode')
    _add_scenario_args(run)
    _add_batch_args(run)
    run.add_argument('--out', metavar='FILE',
                     help='write the episode record here')
    run.set_defaults(handler=_episode_run)

    batch = commands.add_parser('batch', help='batches of episodes')
    batch_cmds = batch.add_subparsers(dest='action', required=True)
    run = batch_cmds.add_parser('run', help='run a batch')
    _add_batch_args(run)
    run.add_argument('--no-panels', dest='panels', action='store_false',
                     help='skip the per-episode plots')
    run.set_defaults(handler=_batch_run)

    ablate = commands.add_parser('ablate', help='ablation sweeps')
    ablate_cmds = ablate.add_subparsers(dest='action', required=True)
    run = ablate_cmds.add_parser('run', help='run an ablation sweep')
    _add_batch_args(run)
    _add_ablation_args(run)
    run.set_defaults(handler=_ablate_run)

    report = commands.add_parser('report', help='reports')
    report_cmds = report.add_subparsers(dest='action', required=True)
    render = report_cmds.add_parser('render', help='recompute a report')
    render.add_argument('directory', help='output directory of a batch')
    render.add_argument('--out-dir', help='write here instead')
    render.set_defaults(handler=_report_render)

    return parser


def _batch_config(args: argparse.Namespace) -> BatchConfig:
    config = load_config(args.config) if args.config else BatchConfig()

    backend = replace(config.backend, **{
        k: v for k, v in (('kind', args.backend), ('fault_p', args.fault_p),
                          ('fault_seed', args.fault_seed),
                          ('script', args.script),
                          ('endpoint', args.endpoint), ('limit', args.limit))
        if v is not None
    })
    ablation = config.ablation
    if getattr(args, 'temperatures', None) or getattr(args, 'models', None) \
            or getattr(args, 'docs_modes', None):
        ablation = AblationSpec(
            tuple(args.temperatures or ablation.temperatures),
            tuple(args.models or ablation.models),
            tuple(args.docs_modes or ablation.docs_modes),
        )

    return config.updated(
        kinds=tuple(args.kinds) if args.kinds else None,
        experiments=args.experiments, seed_base=args.seed_base,
        max_rounds=args.max_rounds, timeout_s=args.timeout_s,
        temperature=args.temperature, model=args.model,
        docs_mode=args.docs_mode, baseline=args.baseline,
        out_dir=args.out_dir, parallelism=args.parallelism,
        backend=backend, ablation=ablation,
    )


def _scenario(args: argparse.Namespace) -> ScenarioSpec:
    if args.scenario:
        return load_scenario(args.scenario)
    if args.kind is None:
        raise UsageError('either --kind or --scenario is required')
    return generate_scenario(args.kind, args.seed)


def _scenario_gen(args: argparse.Namespace) -> int:
    spec = generate_scenario(args.kind, args.seed)
    if args.out:
        dump_scenario(spec, args.out)
        logger.info('Wrote %s to %s', spec.id, args.out)
    else:
        print(json.dumps(spec.to_dict(), indent=2))
    return EXIT_OK


def _scenario_show(args: argparse.Namespace) -> int:
    spec = _scenario(args)
    print(render_task_description(spec))
    print()
    print(summarize_environment(spec))
    return EXIT_OK


def _episode_run(args: argparse.Namespace) -> int:
    spec = _scenario(args)
    config = _batch_config(args)

    async def run() -> EpisodeResult:
        catalog = ApiCatalog.build()
        backend = config.backend.create(catalog, config.model)
        try:
            if config.baseline:
                result = await predict_baseline_episode(
                    spec, backend, config.max_rounds, options=config.options
                )
            else:
                result = await run_episode(
                    spec, backend, config.max_rounds, config.timeout_s,
                    catalog=catalog, docs_mode=config.docs_mode,
                    options=config.options
                )
        finally:
            await backend.aclose()
        return result

    result = asyncio.run(run())
    for record in result.records:
        print(f'round {record.index}: {record.diagnostic}')
    print(f'{result.scenario_id}: '
          f'{"success" if result.success else "failure"} after '
          f'{result.rounds_used} round(s)')
    if args.out:
        atomic_write(args.out, json.dumps(result.to_dict(), indent=2) + '\n')
    return EXIT_PARTIAL if result.aborted else EXIT_OK


def _batch_run(args: argparse.Namespace) -> int:
    config = _batch_config(args)
    report = asyncio.run(run_batch(config))
    emit_outputs(report, config.out_dir, panels=args.panels)
    print(format_report(report))
    return EXIT_OK if report.complete else EXIT_PARTIAL


def _label_dir(index: int, label: str) -> str:
    safe = ''.join(c if c.isalnum() or c in '.=_' else '_' for c in label)
    return f'{index:02d}-{safe}'


def _ablate_run(args: argparse.Namespace) -> int:
    config = _batch_config(args)
    if config.ablation.is_empty:
        raise UsageError('the ablation sweep declares no settings')

    reports = asyncio.run(run_ablation(config))
    out = Path(config.out_dir)
    for i, (setting, report) in enumerate(reports):
        emit_outputs(report, out / _label_dir(i, setting.label),
                     panels=False)
        print(f'== {setting.label}')
        print(format_report(report))
    emit_comparison(comparison_table(reports), out)

    complete = all(r.complete for _, r in reports)
    return EXIT_OK if complete else EXIT_PARTIAL


def _report_render(args: argparse.Namespace) -> int:
    report = load_report(args.directory)
    emit_outputs(report, args.out_dir or args.directory, panels=False)
    print(format_report(report))
    return EXIT_OK if report.complete else EXIT_PARTIAL


def main(argv: Sequence[str] | None = None) -> int:
    """Runs the command line.

    Returns:
        The exit code.
    """

    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT)

    try:
        return args.handler(args)
    except (UsageError, ValueError, FileNotFoundError) as e:
        print(f'pystrat: error: {e}', file=sys.stderr)
        return EXIT_USAGE
    except BackendError as e:
        print(f'pystrat: backend error: {e}', file=sys.stderr)
        return EXIT_USAGE
    except OutputError as e:
        print(f'pystrat: cannot write {e.path}: {e}', file=sys.stderr)
        return EXIT_USAGE
