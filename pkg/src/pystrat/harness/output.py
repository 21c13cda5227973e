"""Writing batch results: tables, the aggregate report, trajectories and
plots.

Every file is written to a temporary sibling first and renamed into place,
so a re-run into the same directory never leaves a half-written file.
"""

from __future__ import annotations

import contextlib
import csv
import io
import json
import logging
import os
import tempfile
from collections.abc import Iterable, Mapping, Sequence
from os import PathLike
from pathlib import Path
from typing import Any

import matplotlib
import numpy as np
from matplotlib.axes import Axes
from matplotlib.figure import Figure
from matplotlib.patches import Circle as CirclePatch, Rectangle

from ..core.exceptions import OutputError
from ..dynamics.trajectory import Trajectory
from ..env.geometry import Circle, Rect
from ..env.scenario import ScenarioSpec, generate_scenario
from ..orch import EpisodeResult, ErrorKind
from .batch import REPORT_SCHEMA_VERSION, ROW_FIELDS, BatchReport, EpisodeRow


__all__ = [
    'EPISODES_FILE', 'REPORT_FILE', 'SUMMARY_PLOT', 'ERRORS_PLOT',
    'TRAJECTORY_DIR', 'PANEL_DIR', 'COMPARISON_FILE', 'atomic_write',
    'rows_to_csv', 'plot_summary', 'plot_errors', 'plot_episode',
    'emit_outputs', 'emit_comparison',
]


logger = logging.getLogger(__name__)

EPISODES_FILE = 'episodes.csv'
REPORT_FILE = 'report.json'
SUMMARY_PLOT = 'summary.svg'
ERRORS_PLOT = 'errors.svg'
TRAJECTORY_DIR = 'trajectories'
PANEL_DIR = 'panels'
COMPARISON_FILE = 'comparison.csv'

# Fixed ids and no timestamp keep the SVG output reproducible.
_SVG_RC = {'svg.hashsalt': 'pystrat', 'svg.fonttype': 'none'}


def atomic_write(path: str | PathLike, data: bytes | str) -> Path:
    """Writes data to path through a temporary file and a rename.

    Raises:
        OutputError: If the file cannot be written.
    """

    path = Path(path)
    if isinstance(data, str):
        data = data.encode('utf-8')

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f'.{path.name}.',
                                   suffix='.tmp')
        try:
            with os.fdopen(fd, 'wb') as f:
                f.write(data)
            os.replace(tmp, path)
        except BaseException:
            with contextlib.suppress(OSError):
                os.unlink(tmp)
            raise
    except OSError as e:
        raise OutputError(str(path), e.strerror or str(e)) from e

    logger.debug('Wrote %s', path)
    return path


def _csv(fields: Sequence[str], rows: Iterable[Mapping[str, str]]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=fields, lineterminator='\n')
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def rows_to_csv(rows: Iterable[EpisodeRow]) -> str:
    """The per-episode table, one line per episode under a header line."""

    return _csv(ROW_FIELDS, (row.to_csv() for row in rows))


def _svg(fig: Figure) -> bytes:
    buffer = io.BytesIO()
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(buffer, format='svg', metadata={'Date': None})
    return buffer.getvalue()


def plot_summary(report: BatchReport) -> Figure:
    """Success rate per scenario kind next to the cumulative success rate
    per query round."""

    fig = Figure(figsize=(11.0, 4.5), layout='constrained')
    bars, curves = fig.subplots(1, 2)

    names = [str(k) for k in report.summaries]
    rates = [s.success_rate for s in report.summaries.values()]
    bars.bar(names, rates, color='tab:blue')
    bars.set_ylim(0.0, 1.05)
    bars.set_ylabel('success rate')
    bars.set_title('Success rate')
    bars.tick_params(axis='x', labelrotation=20)

    rounds = np.arange(1, report.max_rounds + 1)
    for kind, summary in report.summaries.items():
        curves.plot(rounds, summary.cumulative, marker='o', label=str(kind))
    curves.set_xlim(0.5, report.max_rounds + 0.5)
    curves.set_ylim(0.0, 1.05)
    curves.set_xticks(rounds)
    curves.set_xlabel('query rounds')
    curves.set_ylabel('cumulative success rate')
    curves.set_title('Success rate by round')
    if report.summaries:
        curves.legend(loc='lower right')
    return fig


def plot_errors(report: BatchReport) -> Figure:
    """Recorded errors per scenario kind, one bar per error kind."""

    fig = Figure(figsize=(8.0, 4.5), layout='constrained')
    ax = fig.subplots()

    x = np.arange(len(report.summaries))
    width = 0.8 / len(ErrorKind)
    for i, error in enumerate(ErrorKind):
        counts = [s.errors.get(error, 0) for s in report.summaries.values()]
        ax.bar(x + (i - (len(ErrorKind) - 1) / 2) * width, counts, width,
               label=str(error))
    ax.set_xticks(x, [str(k) for k in report.summaries])
    ax.set_ylabel('errors')
    ax.set_title('Errors by kind')
    ax.legend()
    return fig


def _draw_obstacle(ax: Axes, obstacle: Circle | Rect) -> None:
    style = dict(facecolor='0.55', edgecolor='0.3')
    if isinstance(obstacle, Circle):
        ax.add_patch(CirclePatch(obstacle.center, obstacle.radius, **style))
    else:
        w, h = obstacle.hi - obstacle.lo
        ax.add_patch(Rectangle(obstacle.lo, w, h, **style))


def plot_episode(spec: ScenarioSpec, trajectory: Trajectory | None,
                 title: str) -> Figure:
    """The workspace with obstacles, goal or regions, the reference and the
    executed trajectory."""

    fig = Figure(figsize=(5.5, 5.5), layout='constrained')
    ax = fig.subplots()
    ws = spec.workspace

    w, h = ws.hi - ws.lo
    ax.add_patch(Rectangle(ws.lo, w, h, fill=False, edgecolor='black'))
    for obstacle in spec.obstacles:
        _draw_obstacle(ax, obstacle)
    for name, rect in spec.stl_regions.items():
        rw, rh = rect.hi - rect.lo
        ax.add_patch(Rectangle(rect.lo, rw, rh, alpha=0.25,
                               facecolor='tab:orange', edgecolor='tab:orange'))
        ax.annotate(name, rect.centroid, ha='center', va='center',
                    fontsize=8)
    if spec.goal is not None:
        ax.add_patch(CirclePatch(spec.goal.center, spec.goal.radius,
                                 alpha=0.35, facecolor='tab:green',
                                 label='goal'))
    if spec.reference is not None:
        ref = spec.reference.positions
        ax.plot(ref[:, 0], ref[:, 1], '--', color='0.4', label='reference')

    ax.plot(*spec.x0[:2], 'o', color='tab:blue', label='start')
    if trajectory is not None:
        pos = trajectory.positions
        ax.plot(pos[:, 0], pos[:, 1], color='tab:red', label='trajectory')

    margin = 0.05 * ws.diameter
    ax.set_xlim(ws.lo[0] - margin, ws.hi[0] + margin)
    ax.set_ylim(ws.lo[1] - margin, ws.hi[1] + margin)
    ax.set_aspect('equal', adjustable='box')
    ax.set_xlabel('x [m]')
    ax.set_ylabel('y [m]')
    ax.set_title(title)
    ax.legend(loc='upper right', fontsize=8)
    return fig


def _trajectory_dump(result: EpisodeResult) -> dict[str, Any]:
    outcome = result.outcome
    return {
        'schema_version': REPORT_SCHEMA_VERSION,
        'scenario_id': str(result.scenario_id),
        'rounds_used': result.rounds_used,
        'outcome': None if outcome is None else {
            'success': outcome.success,
            'reason': str(outcome.reason),
            'metric': outcome.metric,
        },
        'trajectory': result.trajectory.to_dict(),
        'controls': (None if result.controls is None
                     else np.asarray(result.controls).tolist()),
    }


def _json(data: Any) -> str:
    return json.dumps(data, indent=2) + '\n'


def emit_outputs(report: BatchReport, out_dir: str | PathLike,
                 *, panels: bool = True) -> list[Path]:
    """Writes the results of a batch.

    The directory receives the per-episode table, the aggregate report, the
    summary and error plots, one trajectory dump per successful episode
    and, with panels set, one workspace plot per episode.

    Arguments:
        report: The batch report.
        out_dir: The output directory, created if missing.
        panels: Whether to draw per-episode panels.

    Returns:
        The written files.

    Raises:
        OutputError: If a file cannot be written.
    """

    out = Path(out_dir)
    written = [
        atomic_write(out / EPISODES_FILE, rows_to_csv(report.rows)),
        atomic_write(out / REPORT_FILE, _json(report.to_dict())),
        atomic_write(out / SUMMARY_PLOT, _svg(plot_summary(report))),
        atomic_write(out / ERRORS_PLOT, _svg(plot_errors(report))),
    ]

    for sid in sorted(report.results):
        result = report.results[sid]
        if result.success and result.trajectory is not None:
            written.append(atomic_write(out / TRAJECTORY_DIR / f'{sid}.json',
                                        _json(_trajectory_dump(result))))
        if panels:
            spec = generate_scenario(sid.kind, sid.seed)
            status = 'success' if result.success else 'failure'
            fig = plot_episode(spec, result.trajectory,
                               f'{sid} ({status}, {result.rounds_used} '
                               'rounds)')
            written.append(atomic_write(out / PANEL_DIR / f'{sid}.svg',
                                        _svg(fig)))

    logger.info('Wrote %d files to %s', len(written), out)
    return written


def emit_comparison(table: Sequence[Mapping[str, str]],
                    out_dir: str | PathLike) -> Path:
    """Writes the ablation comparison table."""

    fields = list(table[0]) if table else [
        'temperature', 'model', 'docs_mode', 'kind', 'episodes',
        'success_rate', 'avg_rounds', 'complete',
    ]
    return atomic_write(Path(out_dir) / COMPARISON_FILE, _csv(fields, table))
