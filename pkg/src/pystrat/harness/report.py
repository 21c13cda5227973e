"""Rebuilding reports from per-episode tables."""

from __future__ import annotations

import csv
import json
import logging
from os import PathLike
from pathlib import Path

from ..orch import MAX_ROUNDS, ErrorKind
from .batch import ROW_FIELDS, BatchReport, EpisodeRow
from .output import EPISODES_FILE, REPORT_FILE


__all__ = ['load_rows', 'load_report', 'format_report']


logger = logging.getLogger(__name__)


def load_rows(path: str | PathLike) -> list[EpisodeRow]:
    """Reads a per-episode table.

    Raises:
        ValueError: If the header or a row is malformed.
    """

    with open(path, newline='', encoding='utf-8') as f:
        reader = csv.DictReader(f)
        missing = set(ROW_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f'{path}: missing columns '
                             f'{", ".join(sorted(missing))}')
        rows = []
        for line, row in enumerate(reader, start=2):
            try:
                rows.append(EpisodeRow.from_csv(row))
            except (KeyError, ValueError) as e:
                raise ValueError(f'{path}:{line}: {e}') from None
    return rows


def load_report(directory: str | PathLike) -> BatchReport:
    """Recomputes the report of an output directory from its episode table.

    The round budget and completeness come from the stored aggregate report
    when there is one.
    """

    directory = Path(directory)
    rows = load_rows(directory / EPISODES_FILE)

    max_rounds, complete = MAX_ROUNDS, True
    stored = directory / REPORT_FILE
    if stored.exists():
        with open(stored, encoding='utf-8') as f:
            data = json.load(f)
        max_rounds = int(data.get('max_rounds', MAX_ROUNDS))
        complete = bool(data.get('complete', True))
    else:
        logger.warning('No %s in %s, assuming %d rounds', REPORT_FILE,
                       directory, max_rounds)

    return BatchReport.build(rows, max_rounds, complete=complete)


def format_report(report: BatchReport) -> str:
    """A fixed-width text table of the per-kind aggregates."""

    errors = [str(e) for e in ErrorKind]
    header = (f'{"kind":<14}{"episodes":>9}{"success":>9}{"avg_rounds":>11}'
              + ''.join(f'{e:>13}' for e in errors))
    lines = [header, '-' * len(header)]
    for kind, s in report.summaries.items():
        avg = '-' if s.avg_rounds is None else f'{s.avg_rounds:.2f}'
        lines.append(
            f'{str(kind):<14}{s.episodes:>9}{s.success_rate:>9.2f}{avg:>11}'
            + ''.join(f'{s.errors.get(e, 0):>13}' for e in ErrorKind)
        )
    if not report.complete:
        lines.append('(incomplete batch)')
    lines.append('avg_rounds counts successful episodes only')
    return '\n'.join(lines)
