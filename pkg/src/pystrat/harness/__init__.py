from .config import (
    BackendKind, BackendSpec, Setting, AblationSpec, BatchConfig, load_config
)
from .batch import (
    REPORT_SCHEMA_VERSION, ROW_FIELDS, EpisodeRow, KindSummary, BatchReport,
    aggregate, run_batch, run_ablation, comparison_table
)
from .output import (
    EPISODES_FILE, REPORT_FILE, SUMMARY_PLOT, ERRORS_PLOT, TRAJECTORY_DIR,
    PANEL_DIR, COMPARISON_FILE, atomic_write, rows_to_csv, plot_summary,
    plot_errors, plot_episode, emit_outputs, emit_comparison
)
from .report import load_rows, load_report, format_report
