from .config import PAPER_SCALE, ExperimentConfig, preset
from .runner import RunLog, evaluate, train_run
from .suite import emit_plot_data, run_suite, summary_csv, summary_rows

__all__ = [
    "ExperimentConfig", "preset", "PAPER_SCALE",
    "RunLog", "train_run", "evaluate",
    "run_suite", "summary_csv", "summary_rows", "emit_plot_data",
]
