from .contagion_lab import ContagionLab, main
from .config import ExperimentSpec
from .evaluation import ExperimentRecord, run_sweep, summarize

__all__ = ["ContagionLab", "ExperimentRecord", "ExperimentSpec", "main", "run_sweep", "summarize"]
