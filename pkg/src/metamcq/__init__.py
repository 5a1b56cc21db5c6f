"""Multi-stage heuristic-enhanced prompting pipeline for Chinese metaphor MCQ tasks."""

__version__ = "0.1.0"
