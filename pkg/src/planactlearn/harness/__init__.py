"""Experiment suites, reports and the command-line interface."""
