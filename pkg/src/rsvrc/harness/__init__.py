"""Experiment harness: data simulation, replicated runs, CSV output, plots, CLI."""
