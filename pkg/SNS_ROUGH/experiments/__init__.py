"""Experiments subpackage."""
