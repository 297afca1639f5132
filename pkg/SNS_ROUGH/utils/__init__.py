"""Utilities subpackage."""
