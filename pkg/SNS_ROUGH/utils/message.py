"""Functions for creating human-readable messages."""

import math
from typing import Dict


def human_readable_number(value: float) -> str:
    """Format a number for display.

    Args:
        value: A number

    Returns:
        Integers with commas every thousand, other values with four significant digits

    """
    if isinstance(value, bool):
        return verdict(value)
    if isinstance(value, int) or (isinstance(value, float) and value.is_integer() and abs(value) < 1e15):
        return "{:,}".format(int(value))
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return "{:.4g}".format(value)


def verdict(passed: bool) -> str:
    return "PASS" if passed else "FAIL"


def human_readable_duration(seconds: float) -> str:
    """Format a wall-clock duration like 1h 02m 03s, 4m 05s or 6.2s."""
    if seconds < 60:
        return f"{seconds:.1f}s"
    minutes, seconds = divmod(int(round(seconds)), 60)
    if minutes < 60:
        return f"{minutes}m {seconds:02d}s"
    hours, minutes = divmod(minutes, 60)
    return f"{hours}h {minutes:02d}m {seconds:02d}s"


def summary_message(title: str, summary: Dict) -> str:
    """Render a run summary as an aligned block of key-value lines.

    Args:
        title: First line of the message
        summary: Values to display, in display order

    Returns:
        Multi-line message

    """
    if not summary:
        return title

    width = max(len(key) for key in summary)
    lines = [title]
    for key, value in summary.items():
        shown = human_readable_number(value) if isinstance(value, (int, float)) else str(value)
        lines.append(f"  {key.ljust(width)}  {shown}")
    return "\n".join(lines)
