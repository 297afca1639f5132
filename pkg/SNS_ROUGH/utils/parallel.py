"""Ordered map over independent tasks, in worker processes when configured."""

from concurrent.futures import ProcessPoolExecutor
from typing import Callable
from typing import Iterable
from typing import List
from typing import Optional

from SNS_ROUGH import config


def ordered_map(function: Callable, items: Iterable, workers: Optional[int] = None) -> List:
    """Apply a module-level function to every item.

    Results come back in input order, so reductions over them do not depend on the number of workers.

    Args:
        function: Picklable function of one argument
        items: Task descriptions
        workers: Worker processes; defaults to SNS_ROUGH_WORKERS

    Returns:
        List of results in input order

    """
    workers = config.WORKERS if workers is None else workers
    items = list(items)

    if workers <= 1 or len(items) <= 1:
        return list(map(function, items))

    chunksize = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(function, items, chunksize=chunksize))
