import logging

from django.conf import settings
from joblib import Parallel, delayed

logger = logging.getLogger(__name__)


def resolve_workers(workers=None):
    if workers is None:
        workers = getattr(settings, 'EXCURSION_WORKERS', 1)
    return max(1, int(workers))


def ordered_map(func, items, workers=None):
    """Apply ``func`` to every item, results in input order.

    Threads are used: the heavy lifting is numpy code that releases the GIL.
    """
    items = list(items)
    workers = resolve_workers(workers)
    if workers == 1 or len(items) <= 1:
        return [func(item) for item in items]
    logger.debug('Dispatching %d tasks to %d workers', len(items), workers)
    return Parallel(n_jobs=workers, prefer='threads')(delayed(func)(item) for item in items)
