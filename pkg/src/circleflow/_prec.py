"""Working-precision control for python-flint ball arithmetic.

flint keeps its precision in a process-global context, so every change goes
through one re-entrant lock.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager

from flint import ctx

_LOCK = threading.RLock()


@contextmanager
def workprec(bits: int):
    with _LOCK:
        old = ctx.prec
        ctx.prec = int(bits)
        try:
            yield
        finally:
            ctx.prec = old
