"""Dispatch of survival estimates by method tag, one time or a grid of times."""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Sequence

from app.utils.drift_partition import as_drift, greater
from app.utils.errors import InvalidInputError
from app.utils.exact_tail import (
    TailEstimate,
    asymptotic_tail,
    km_survival,
    proposition_tail,
    tail_exact,
    tail_n2_closed,
)
from app.utils.mc_collision import SimConfig, estimate_tail
from app.utils.numerics import QuadratureSpec
from app.utils.settings import TailMethod, get_thread_count

logger = logging.getLogger()

ALIASES = {"prop": TailMethod.PROPOSITION}


def parse_method(name) -> TailMethod:
    """Method tag from its name; ``prop`` is accepted for ``proposition``."""
    if isinstance(name, TailMethod):
        return name
    try:
        return ALIASES.get(name) or TailMethod(name)
    except ValueError:
        raise InvalidInputError("unknown method {!r}; expected one of {}".format(name, [m.value for m in TailMethod]))


def tail_by_method(
    x, a, t: float, method="exact", spec: QuadratureSpec = None, sim: SimConfig = None, constant: float = None
) -> TailEstimate:
    """
    Survival estimate by the named method.

    ``km`` needs equal drifts (a common drift does not change the collision time); ``closed2`` needs n = 2;
    ``asymptotic`` needs the constant C.
    """
    method = parse_method(method)
    a = as_drift(a)
    if method == TailMethod.KM:
        if any(greater(u, v) or greater(v, u) for u, v in zip(a.values, a.values[1:])):
            raise InvalidInputError("the km method is driftless; got drifts {}".format([str(v) for v in a]))
        return km_survival(x, t, spec)
    if method == TailMethod.EXACT:
        return tail_exact(x, a, t, spec)
    if method == TailMethod.PROPOSITION:
        return proposition_tail(x, a, t, spec)
    if method == TailMethod.CLOSED2:
        return tail_n2_closed(x, a, t)
    if method == TailMethod.MC:
        return estimate_tail(x, a, t, sim)
    if constant is None:
        raise InvalidInputError("the asymptotic method needs the constant C")
    return asymptotic_tail(x, a, t, constant)


def tail_grid(
    x,
    a,
    t_grid: Sequence[float],
    method="exact",
    spec: QuadratureSpec = None,
    sim: SimConfig = None,
    threads: int = None,
) -> List[TailEstimate]:
    """Estimates over a grid of times, in grid order; grid points run concurrently when threads > 1."""
    if not t_grid:
        raise InvalidInputError("empty time grid")
    threads = threads or get_thread_count()

    def run(t):
        return tail_by_method(x, a, t, method, spec, sim)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, t_grid))
    return [run(t) for t in t_grid]
