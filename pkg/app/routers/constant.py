"""constant router."""
import logging
from typing import Optional

from fastapi import APIRouter, Path, Query

from app.utils.constant_c import (
    A1Convention,
    SConvention,
    constant_direct,
    constant_extracted,
    equal_drift_D,
    equal_drift_D_closed,
)
from app.utils.drift_partition import DriftVector, StartVector
from app.utils.errors import InvalidInputError
from app.utils.parsing import parse_grid
from app.utils.settings import TailMethod

logger = logging.getLogger()

router = APIRouter()


@router.get(
    "/api/constant",
    tags=["constant"],
    description="The constant C of the asymptotic law, from its integral representation (direct) or fitted to "
    "tail values along a time grid (extract).",
)
async def get_constant(
    drifts: str = Query(..., description="comma-separated drifts (e.g. 1,-1)", example="1,-1"),
    method: str = Query("direct", pattern="^(direct|extract)$", description="direct or extract"),
    x: Optional[str] = Query(None, description="start vector, for extraction (e.g. 0,1)"),
    t_grid: Optional[str] = Query(None, description="comma-separated times, for extraction (e.g. 4,9,16,25)"),
    oracle: TailMethod = Query(TailMethod.EXACT, description="tail method used by the extraction"),
    a1_convention: A1Convention = Query(A1Convention.MEAN, description="mean-coordinate Jacobian convention"),
    s_convention: SConvention = Query(SConvention.GRAM, description="between-block quadratic form convention"),
):
    """
    Direct constant C = A1 A2 A3 with its factors and flags, or the constant extracted from tail values.

    :param drifts: Drift vector.
    :param method: ``direct`` (default) or ``extract``.
    :param x: Start vector for the extraction.
    :param t_grid: Time grid for the extraction.
    :param oracle: Tail method evaluated along the grid.
    :param a1_convention: ``mean`` (default) or ``sum``.
    :param s_convention: ``gram`` (default) or ``printed``.
    """
    a = DriftVector.parse(drifts)
    if method == "direct":
        return constant_direct(a, a1_convention=a1_convention, s_convention=s_convention).to_json()
    if not (x and t_grid):
        raise InvalidInputError("extraction needs x and t_grid")
    report = constant_extracted(StartVector.parse(x), a, t_grid=parse_grid(t_grid), oracle=oracle)
    return report.to_json()


@router.get(
    "/api/constant/equal-drift/{n}",
    tags=["constant"],
    description="The constant D(n) of the equal-drift law, by quadrature and in closed form.",
)
async def get_equal_drift_constant(n: int = Path(..., ge=2, le=4, description="number of particles")):
    """D(n) by quadrature and by the closed form."""
    return {"n": n, "quadrature": equal_drift_D(n), "closed": equal_drift_D_closed(n)}
