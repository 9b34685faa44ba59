"""tail router."""
import logging
from typing import Optional

from fastapi import APIRouter, Query

from app.utils.drift_partition import DriftVector, StartVector
from app.utils.numerics import QuadratureSpec
from app.utils.settings import TailMethod
from app.utils.tail_methods import tail_by_method

logger = logging.getLogger()

router = APIRouter()


@router.get(
    "/api/tail",
    tags=["tail"],
    description="Survival probability P_x(tau > t) by one of the exact, proposition, km, closed2, mc or "
    "asymptotic methods.",
)
async def get_tail(
    x: str = Query(..., description="strictly increasing start vector (e.g. 0,1)", example="0,1"),
    drifts: str = Query(..., description="comma-separated drifts (e.g. 1,-1)", example="1,-1"),
    t: float = Query(..., gt=0, description="time horizon"),
    method: TailMethod = Query(TailMethod.EXACT, description="estimation method"),
    constant: Optional[float] = Query(None, description="the constant C, for the asymptotic method"),
    points_per_dim: Optional[int] = Query(None, ge=8, description="quadrature nodes per dimension"),
):
    """
    Survival probability with its error bound.

    :param x: Start vector in the Weyl chamber.
    :param drifts: Drift vector.
    :param t: Time horizon.
    :param method: Estimation method.
    :param constant: C for the asymptotic method.
    :param points_per_dim: Quadrature override.
    :return: value, error, method, t and n.
    """
    spec = QuadratureSpec.from_config(points_per_dim=points_per_dim)
    logger.info("tail x=%s a=%s t=%s method=%s", x, drifts, t, method.value)
    estimate = tail_by_method(StartVector.parse(x), DriftVector.parse(drifts), t, method, spec, constant=constant)
    return estimate.to_json()
