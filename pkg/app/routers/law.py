"""law router."""
import logging

from fastapi import APIRouter, Query

from app.utils.asymptotics import asymptotic_law
from app.utils.drift_partition import DriftVector

logger = logging.getLogger()

router = APIRouter()


@router.get(
    "/api/law",
    tags=["law"],
    description="Exponential rate gamma, polynomial order alpha and the prefactor h of P_x(tau > t).",
)
async def get_law(
    drifts: str = Query(..., description="comma-separated drifts (e.g. 2,0,3)", example="2,0,3"),
):
    """
    Asymptotic law of the first collision time.

    :param drifts: The drift vector a, comma-separated.
    :return: gamma, alpha as numerator and denominator, and the descriptor of h.
    """
    return asymptotic_law(DriftVector.parse(drifts)).to_json()
