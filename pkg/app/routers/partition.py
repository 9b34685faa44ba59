"""partition router."""
import logging

from fastapi import APIRouter, Query

from app.utils.drift_partition import (
    DriftVector,
    StartVector,
    brute_force_partition,
    coalescing_groups,
    stable_partition,
)

logger = logging.getLogger()

router = APIRouter()


@router.get(
    "/api/partition",
    tags=["partition"],
    description="Stable partition of a drift vector with its strong representation, e.g. drifts=3,1,2,5,1.",
)
async def get_partition(
    drifts: str = Query(
        ..., description="comma-separated drifts, decimals or ratios (e.g. 3,1,2,5,1)", example="3,1,2,5,1"
    ),
    brute_force: bool = Query(False, description="search all compositions instead of pooling adjacent violators"),
):
    """
    Stable partition of a drift vector.

    :param drifts: The drift vector a, comma-separated.
    :param brute_force: Use the exhaustive search (n <= 12).
    :return: m, nu, f_block, m_prime, q, q_prime and k0.
    """
    a = DriftVector.parse(drifts)
    logger.info("partition of %s (brute_force=%s)", drifts, brute_force)
    p = brute_force_partition(a) if brute_force else stable_partition(a)
    return p.to_json()


@router.get(
    "/api/partition/coalescence",
    tags=["partition"],
    description="Terminal groups of the deterministic coalescing particle system started at x with velocities a.",
)
async def get_coalescence(
    x: str = Query(..., description="strictly increasing start vector (e.g. 0,1,2,3,4)", example="0,1,2,3,4"),
    drifts: str = Query(..., description="comma-separated drifts (e.g. 3,1,2,5,1)", example="3,1,2,5,1"),
):
    """
    Terminal grouping of the coalescing particles, as lists of 1-based particle indices.

    The grouping agrees with the stable partition of the drifts whatever the start.
    """
    groups = coalescing_groups(StartVector.parse(x), DriftVector.parse(drifts))
    return {"groups": [list(g) for g in groups]}
