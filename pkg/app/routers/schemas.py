"""schemas router."""
from fastapi import APIRouter, Path

from app.utils.schemas import SCHEMAS, schema_for

router = APIRouter()


@router.get("/api/schemas", tags=["schemas"], description="Names of the published JSON schemas.")
async def get_schema_names():
    """Names of the published JSON schemas."""
    return sorted(SCHEMAS)


@router.get("/api/schemas/{name}", tags=["schemas"], description="JSON schema of one output, e.g. partition.")
async def get_schema(name: str = Path(..., description="schema name (partition, law, tail, constant, manifest)")):
    """JSON schema of one output."""
    return schema_for(name)
