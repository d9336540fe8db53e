from pydantic import BaseModel, ConfigDict
from humps import camelize


class RequestBase(BaseModel):
    """Frozen request body; camelCase on the wire, snake_case in Python. Unknown fields are rejected."""

    model_config = ConfigDict(
        frozen=True,
        alias_generator=camelize,
        populate_by_name=True,
        validate_assignment=True,
        extra='forbid',
    )


class ResponseBase(BaseModel):
    model_config = ConfigDict(
        frozen=True,
        alias_generator=camelize,
        populate_by_name=True,
        validate_assignment=True,
        extra='ignore',
        from_attributes=True
    )
