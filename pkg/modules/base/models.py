from pydantic import BaseModel, ConfigDict


class BaseDomainModel(BaseModel):
    """Immutable value object; arrays are allowed as fields."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
