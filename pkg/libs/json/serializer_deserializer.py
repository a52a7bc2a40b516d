import json
import dataclasses
from enum import Enum
from datetime import datetime
from pathlib import Path
from typing import Type, TypeVar

import dacite
import numpy as np
from pydantic import BaseModel

from modules.enums.enums import Axis, DeblurMethod, EstimationMethod, SceneKind

T = TypeVar("T")


def enum_by_value(enum_cls):
    return lambda x: x if isinstance(x, enum_cls) else enum_cls(x)


class DataclassEncoder(json.JSONEncoder):
    def default(self, o):
        if dataclasses.is_dataclass(o) and not isinstance(o, type):
            return dataclasses.asdict(o)
        if isinstance(o, BaseModel):
            return o.model_dump(mode="json")
        if isinstance(o, datetime):
            return o.isoformat()
        if isinstance(o, Enum):
            return o.value
        if isinstance(o, Path):
            return str(o)
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        return super().default(o)


class DataclassSerializer:
    @staticmethod
    def serialize(obj: object, indent: int | None = None) -> str:
        return json.dumps(obj, cls=DataclassEncoder, indent=indent)

    @staticmethod
    def deserialize(json_str: str, cls: Type[T], strict: bool = True) -> T:
        """Decode a JSON object into a dataclass; in strict mode unknown keys raise."""
        if not dataclasses.is_dataclass(cls):
            raise ValueError(f"{cls.__name__} is not a dataclass")

        data_dict = json.loads(json_str)
        if not isinstance(data_dict, dict):
            raise ValueError(f"Expected a JSON object for {cls.__name__}")

        return dacite.from_dict(
            data_class=cls,
            data=data_dict,
            config=dacite.Config(
                type_hooks={
                    datetime: datetime.fromisoformat,
                    Axis: enum_by_value(Axis),
                    DeblurMethod: enum_by_value(DeblurMethod),
                    EstimationMethod: enum_by_value(EstimationMethod),
                    SceneKind: enum_by_value(SceneKind),
                },
                cast=[Enum, float],
                strict=strict,
            ),
        )
