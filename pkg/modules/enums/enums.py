from enum import Enum


class DeblurMethod(Enum):
    WIENER = "wiener"
    MWIENER = "mwiener"
    SDP = "sdp"

    @staticmethod
    def from_string(method: str):
        return DeblurMethod(method.lower())


class Axis(Enum):
    X = "x"
    Y = "y"

    @staticmethod
    def from_string(axis: str):
        return Axis(axis.lower())

    @property
    def other(self) -> "Axis":
        return Axis.Y if self is Axis.X else Axis.X


class EstimationMethod(Enum):
    GEOMETRIC = "geometric"
    HONG = "hong"
    HOUGH = "hough"

    @staticmethod
    def from_string(method: str):
        return EstimationMethod(method.lower())


class SceneKind(Enum):
    TEXTURE = "texture"
    BLOCKS = "blocks"
    SPECKLE = "speckle"
    RADIAL = "radial"
    TANGENCY = "tangency"
    DOT = "dot"

    @staticmethod
    def from_string(kind: str):
        return SceneKind(kind.lower())
