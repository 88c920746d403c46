from .GpsMatrix import GpsMatrix
from .GpsModel import GpsModel
from .OutcomeModel import Link, OutcomeModel
from .RcModel import RcModel

__all__ = ["RcModel", "GpsModel", "GpsMatrix", "OutcomeModel", "Link"]
