"""flowcast: a motorway traffic-flow forecasting workbench.

Generates conservation-consistent synthetic counting-station data, builds
daily flow profiles, trains a family of neural and classical short-term
predictors on sliding windows, and sweeps input/forecast horizons.
"""

__version__ = "0.1.0"

from .series import TI_MINUTES, TIS_PER_DAY, AlignmentError, FlowSeries, StationId

__all__ = [
    "TI_MINUTES",
    "TIS_PER_DAY",
    "AlignmentError",
    "FlowSeries",
    "StationId",
    "__version__",
]
