from .base import ExperimentTool
from .csv_save import CsvSaveTool
from .run_organizer import RunOrganizerTool
from .exact import ExactTool
from .polya import PolyaTool
from .simulate import SimulateTool
from .analyze import AnalyzeTool
from .validate import ValidateTool
from .plot import PlotTool

__all__ = [
    "ExperimentTool",
    "CsvSaveTool",
    "RunOrganizerTool",
    "ExactTool",
    "PolyaTool",
    "SimulateTool",
    "AnalyzeTool",
    "ValidateTool",
    "PlotTool",
]
