import json
import logging
from typing import Any, Dict, Union

from pydantic import BaseModel, ConfigDict

logger = logging.getLogger(__name__)


class ExperimentTool(BaseModel):
    """
    A named step of the experiment pipeline.

    Subclasses implement ``_run`` with keyword arguments; ``run`` accepts those
    arguments as a dictionary or a JSON string.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str
    description: str

    def _run(self, **kwargs: Any) -> Any:
        raise NotImplementedError

    def run(self, tool_input: Union[str, Dict[str, Any], None] = None) -> Any:
        """
        Run the tool with the given input.

        Args:
            tool_input: Keyword arguments for ``_run`` as a dictionary or JSON object string

        Returns:
            Whatever ``_run`` returns
        """
        if tool_input is None:
            kwargs: Dict[str, Any] = {}
        elif isinstance(tool_input, str):
            try:
                kwargs = json.loads(tool_input)
            except json.JSONDecodeError as e:
                raise ValueError(f"{self.name}: input is not valid JSON: {e}")
            if not isinstance(kwargs, dict):
                raise ValueError(f"{self.name}: JSON input must be an object")
        elif isinstance(tool_input, dict):
            kwargs = dict(tool_input)
        else:
            raise TypeError(f"{self.name}: unsupported input type {type(tool_input).__name__}")
        logger.debug(f"{self.name} called with {sorted(kwargs)}")
        return self._run(**kwargs)
