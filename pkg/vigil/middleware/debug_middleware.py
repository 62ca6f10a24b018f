from . import Middleware
from ..utils.logger import get_logger


class DebugMiddleware(Middleware):
    def __init__(self, logger=None, logger_name="vigil", log_level="debug"):
        self.logger = logger if logger is not None else get_logger(logger_name)
        self.log_level = log_level.lower()

    def _log(self, *args, **kwargs):
        return getattr(self.logger, self.log_level)(*args, **kwargs)

    def run_command(self, name: str, spec, handler):
        self._log(f"Running command {name}", **spec.summary())
        response = handler(spec)
        if response is not None:
            self._log(f"Command {name} finished", **response)
        return response
