import logging
import os
import typing

from .exceptions import InitializingLoggerError
from .managers.command_manager import CommandManager
from .managers.middleware_manager import MiddlewareManager
from .utils import logger
from .utils.helper import get_app_root_path

_app = None


class App:
    def __init__(
        self,
        app_name: str = "vigil",
        logger_required: bool = True,
        logger_files_path: str = None,
        custom_logger: logging.Logger = None,
        console_level: str = "INFO",
    ):
        """
        :param app_name: name of the application, also the name of its log file
        :param logger_required: Is logger required for the project (if not, logging stays unconfigured)
        :param logger_files_path: main path for logs
        :param custom_logger: logger to use instead of the configured one
        :param console_level: level of the console handler
        """
        self.app_name = app_name
        self.app_root_path = get_app_root_path()
        self.logger_required = logger_required

        # check, if tests are running
        if os.environ.get("VIGIL_TEST_MODE"):
            self.logger_files_path = os.environ.get("VIGIL_LOG_DIR", "test_logs")
        else:
            self.logger_files_path = (
                logger_files_path or os.environ.get("VIGIL_LOG_DIR") or "logs"
            )

        try:
            if custom_logger:
                self.logger = logger.Logger(custom_logger)
            elif self.logger_required:
                logger.set_logger(
                    self.app_name,
                    self.app_root_path,
                    self.logger_files_path,
                    console_level,
                )
                self.logger = logger.get_logger(self.app_name)
            else:
                self.logger = logger.get_logger(self.app_name)
        except (OSError, ValueError) as e:
            raise InitializingLoggerError(f"Logger can not be initialized: {e}")

        self._command_manager = CommandManager()
        self._middleware_manager = MiddlewareManager()

        global _app
        _app = self

    @property
    def commands(self) -> dict:
        return self._command_manager.commands

    def command(self, name: str, validator: type = None, validation_error_cb: typing.Callable = None):
        return self._command_manager.command(name, validator, validation_error_cb)

    def add_middleware(self, cls, *args, **kwargs):
        return self._middleware_manager.add_middleware(cls, *args, **kwargs)

    def run(self, name: str, spec):
        handler = self._command_manager.get(name)
        wrapped = self._middleware_manager.wrap_function_by_middleware(name, handler)
        return wrapped(spec)


def get_app() -> App:
    return _app
