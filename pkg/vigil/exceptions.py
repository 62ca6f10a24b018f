from .utils.logger import Logger

app_logger = None


class BaseError(Exception):
    pass


class BaseLoggedError(BaseError):
    def __init__(self, error_message="", log_obj=None):
        if log_obj is not None and not isinstance(log_obj, Logger):
            print(
                f"Wrong log_obj for error {error_message}. It has to be Logger instance"
            )
        elif log_obj is not None:
            log_obj.error(error_message)
        else:
            global app_logger
            if app_logger is None:
                from .utils.logger import get_logger

                app_logger = get_logger()
            app_logger.error(error_message)
        super().__init__(error_message)


class ValidationError(Exception):
    pass


class ConfigValidationError(BaseError):
    def __init__(self, violations: list):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class DocumentError(BaseError):
    pass


class PolicyError(BaseError):
    pass


class AnalysisError(BaseError):
    pass


class DpError(BaseError):
    pass


class KktError(BaseLoggedError):
    pass


class OracleSizeError(BaseError):
    pass


class CommandError(BaseError):
    pass


class InitializingLoggerError(BaseError):
    pass
