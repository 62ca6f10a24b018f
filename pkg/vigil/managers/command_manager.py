import typing

from ..exceptions import CommandError, ValidationError


class CommandManager:
    """
    Collect all functions registered by @app.command
    """

    def __init__(self):
        self._commands = {}

    @property
    def commands(self):
        return self._commands

    def command(
        self,
        name: str,
        validator: type = None,
        validation_error_cb: typing.Callable = None,
    ):
        def wrapper(function):
            if name in self._commands:
                raise CommandError(f"Command {name} is already registered")
            self._commands[name] = self.wrap_function_by_validator(
                function, validator, validation_error_cb
            )
            return function

        return wrapper

    def get(self, name: str) -> typing.Callable:
        if name not in self._commands:
            raise CommandError(
                f"Unknown command {name}, expected one of {sorted(self._commands)}"
            )
        return self._commands[name]

    @staticmethod
    def wrap_function_by_validator(function, validator, validation_error_cb):
        def wrapper(spec):
            if validator is not None:
                try:
                    validator.validated_message(spec.to_document())
                except ValidationError as e:
                    if validation_error_cb:
                        return validation_error_cb(spec, e)
                    raise CommandError(f"Invalid experiment: {e}")
            return function(spec)

        return wrapper
