import typing

from ..middleware import Middleware


class MiddlewareManager:
    def __init__(self):
        self._middlewares = []

    @property
    def middlewares(self):
        return self._middlewares

    @middlewares.setter
    def middlewares(self, value: list):
        self._middlewares = value

    def add_middleware(self, middleware_cls: typing.Type[Middleware], *args, **kwargs):
        assert issubclass(middleware_cls, Middleware), \
            "Each custom middleware class must be a subclass of Middleware"
        assert "run_command" in middleware_cls.__dict__, \
            "Middleware must implement run_command"
        middleware_obj = middleware_cls(*args, **kwargs)
        self._middlewares.append(middleware_obj.run_command)
        return middleware_obj

    def wrap_function_by_middleware(self, name: str, function: typing.Callable) -> typing.Callable:
        """The middleware added last runs outermost."""

        def wrap(func: typing.Callable, single_middleware) -> typing.Callable:
            def next_wrapper(spec):
                return single_middleware(name, spec, func)

            return next_wrapper

        for middleware in self._middlewares:
            function = wrap(function, middleware)
        return function
