import pytest

from vigil import app as vigil_app
from vigil.exceptions import CommandError
from vigil.middleware import Middleware
from .helper import Spec


class IncMiddleware(Middleware):
    def run_command(self, name, spec, handler):
        spec.data += 1
        response = handler(spec)
        response["trace"].append("inc")
        return response


class DoubleMiddleware(Middleware):
    def run_command(self, name, spec, handler):
        spec.data *= 2
        response = handler(spec)
        response["trace"].append("double")
        return response


class ParamsMiddleware(Middleware):
    def __init__(self, foo, bar, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.foo = foo
        self.bar = bar

    def run_command(self, name, spec, handler):
        response = handler(spec)
        response["params"] = (self.foo, self.bar, name)
        return response


class IncorrectMiddleware:  # not inherited from Middleware
    def run_command(self, name, spec, handler):
        pass


class NoHookMiddleware(Middleware):
    pass


@pytest.fixture
def app():
    app = vigil_app.App(app_name="test_middleware_manager", logger_required=False)

    @app.command("echo")
    def echo(spec):
        return {"data": spec.data, "trace": []}

    return app


def test_no_middleware(app):
    assert app.run("echo", Spec(3)) == {"data": 3, "trace": []}


def test_last_added_runs_outermost(app):
    app.add_middleware(IncMiddleware)
    app.add_middleware(DoubleMiddleware)
    response = app.run("echo", Spec(3))
    # double runs first on the way in and last on the way out
    assert response["data"] == 7
    assert response["trace"] == ["inc", "double"]


def test_middleware_params(app):
    middleware = app.add_middleware(ParamsMiddleware, "foo", bar="bar")
    assert middleware.foo == "foo"
    assert app.run("echo", Spec())["params"] == ("foo", "bar", "echo")


def test_incorrect_middleware(app):
    with pytest.raises(AssertionError):
        app.add_middleware(IncorrectMiddleware)
    with pytest.raises(AssertionError):
        app.add_middleware(NoHookMiddleware)


def test_unknown_command(app):
    with pytest.raises(CommandError):
        app.run("missing", Spec())


def test_duplicate_command(app):
    with pytest.raises(CommandError):
        app.command("echo")(lambda spec: None)


def test_get_app(app):
    assert vigil_app.get_app() is app
    assert "echo" in app.commands
