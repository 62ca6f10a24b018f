class Middleware:
    def __init__(self, *args, **kwargs):
        pass

    def run_command(self, name: str, spec, handler):
        """
        :param name: str - command name
        :param spec: ExperimentSpec the command runs on
        :param handler: Callable(spec) for the next link of the chain
        :return: result document of the command
        """
        pass
