import os
import shutil

import numpy as np

from vigil.model import SourceParams, SystemConfig
from vigil.utils import documents


def get_logger_files_path(folder: str = "test_logs", remove_if_exist: bool = False):
    testing_logs_directory_path = os.path.join(os.getcwd(), folder)
    if remove_if_exist and os.path.exists(testing_logs_directory_path):
        shutil.rmtree(testing_logs_directory_path)
    return testing_logs_directory_path


def make_config(mus, lambdas, k_select=1, horizon=10, rate_budget=0.0, **kwargs) -> SystemConfig:
    sources = tuple(SourceParams(mu=m, lambda_=l) for m, l in zip(mus, lambdas))
    return SystemConfig(
        n_sources=len(sources),
        k_select=k_select,
        horizon=horizon,
        rate_budget=rate_budget,
        sources=sources,
        **kwargs,
    )


def config_document(mus, lambdas, k_select=1, horizon=10, rate_budget=0.0, **kwargs) -> dict:
    document = {
        "n_sources": len(mus),
        "k_select": k_select,
        "horizon": horizon,
        "rate_budget": rate_budget,
        "sources": [{"mu": m, "lambda": l} for m, l in zip(mus, lambdas)],
    }
    document.update(kwargs)
    return document


def write_config(path, **kwargs) -> str:
    return documents.write_document(str(path), config_document(**kwargs))


def rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)


class Spec:
    """Minimal command input: what ``App.run`` needs from an experiment spec."""

    def __init__(self, data=0):
        self.data = data

    def to_document(self):
        return {"data": self.data}

    def summary(self):
        return {"data": self.data}
