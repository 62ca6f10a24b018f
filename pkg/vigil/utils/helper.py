import os
import sys
import typing
from concurrent.futures import ProcessPoolExecutor


def get_app_root_path():
    root_path = os.path.dirname(sys.argv[0])
    return f"{root_path}/" if root_path else ""


def create_dir_when_none(dir_name):
    """Check if a directory exist or create one.
    return: bool."""
    if not dir_name:
        return True
    if not os.path.isdir(dir_name):
        os.makedirs(dir_name, exist_ok=True)
        return False
    else:
        return True


def parse_seed(seed) -> int:
    """Documents carry ints, the command line carries hex strings (``--seed 0xbeef`` or ``beef``)."""
    if seed is None:
        return 0
    if isinstance(seed, bool):
        raise ValueError(f"Invalid seed {seed!r}")
    if isinstance(seed, int):
        if seed < 0:
            raise ValueError(f"Seed must be non-negative, got {seed}")
        return seed
    if isinstance(seed, str):
        text = seed.strip().lower()
        try:
            return int(text[2:] if text.startswith("0x") else text, 16)
        except ValueError:
            raise ValueError(f"Seed must be a hex string, got {seed!r}")
    raise ValueError(f"Invalid seed {seed!r}")


def run_chunks(function: typing.Callable, chunks: typing.Sequence, workers: int = 1) -> list:
    """Map ``function`` over ``chunks`` keeping input order, serially or on a process pool.
    Results do not depend on the number of workers."""
    if workers is None or workers <= 1 or len(chunks) <= 1:
        return [function(chunk) for chunk in chunks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(function, chunks))
