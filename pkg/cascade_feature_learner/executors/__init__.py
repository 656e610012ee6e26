from .serial_executor import SerialExecutor
from .pool_executor import PoolExecutor

__all__ = ["SerialExecutor", "PoolExecutor", "create_executor"]


def create_executor(deterministic: bool, debug: bool = False) -> "SerialExecutor | PoolExecutor":
    """Serial execution when bit-reproducibility is requested, a thread pool otherwise."""
    if deterministic:
        return SerialExecutor(debug=debug)
    return PoolExecutor(debug=debug)
