import sys


def check_venv() -> None:
    """
    Check that the interpreter can run the pipeline.

    Validates the Python version and that numpy is importable.
    Exits with code 1 if requirements are not met.
    """
    if (sys.version_info.major, sys.version_info.minor) < (3, 10):
        print(
            "Python version is NOT greater than or equal to 3.10. "
            "cascade-feature-learner requires Python 3.10 at least. "
            "Please upgrade your Python version.",
            file=sys.stderr,
        )
        sys.exit(1)

    try:
        import numpy  # noqa: F401  # pylint: disable=import-outside-toplevel,unused-import
    except ImportError:
        print(
            "numpy is not installed in this environment. "
            "Install the requirements with: pip install -r requirements.txt",
            file=sys.stderr,
        )
        sys.exit(1)
