import pathlib

__version__ = "0.1"


def get_package_root() -> pathlib.Path:
    return pathlib.Path(__file__).resolve().parent


def get_repo_root() -> pathlib.Path:
    return get_package_root().parent


def get_output_root() -> pathlib.Path:
    """Default directory for transcripts and verification reports."""
    return get_repo_root() / "outputs"
