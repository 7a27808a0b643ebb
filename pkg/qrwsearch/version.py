from pathlib import Path


# shipped as package data, see setup.py
VERSION_FILE = Path(__file__).with_name("VERSION")
UNKNOWN_VERSION = "0.0.0+unknown"


def get_version_number(version_file: Path = VERSION_FILE) -> str:
    """Version string from the ``VERSION`` file inside the package"""
    try:
        return version_file.read_text(encoding="utf-8").strip()
    except FileNotFoundError:
        return UNKNOWN_VERSION


__version__ = get_version_number()
