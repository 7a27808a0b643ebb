from qrwsearch.version import __version__  # noqa: F401
