"""Allow ``python -m hbft`` as an alias for the ``hbft`` console script."""

from .cli import entry

entry()
