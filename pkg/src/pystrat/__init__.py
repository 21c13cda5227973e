from .core.exceptions import PyStratException, PyStratError


__version__ = '0.1'
