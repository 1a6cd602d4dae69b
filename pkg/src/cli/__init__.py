"""
Command Line Package

Problem file I/O and the ``solve`` / ``gen`` / ``verify`` commands.
"""

from .main import main

__all__ = ['main']
