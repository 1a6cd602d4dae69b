"""
Multiconic PTS Solver - Main Package
"""

__version__ = "0.1.0"
__author__ = "Multiconic Solver Development Team"
