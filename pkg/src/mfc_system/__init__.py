"""
Mean-field control toolkit for cooperative multi-agent RL with a shared global state
"""

from mfc_system.config import settings

__version__ = settings.VERSION

__all__ = ["settings"]
