"""Audited synthesis of rolling pass-schedule controllers."""

__version__ = "0.1.0"
