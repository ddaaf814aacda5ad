"""Distributed function computation: sensitivity classes, smooth sources, rate regions and codes."""

__version__ = "0.1.0"
