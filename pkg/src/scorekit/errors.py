"""Shared exception base for the package."""


class ScorekitError(Exception):
    """Base class for all errors raised by scorekit."""
