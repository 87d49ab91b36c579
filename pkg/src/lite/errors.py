"""Shared exception base for the toolkit.

Every error raised by an operation carries a short machine-readable
``code`` (mirrored in CLI diagnostics and HTTP error bodies) plus a
human-readable message.
"""
from __future__ import annotations


class LiteError(Exception):
    code = "Error"

    def __init__(self, message: str, **details: object):
        super().__init__(message)
        self.message = message
        self.details = details

    def __str__(self) -> str:
        return self.message
