"""Exception hierarchy shared across the package.

Two failure families matter to callers: data that violates a domain
contract (``ValidationError``) and input that cannot even be read
(``ParseError``). The CLI maps the former to exit code 1 and the latter,
together with plain I/O failures, to exit code 2.
"""

from __future__ import annotations


class LapTempoError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(LapTempoError):
    """A value or combination of values violates a domain invariant."""


class ParseError(LapTempoError):
    """An input document is malformed.

    Carries enough context (row number, path, offending text) in the
    message to locate the problem in the source file.
    """


class AlignmentError(LapTempoError):
    """Recording blocks in a workbook disagree on bar indexing."""
