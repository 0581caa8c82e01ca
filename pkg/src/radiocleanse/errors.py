"""Exception hierarchy shared by every module, plus the CLI exit-code mapping."""

from __future__ import annotations


class RadioCleanseError(Exception):
    """Base class for all toolkit errors."""


# --- radio map loading / validation ---

class EmptyFile(RadioCleanseError):
    """CSV has no header or no data rows."""


class MalformedRow(RadioCleanseError):
    """A data row does not fit the header (wrong column count, missing cell)."""


class NonNumericCell(RadioCleanseError):
    """A cell that must hold a number (or integer label) does not."""


class MissingLabelColumn(RadioCleanseError):
    """A required label column (coordinates) is absent from the header."""


class NoApColumns(RadioCleanseError):
    """No header column matches the access-point naming pattern."""


class RssOutOfBand(RadioCleanseError):
    """A detected RSS level lies outside the plausible band."""


class NoDetectedValues(RadioCleanseError):
    """Every cell of the map is non-detected; no transform reference exists."""


# --- cleansing ---

class ZeroWindow(RadioCleanseError):
    """The rank window evaluated to zero (map has too few detected values)."""


class AllRemoved(RadioCleanseError):
    """Cleansing would remove every fingerprint (pathological threshold)."""


# --- positioning / metrics ---

class EmptyTrainingSet(RadioCleanseError):
    """Positioner fitted on zero fingerprints."""


class InvalidConfig(RadioCleanseError):
    """A configuration value violates its documented range or enum."""


class DimensionMismatch(RadioCleanseError):
    """Query vector length differs from the training AP count."""


class MissingGroundTruth(RadioCleanseError):
    """A requested hit rate needs labels the dataset does not carry."""


class ZeroBaselineField(RadioCleanseError):
    """Normalization would divide by a zero baseline value."""


# --- CLI / artifacts ---

class OutputLocked(RadioCleanseError):
    """Another invocation holds the output directory lock."""


# Distinct nonzero exit code per error class; 1 is reserved for unexpected
# failures and 2 for argument parsing (argparse default).
EXIT_CODES: dict[type[RadioCleanseError], int] = {
    EmptyFile: 3,
    MalformedRow: 4,
    NonNumericCell: 5,
    MissingLabelColumn: 6,
    NoApColumns: 7,
    RssOutOfBand: 8,
    NoDetectedValues: 9,
    ZeroWindow: 10,
    AllRemoved: 11,
    EmptyTrainingSet: 12,
    InvalidConfig: 13,
    DimensionMismatch: 14,
    MissingGroundTruth: 15,
    ZeroBaselineField: 16,
    OutputLocked: 17,
}

EXIT_FILE_NOT_FOUND = 18


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, FileNotFoundError):
        return EXIT_FILE_NOT_FOUND
    for klass, code in EXIT_CODES.items():
        if type(exc) is klass:
            return code
    if isinstance(exc, RadioCleanseError):
        return 1
    raise TypeError(f"not a toolkit error: {exc!r}")
