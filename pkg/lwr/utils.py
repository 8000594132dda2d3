import logging
import math
import os

from django.conf import settings
from django.core.exceptions import SuspiciousFileOperation

logger = logging.getLogger('lwr')


def safe_join_path(*parts):
    """
    Safely join path components and validate they're within OUTPUT_ROOT.

    Args:
        *parts: Path components to join

    Returns:
        str: Validated absolute path

    Raises:
        SuspiciousFileOperation: If path would escape OUTPUT_ROOT
    """
    path = os.path.join(settings.OUTPUT_ROOT, *parts)
    abs_path = os.path.abspath(path)
    abs_root = os.path.abspath(settings.OUTPUT_ROOT)

    if abs_path != abs_root and not abs_path.startswith(abs_root + os.sep):
        logger.warning(f"Path traversal attempt detected: {path}")
        raise SuspiciousFileOperation("Output path escapes OUTPUT_ROOT")

    return abs_path


def run_directory(name, digest):
    """Output directory of a scenario run, created when missing."""
    path = safe_join_path(f"{name}-{digest[:12]}")
    os.makedirs(path, exist_ok=True)
    return path


def finite_or_none(value):
    """JSON has no infinities: map them (and NaN) to null."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def jsonable(value):
    """Recursively replace non-finite floats and tuples for json.dumps."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, 'item') and callable(value.item):
        # numpy scalars
        value = value.item()
    return finite_or_none(value)


def describe_error(exc):
    """One-line message naming the failing invariant of a ValidationError."""
    messages = '; '.join(getattr(exc, 'messages', [str(exc)]))
    code = getattr(exc, 'code', None)
    return f"{code}: {messages}" if code else messages
