"""Constants for treeprune."""

from .defaults import (
    DEFAULT_CONFIG_FILE,
    DEFAULT_MAX_NODES,
    DEFAULT_MAX_STEPS,
    DEFAULT_MAX_TREES,
    EXIT_INCONSISTENT,
    EXIT_INPUT_ERROR,
    EXIT_OK,
    FRAGMENT_PREFIX,
    REPORT_SCHEMA,
    SYNTHETIC_PREFIX,
    THREADS_ENV,
)
from .html import DROPPED_ELEMENTS, HTML_TAGS
from .jquery import DOCUMENT_OBJECTS, IGNORED_FUNCTIONS, JQUERY_FUNCTIONS, JQUERY_NAMES, JQueryKind

__all__ = [
    "DEFAULT_CONFIG_FILE",
    "DEFAULT_MAX_NODES",
    "DEFAULT_MAX_STEPS",
    "DEFAULT_MAX_TREES",
    "EXIT_OK",
    "EXIT_INPUT_ERROR",
    "EXIT_INCONSISTENT",
    "FRAGMENT_PREFIX",
    "REPORT_SCHEMA",
    "SYNTHETIC_PREFIX",
    "THREADS_ENV",
    "DROPPED_ELEMENTS",
    "HTML_TAGS",
    "DOCUMENT_OBJECTS",
    "IGNORED_FUNCTIONS",
    "JQUERY_FUNCTIONS",
    "JQUERY_NAMES",
    "JQueryKind",
]
