"""Analysis defaults, exit codes and environment names."""

# CLI exit codes
EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_INCONSISTENT = 3

# Environment variable capping per-class and per-page parallelism (0 = auto)
THREADS_ENV = "TREEPRUNE_THREADS"

DEFAULT_CONFIG_FILE = "treeprune.yaml"

# Explicit-enumeration oracle caps
DEFAULT_MAX_NODES = 8
DEFAULT_MAX_TREES = 2000
DEFAULT_MAX_STEPS = 20000

# Report JSON schema version
REPORT_SCHEMA = 1

# Prefix of classes synthesized for non-atomic guard subformulas
SYNTHETIC_PREFIX = "~"

# Prefix of fresh marker classes used when building inserted HTML fragments
FRAGMENT_PREFIX = "tmp:"
