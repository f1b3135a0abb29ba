"""Exception types shared across the package.

The CLI maps these onto its contractual exit codes, so library code
should raise the most specific type that applies.
"""


class TreeToeplitzError(Exception):
    """Base class for all package errors."""


class ValidationError(TreeToeplitzError):
    """Malformed input: bad word, bad symbol spec, inconsistent kappa, ..."""


class BudgetError(TreeToeplitzError):
    """A requested computation would exceed a configured size budget."""


class CertificationError(TreeToeplitzError):
    """A numeric certificate failed (e.g. kernel eigenvalues outside [0, 1])."""
