"""Shared exception types."""


class NumericIntegrityError(RuntimeError):
    """A numerical guarantee was violated (non-finite value, non-real
    expectation, non-converged refinement).  Carries enough context in the
    message to locate the offending quantity."""
