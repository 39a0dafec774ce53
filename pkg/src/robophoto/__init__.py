"""Post-capture intelligence for a line-following robot photographer."""

__version__ = "0.1.0"
