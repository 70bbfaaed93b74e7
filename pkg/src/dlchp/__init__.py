"""Dynamic logic of communicating hybrid programs: kernel, analyses,
bounded trace semantics, first-order encoders, and a batch CLI."""

__version__ = "0.1.0"
