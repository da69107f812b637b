"""Primal-dual dynamics with vanishing Tikhonov regularization."""

from mixdyn._core import (
    ArgumentError,
    ConfigError,
    Error,
    audit,
    main,
    run,
    splitmix64,
    toy_reference,
)

__all__ = [
    "ArgumentError",
    "ConfigError",
    "Error",
    "audit",
    "main",
    "run",
    "splitmix64",
    "toy_reference",
]
