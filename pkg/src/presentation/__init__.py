"""
Presentation layer exports.
Contains the command-line interface, its flag validators and result formatters.
"""

# Formatters
from .formatters.report_formatter import ReportFormatter

# Validators
from .validators import CliValidators, UsageError

# CLI
from .cli import CommandRunner, build_parser, main

__all__ = [
    # Formatters
    'ReportFormatter',

    # Validators
    'CliValidators',
    'UsageError',

    # CLI
    'CommandRunner',
    'build_parser',
    'main',
]
