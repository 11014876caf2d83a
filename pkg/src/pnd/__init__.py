"""Verifying kernel for natural-deduction protothetic developments."""

from .errors import PNDError
from .kernel import Development, Options, check_development, check_text
from .parser import parse_category, parse_formula, parse_script, print_category, print_formula

__all__ = [
    "PNDError", "Development", "Options", "check_development", "check_text",
    "parse_category", "parse_formula", "parse_script", "print_category", "print_formula",
]
