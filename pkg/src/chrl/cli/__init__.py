"""Command-line surface and file formats."""

from chrl.syntax import ParseError, format_program, parse_program, parse_state, parse_state_or_config

__all__ = ["ParseError", "format_program", "parse_program", "parse_state", "parse_state_or_config"]
