"""Surface language frontend: lexer, parser, desugarer."""

from .lexer import ParseError, tokenize
from .parser import Parser, parse_program
from .desugar import CoreProgram, DesugarError, desugar_program
from .surface import SProgram, program_to_str

__all__ = [
    "ParseError", "tokenize", "Parser", "parse_program",
    "CoreProgram", "DesugarError", "desugar_program",
    "SProgram", "program_to_str",
]
