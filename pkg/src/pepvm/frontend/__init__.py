from .ast import (
    CTX, HALT, LISTEN, AssignEmitter, Choice, Emit, MachineDef, Opaque, ProgramDef,
    SetReaction, StartMachine, StateDef, Transition, UnsetReaction, dump_program,
)
from .lexer import PepError, tokenize
from .parser import compile_state, compute_alphabet, parse_program

__all__ = [
    "CTX", "HALT", "LISTEN", "AssignEmitter", "Choice", "Emit", "MachineDef", "Opaque",
    "ProgramDef", "SetReaction", "StartMachine", "StateDef", "Transition", "UnsetReaction",
    "PepError", "compile_state", "compute_alphabet", "dump_program", "parse_program",
    "tokenize",
]
