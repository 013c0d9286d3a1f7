from .types import (
    BasicBlock, Function, Instruction, IrType, Module, ValueRef,
    I1, LABEL, PTR, VOID, int_type, vector_type,
)
from .parser import parse_module, parse_function_text
from .printer import print_function, print_module, render_instruction
from .ssa import direct_uses, uses_value

__all__ = [
    "BasicBlock", "Function", "Instruction", "IrType", "Module", "ValueRef",
    "I1", "LABEL", "PTR", "VOID", "int_type", "vector_type",
    "parse_module", "parse_function_text",
    "print_function", "print_module", "render_instruction",
    "direct_uses", "uses_value",
]
