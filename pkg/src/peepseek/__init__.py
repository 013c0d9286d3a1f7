"""peepseek: mines dependent instruction sequences from LLVM IR modules,
asks a pluggable optimizer agent for a better equivalent, and verifies
every proposal before recording it as a potential missed optimization."""

__version__ = "0.1.0"
