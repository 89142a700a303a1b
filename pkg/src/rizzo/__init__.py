"""Reference interpreter, typechecker and reactive runtime for a modal
FRP calculus with signals, channels and guarded recursion."""

__version__ = "0.1.0"
