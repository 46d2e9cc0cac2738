"""Reading-comprehension toolkit with annotation-specialized self-attention."""

__version__ = "0.1.0"
