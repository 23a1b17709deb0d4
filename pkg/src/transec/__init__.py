"""Security-centric evaluation harness for LLM-based code translation."""

__version__ = "0.1.0"
