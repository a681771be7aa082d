"""Dictionary-augmented character-level clinical named entity recognition."""

__version__ = "0.1.0"
