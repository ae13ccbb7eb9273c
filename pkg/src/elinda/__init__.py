"""elinda: interactive linked-data exploration over RDF graphs."""

__version__ = "0.1.0"
