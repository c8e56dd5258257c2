"""Command-line interface of the cavity pipeline."""
