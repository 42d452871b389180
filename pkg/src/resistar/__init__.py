"""Recursive simplex star approximation of oracle-defined boundaries."""
