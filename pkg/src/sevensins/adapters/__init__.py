"""
Adapters connecting the core to solvers, files and output formats.
"""
