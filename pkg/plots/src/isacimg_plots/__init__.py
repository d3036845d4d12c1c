"""Read-only figure rendering for isacimg CSV outputs.

Each module consumes one documented CSV schema and writes one figure;
nothing here imports the simulation package or mutates its outputs.
"""

__version__ = "0.1.0"
