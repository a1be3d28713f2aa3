"""Trip-level energy modelling for electric micromobility.

Turns raw e-bike / e-scooter telemetry into Wh/km energy-efficiency labels
and predicts per-trip demand with a physics baseline plus a from-scratch
regression model zoo.
"""

__version__ = "0.1.0"
