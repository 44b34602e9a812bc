"""Scale-free visuomotor estimation and control in action-implied units.

A robot that knows only its control signal and a unitless visual position
signal can recover distances, velocities, gravity, and its own actuator
dynamics in the units its actions imply, then touch targets, judge
openings, and jump gaps without any calibration to an external scale.
"""

from . import camera, control, estimators, plant, qp, signals

__all__ = ["signals", "camera", "plant", "qp", "estimators", "control"]

__version__ = "0.1.0"
