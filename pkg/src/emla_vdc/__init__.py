"""Virtual-decomposition control of a hydraulic-to-electric heavy-duty manipulator
driven by electromechanical linear actuators."""

__version__ = "0.1.0"
