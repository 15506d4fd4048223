"""Engine for authoring augmented table tennis videos.

Turns per-frame tracking data into a hierarchical data pyramid, recommends
visual mappings from corpus statistics, compiles narrative-ordered render
schedules, and emits deterministic overlay frames.
"""

__version__ = "0.1.0"
