"""Deterministic rover mission simulator for mosquito breeding-site control.

The package models a small autonomous ground rover that patrols a bounded
arena, detects standing-water breeding sites with a synthetic camera
detector, treats them with a larvicide sprayer, and reports mission metrics
to a ground-control station over a framed UDP protocol.
"""

__version__ = "0.1.0"
