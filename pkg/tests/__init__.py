"""
Test package for mcrgames.
Contains the unit, property and command-line tests plus the example artifacts.
"""
