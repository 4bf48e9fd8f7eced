"""Compiled kernels for the time-stepping inner loops.

``kernels.pyx`` mirrors :mod:`shortpulse._ext.fallback` function by
function; :mod:`shortpulse.kernels` picks one at import.
"""
