class TrackingError(RuntimeError):
    """An internal invariant of the front tracker failed (time regression, broken state chain, event cap)."""
