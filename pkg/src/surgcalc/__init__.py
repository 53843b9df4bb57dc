"""surgcalc: exact arithmetic for surgery presentations, linking forms and torsion."""

__version__ = "0.1.0"
