"""Contract-based verification of black-box digital twins of a burner/boiler plant."""

__version__ = "0.1.0"
