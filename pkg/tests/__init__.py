"""AMDC test suite."""
