"""Test suite for the FG-UAP toolkit."""
