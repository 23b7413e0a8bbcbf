"""Tests for the kinetic simulator."""
