"""Integration tests for pkcontrol."""
