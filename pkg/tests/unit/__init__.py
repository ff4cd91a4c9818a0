"""Unit tests for pkcontrol."""
