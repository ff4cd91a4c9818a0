"""Tests for pkcontrol."""
