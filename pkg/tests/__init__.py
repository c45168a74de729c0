"""Unit tests for dredmtl."""
