"""Tests for treeprune."""
