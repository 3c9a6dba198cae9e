"""Tests for the abs-lsq CLI."""
