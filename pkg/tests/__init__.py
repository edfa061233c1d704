"""Tests for iaas-signature-selection-tool."""
