"""Test package for the ptppm trajectory-privacy engine."""
