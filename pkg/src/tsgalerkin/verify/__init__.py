"""Verification tools: manufactured solutions, error norms, rate studies."""
