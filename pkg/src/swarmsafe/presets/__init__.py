"""Packaged experiment presets (TOML files)."""
