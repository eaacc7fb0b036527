from .hashing import canonical_json, config_hash, make_header

__all__ = ["canonical_json", "config_hash", "make_header"]
