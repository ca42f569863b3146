"""
Digests for snapshots and reports.
"""
from cryptography.hazmat.primitives import hashes


def digest(data: bytes) -> str:
    """Hex SHA-256 of `data`."""
    hasher = hashes.Hash(hashes.SHA256())
    hasher.update(data)
    return hasher.finalize().hex()
