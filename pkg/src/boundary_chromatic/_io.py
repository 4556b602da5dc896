"""Deterministic output writers: canonical JSON and CSV with embedded
run configuration and a content digest, so repeated runs with one
config produce byte-identical files."""

from __future__ import annotations

import hashlib
import json


def canonical_json_bytes(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      allow_nan=False).encode()


def payload_digest(obj) -> str:
    return hashlib.sha256(canonical_json_bytes(obj)).hexdigest()


def write_json(path, config: dict, data) -> str:
    digest = payload_digest(data)
    doc = {"config": config, "digest": digest, "data": data}
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1, allow_nan=False)
        fh.write("\n")
    return digest


def write_csv(path, config: dict, header: str, rows) -> str:
    rows = list(rows)
    digest = payload_digest([header, rows])
    with open(path, "w") as fh:
        fh.write(f"# config = {canonical_json_bytes(config).decode()}\n")
        fh.write(f"# sha256 = {digest}\n")
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(str(x) for x in row) + "\n")
    return digest


def fmt(x, digits=17):
    """Repr-stable float formatting for CSV cells."""
    return format(float(x), f".{digits}g")
