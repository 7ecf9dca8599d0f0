"""Readers and writers for the on-disk formats.

Edge lists and labels are plain text. Feature matrices use either a text
table (comma or whitespace separated) or the binary layout:

    magic "MDGF" | rows u32 | cols u32 | float32 row-major, little-endian

Checkpoints store named float32 arrays:

    magic "MDGM" | version u16 | repeated records until EOF:
        name_len u16 | name utf-8 | rank u16 | dims u32 * rank | float32 payload

All integers are little-endian.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import GraphFormatError, ValidationError

MATRIX_MAGIC = b"MDGF"
CHECKPOINT_MAGIC = b"MDGM"
CHECKPOINT_VERSION = 1


def write_matrix(path, matrix) -> None:
    """Write a 2-D array as a binary MDGF file."""
    arr = np.asarray(matrix, dtype=np.float32)
    if arr.ndim != 2:
        raise ValidationError(f"matrix must be 2-D, got shape {arr.shape}")
    with open(path, "wb") as fh:
        fh.write(MATRIX_MAGIC)
        fh.write(struct.pack("<II", arr.shape[0], arr.shape[1]))
        fh.write(arr.astype("<f4").tobytes(order="C"))


def read_matrix(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MATRIX_MAGIC:
            raise GraphFormatError(
                f"bad magic {magic!r}, expected {MATRIX_MAGIC!r}", path=path
            )
        header = fh.read(8)
        if len(header) != 8:
            raise GraphFormatError("truncated header", path=path)
        rows, cols = struct.unpack("<II", header)
        payload = fh.read()
    expected = rows * cols * 4
    if len(payload) != expected:
        raise GraphFormatError(
            f"payload is {len(payload)} bytes, expected {expected}", path=path
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(rows, cols)
    return data.astype(np.float64)


def _looks_binary(path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(4) == MATRIX_MAGIC


def read_text_matrix(path):
    """Read a text feature table; rows may be comma or whitespace separated."""
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.replace(",", " ").split()
            try:
                values = [float(p) for p in parts]
            except ValueError:
                raise GraphFormatError(
                    f"non-numeric entry in {parts!r}", path=path, line=lineno
                ) from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise GraphFormatError(
                    f"row has {len(values)} columns, expected {width}",
                    path=path,
                    line=lineno,
                )
            rows.append(values)
    if not rows:
        raise GraphFormatError("feature file contains no rows", path=path)
    return np.asarray(rows, dtype=np.float64)


def load_feature_matrix(path):
    """Load features from either the binary or the text layout."""
    if _looks_binary(path):
        return read_matrix(path)
    return read_text_matrix(path)


def read_edge_list(path):
    """Parse "u v" pairs, one per line; '#' starts a comment."""
    edges = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != 2:
                raise GraphFormatError(
                    f"expected two node ids, got {text!r}", path=path, line=lineno
                )
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise GraphFormatError(
                    f"non-integer node id in {text!r}", path=path, line=lineno
                ) from None
            if u < 0 or v < 0:
                raise GraphFormatError(
                    f"negative node id in {text!r}", path=path, line=lineno
                )
            edges.append((u, v))
    return edges


def write_edge_list(path, edges) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in edges:
            fh.write(f"{u} {v}\n")


def read_labels(path):
    """Read one integer label per line."""
    labels = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                labels.append(int(text))
            except ValueError:
                raise GraphFormatError(
                    f"non-integer label {text!r}", path=path, line=lineno
                ) from None
    return np.asarray(labels, dtype=np.int64)


def write_labels(path, labels) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for y in np.asarray(labels).ravel():
            fh.write(f"{int(y)}\n")


def save_checkpoint(path, params) -> None:
    """Write named arrays to a binary MDGM checkpoint.

    Iteration order of ``params`` fixes the record order, so passing the
    same dict twice produces byte-identical files.
    """
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<H", CHECKPOINT_VERSION))
        for name, value in params.items():
            arr = np.asarray(value, dtype="<f4")
            encoded = name.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise ValidationError(f"parameter name too long: {name!r}")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<H", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes(order="C"))


def load_checkpoint(path):
    """Read an MDGM checkpoint back into an ordered name -> float64 array dict."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise GraphFormatError(
            f"bad magic {blob[:4]!r}, expected {CHECKPOINT_MAGIC!r}", path=path
        )
    if len(blob) < 6:
        raise GraphFormatError("truncated checkpoint header", path=path)
    (version,) = struct.unpack_from("<H", blob, 4)
    if version != CHECKPOINT_VERSION:
        raise GraphFormatError(f"unsupported checkpoint version {version}", path=path)
    params = {}
    offset = 6
    while offset < len(blob):
        try:
            (name_len,) = struct.unpack_from("<H", blob, offset)
            offset += 2
            name = blob[offset : offset + name_len].decode("utf-8")
            offset += name_len
            (rank,) = struct.unpack_from("<H", blob, offset)
            offset += 2
            dims = struct.unpack_from(f"<{rank}I", blob, offset)
            offset += 4 * rank
            count = int(np.prod(dims, dtype=np.int64)) if rank else 1
            nbytes = count * 4
            if offset + nbytes > len(blob):
                raise struct.error("payload past end of file")
            data = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
            offset += nbytes
        except (struct.error, UnicodeDecodeError) as exc:
            raise GraphFormatError(f"corrupt record: {exc}", path=path) from None
        params[name] = data.reshape(dims).astype(np.float64)
    return params
