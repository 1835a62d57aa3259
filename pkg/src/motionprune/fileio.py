"""Binary embedding/weights file format.

Little-endian throughout. Embedding files:

    magic "ADPE" | u32 version=1 | u32 rows | u32 cols | u32 segment_count
    per segment: u8 kind | u32 length | u32 view_id (VIS only, else 0)
    rows*cols float32, row major

Kinds 0..5 are the sequence segments (BOS, VIS, PROP, TXT, ACT, EOS).
Weights files reuse the same header with kinds 6 (W_Q) and 7 (W_K), each a
cols x cols block, followed by u32 num_heads and u32 head_dim before the data.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import InvalidArgument, ParseError
from .scoring import EmbeddingMatrix, ProjectionWeights, Segment, SegmentKind

MAGIC = b"ADPE"
VERSION = 1
KIND_WQ = 6
KIND_WK = 7


def _read_exact(fh, n: int, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise ParseError(f"truncated file while reading {what}")
    return buf


def _write_header(fh, rows: int, cols: int, segments):
    fh.write(MAGIC)
    fh.write(struct.pack("<IIII", VERSION, rows, cols, len(segments)))
    for kind, length, view_id in segments:
        fh.write(struct.pack("<BII", kind, length, view_id))


def _read_header(fh):
    magic = _read_exact(fh, 4, "magic")
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r}, expected {MAGIC!r}")
    version, rows, cols, seg_count = struct.unpack("<IIII", _read_exact(fh, 16, "header"))
    if version != VERSION:
        raise ParseError(f"unsupported version {version}")
    segments = []
    for i in range(seg_count):
        kind, length, view_id = struct.unpack("<BII", _read_exact(fh, 9, f"segment {i}"))
        segments.append((kind, length, view_id))
    return rows, cols, segments


def write_embeddings(path, emb: EmbeddingMatrix) -> None:
    segs = [(int(s.kind), s.length, s.view_id if s.kind == SegmentKind.VIS else 0)
            for s in emb.segments]
    with open(path, "wb") as fh:
        _write_header(fh, emb.rows, emb.cols, segs)
        fh.write(np.ascontiguousarray(emb.data, dtype="<f4").tobytes())


def read_embeddings(path) -> EmbeddingMatrix:
    with open(path, "rb") as fh:
        rows, cols, raw_segs = _read_header(fh)
        segments = []
        for kind, length, view_id in raw_segs:
            if kind > 5:
                raise ParseError(f"segment kind {kind} is not a sequence segment")
            segments.append(Segment(SegmentKind(kind), length, view_id))
        data = np.frombuffer(
            _read_exact(fh, rows * cols * 4, "embedding data"), dtype="<f4"
        ).reshape(rows, cols).astype(np.float32)
    try:
        return EmbeddingMatrix(data, tuple(segments))
    except InvalidArgument as exc:
        raise ParseError(f"{path}: {exc}") from exc


def write_weights(path, weights: ProjectionWeights) -> None:
    d = weights.w_q.shape[0]
    with open(path, "wb") as fh:
        _write_header(fh, 2 * d, d, [(KIND_WQ, d, 0), (KIND_WK, d, 0)])
        fh.write(struct.pack("<II", weights.num_heads, weights.head_dim))
        fh.write(np.ascontiguousarray(weights.w_q, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(weights.w_k, dtype="<f4").tobytes())


def read_weights(path) -> ProjectionWeights:
    with open(path, "rb") as fh:
        rows, cols, segs = _read_header(fh)
        kinds = [k for k, _, _ in segs]
        if kinds != [KIND_WQ, KIND_WK]:
            raise ParseError(f"weights file must contain W_Q then W_K, got kinds {kinds}")
        lengths = [length for _, length, _ in segs]
        if lengths != [cols, cols] or rows != 2 * cols:
            raise ParseError("weight blocks must each be cols x cols")
        num_heads, head_dim = struct.unpack("<II", _read_exact(fh, 8, "head layout"))
        w_q = np.frombuffer(_read_exact(fh, cols * cols * 4, "W_Q"), dtype="<f4")
        w_k = np.frombuffer(_read_exact(fh, cols * cols * 4, "W_K"), dtype="<f4")
    try:
        return ProjectionWeights(
            w_q.reshape(cols, cols).astype(np.float32),
            w_k.reshape(cols, cols).astype(np.float32),
            num_heads=num_heads,
            head_dim=head_dim,
        )
    except InvalidArgument as exc:
        raise ParseError(f"{path}: {exc}") from exc
