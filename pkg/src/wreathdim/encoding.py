"""Variable-length integer encodings used by all canonical element serializations.

Unsigned integers use LEB128 (7 bits per byte, high bit = continuation).
Signed integers are zigzag-mapped to unsigned first, so small magnitudes of
either sign stay short and the byte ordering of single-integer encodings is
0, -1, 1, -2, 2, ...
"""

from __future__ import annotations


class EncodingError(ValueError):
    """Raised when bytes do not form a valid canonical element encoding."""


def write_uvarint(out: bytearray, value: int) -> None:
    if value < 0:
        raise EncodingError(f"uvarint requires a nonnegative integer, got {value}")
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return


def write_svarint(out: bytearray, value: int) -> None:
    write_uvarint(out, (value << 1) if value >= 0 else ((-value) << 1) - 1)


def read_uvarint(data: bytes | memoryview, pos: int) -> tuple[int, int]:
    """Decode one LEB128 integer at ``pos``; return (value, next position)."""
    result = 0
    shift = 0
    start = pos
    while True:
        if pos >= len(data):
            raise EncodingError(f"truncated varint at byte {start}")
        byte = data[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            if byte == 0 and shift > 0:
                raise EncodingError(f"non-minimal varint at byte {start}")
            return result, pos
        shift += 7


def read_svarint(data: bytes | memoryview, pos: int) -> tuple[int, int]:
    raw, pos = read_uvarint(data, pos)
    return (raw >> 1) if not raw & 1 else -((raw + 1) >> 1), pos


def encode_uvarint(value: int) -> bytes:
    out = bytearray()
    write_uvarint(out, value)
    return bytes(out)


def encode_svarint(value: int) -> bytes:
    out = bytearray()
    write_svarint(out, value)
    return bytes(out)
