"""MSB-first bit packing and unsigned LEB128 varints for the binary codecs."""

from __future__ import annotations


class BitWriter:
    """Accumulates values MSB-first; the final byte is zero-padded."""

    def __init__(self):
        self._out = bytearray()
        self._acc = 0
        self._n = 0

    def write(self, value: int, nbits: int) -> None:
        if nbits <= 0 or value < 0 or value >= (1 << nbits):
            raise ValueError(f"value {value} does not fit in {nbits} bits")
        self._acc = (self._acc << nbits) | value
        self._n += nbits
        while self._n >= 8:
            self._n -= 8
            self._out.append((self._acc >> self._n) & 0xFF)
        self._acc &= (1 << self._n) - 1

    def pad_to_byte(self) -> None:
        if self._n:
            self.write(0, 8 - self._n)

    @property
    def bit_length(self) -> int:
        return len(self._out) * 8 + self._n

    def getvalue(self) -> bytes:
        if self._n:
            return bytes(self._out) + bytes([(self._acc << (8 - self._n)) & 0xFF])
        return bytes(self._out)


class BitReader:
    """Reads values MSB-first from a byte string."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    @property
    def bits_read(self) -> int:
        return self._pos

    def read(self, nbits: int) -> int:
        if self._pos + nbits > len(self._data) * 8:
            raise ValueError("bit stream exhausted")
        value = 0
        pos = self._pos
        remaining = nbits
        while remaining:
            byte_i, bit_i = divmod(pos, 8)
            take = min(remaining, 8 - bit_i)
            chunk = (self._data[byte_i] >> (8 - bit_i - take)) & ((1 << take) - 1)
            value = (value << take) | chunk
            pos += take
            remaining -= take
        self._pos = pos
        return value


def write_uvarint(out: bytearray, value: int) -> None:
    if value < 0:
        raise ValueError("varints are unsigned")
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return


def read_uvarint(data: bytes, offset: int) -> tuple[int, int]:
    """Returns (value, next_offset); raises ValueError on truncation."""
    result = 0
    shift = 0
    pos = offset
    while True:
        if pos >= len(data):
            raise ValueError("truncated varint")
        byte = data[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7
        if shift > 63:
            raise ValueError("varint too long")
