"""Pure-Python implementations of the hot kernels.

Semantics here are the reference; the compiled extension in ``_ck.pyx``
must match this module bit for bit.  Bit packing is little-endian,
LSB-first within 64-bit words.
"""

from ..errors import CorruptRecordError

BACKEND = "python"

_WORD_BITS = 64


def pack_bits(deltas, bit_width):
    """Pack non-negative ints of ``bit_width`` bits into word-aligned bytes."""
    n = len(deltas)
    if bit_width == 0 or n == 0:
        return b""
    nwords = (n * bit_width + _WORD_BITS - 1) // _WORD_BITS
    acc = 0
    pos = 0
    for d in deltas:
        acc |= d << pos
        pos += bit_width
    return acc.to_bytes(nwords * 8, "little")


def unpack_values(payload, byte_offset, bit_width, base, start, count):
    """Decode ``count`` values starting at index ``start``, adding ``base``."""
    if bit_width == 0:
        return [base] * count
    mask = (1 << bit_width) - 1
    out = []
    for i in range(start, start + count):
        bitpos = i * bit_width
        b = byte_offset + (bitpos >> 3)
        shift = bitpos & 7
        window = int.from_bytes(payload[b : b + 9], "little")
        out.append(base + ((window >> shift) & mask))
    return out


def fsst_encode(sym_map, max_len, record):
    """Greedy longest-match substitution; code 255 escapes literal bytes."""
    out = bytearray()
    n = len(record)
    i = 0
    while i < n:
        limit = max_len if n - i >= max_len else n - i
        code = None
        for length in range(limit, 0, -1):
            code = sym_map.get(record[i : i + length])
            if code is not None:
                out.append(code)
                i += length
                break
        if code is None:
            out.append(255)
            out.append(record[i])
            i += 1
    return bytes(out)


def fsst_decode(symbols, encoded):
    out = bytearray()
    n = len(encoded)
    nsym = len(symbols)
    i = 0
    while i < n:
        c = encoded[i]
        if c == 255:
            if i + 1 >= n:
                raise CorruptRecordError("trailing escape byte")
            out.append(encoded[i + 1])
            i += 2
        else:
            if c >= nsym:
                raise CorruptRecordError("unknown symbol code %d" % c)
            out += symbols[c]
            i += 1
    return bytes(out)


def fsst_decoded_length(symbol_lengths, encoded):
    """Length-only decode pass; no output bytes are materialized."""
    total = 0
    n = len(encoded)
    nsym = len(symbol_lengths)
    i = 0
    while i < n:
        c = encoded[i]
        if c == 255:
            if i + 1 >= n:
                raise CorruptRecordError("trailing escape byte")
            total += 1
            i += 2
        else:
            if c >= nsym:
                raise CorruptRecordError("unknown symbol code %d" % c)
            total += symbol_lengths[c]
            i += 1
    return total


def kmp_contains(pattern, text):
    """Substring containment via the failure-function search."""
    m = len(pattern)
    if m == 0:
        return True
    n = len(text)
    if m > n:
        return False
    lps = [0] * m
    length = 0
    i = 1
    while i < m:
        if pattern[i] == pattern[length]:
            length += 1
            lps[i] = length
            i += 1
        elif length != 0:
            length = lps[length - 1]
        else:
            i += 1
    i = 0
    j = 0
    while i < n:
        if text[i] == pattern[j]:
            i += 1
            j += 1
            if j == m:
                return True
        elif j != 0:
            j = lps[j - 1]
        else:
            i += 1
    return False
