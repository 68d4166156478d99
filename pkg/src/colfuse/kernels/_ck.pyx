# Compiled twin of ``_py``; see that module for the normative semantics.

from libc.stdint cimport uint64_t, int64_t, uint8_t
from libc.stdlib cimport malloc, free
from libc.string cimport memset

from colfuse.errors import CorruptRecordError

BACKEND = "cython"


def pack_bits(deltas, int bit_width):
    cdef Py_ssize_t n = len(deltas)
    if bit_width == 0 or n == 0:
        return b""
    cdef Py_ssize_t nwords = (n * bit_width + 63) // 64
    cdef uint64_t *words = <uint64_t *> malloc(nwords * 8)
    if words == NULL:
        raise MemoryError()
    memset(words, 0, nwords * 8)
    cdef Py_ssize_t i
    cdef uint64_t d
    cdef Py_ssize_t bitpos, w, off
    try:
        for i in range(n):
            d = deltas[i]
            bitpos = i * bit_width
            w = bitpos >> 6
            off = bitpos & 63
            words[w] |= d << off
            if off + bit_width > 64:
                words[w + 1] |= d >> (64 - off)
        out = bytearray(nwords * 8)
        for i in range(nwords):
            d = words[i]
            out[i * 8] = d & 0xFF
            out[i * 8 + 1] = (d >> 8) & 0xFF
            out[i * 8 + 2] = (d >> 16) & 0xFF
            out[i * 8 + 3] = (d >> 24) & 0xFF
            out[i * 8 + 4] = (d >> 32) & 0xFF
            out[i * 8 + 5] = (d >> 40) & 0xFF
            out[i * 8 + 6] = (d >> 48) & 0xFF
            out[i * 8 + 7] = (d >> 56) & 0xFF
        return bytes(out)
    finally:
        free(words)


cdef inline uint64_t _load_word(const uint8_t *p):
    return (<uint64_t> p[0]
            | (<uint64_t> p[1] << 8)
            | (<uint64_t> p[2] << 16)
            | (<uint64_t> p[3] << 24)
            | (<uint64_t> p[4] << 32)
            | (<uint64_t> p[5] << 40)
            | (<uint64_t> p[6] << 48)
            | (<uint64_t> p[7] << 56))


def unpack_values(const uint8_t[:] payload, Py_ssize_t byte_offset,
                  int bit_width, object base, Py_ssize_t start,
                  Py_ssize_t count):
    if bit_width == 0:
        return [base] * count
    cdef int64_t cbase = base
    cdef uint64_t mask = <uint64_t> 0xFFFFFFFFFFFFFFFF
    if bit_width < 64:
        mask = (<uint64_t> 1 << bit_width) - 1
    cdef Py_ssize_t plen = payload.shape[0]
    cdef const uint8_t *p
    if plen > 0:
        p = &payload[0]
    else:
        p = NULL
    out = []
    cdef Py_ssize_t i, bitpos, w, off
    cdef uint64_t lo, hi, val
    for i in range(start, start + count):
        bitpos = i * bit_width
        w = byte_offset + ((bitpos >> 6) << 3)
        off = bitpos & 63
        lo = _load_word(p + w)
        val = lo >> off
        if off != 0 and off + bit_width > 64:
            hi = _load_word(p + w + 8)
            val |= hi << (64 - off)
        val &= mask
        out.append(<int64_t> (<uint64_t> cbase + val))
    return out


def fsst_encode(dict sym_map, int max_len, bytes record):
    cdef Py_ssize_t n = len(record)
    cdef Py_ssize_t i = 0
    cdef int length, limit
    out = bytearray()
    cdef object code
    while i < n:
        limit = max_len if n - i >= max_len else <int> (n - i)
        code = None
        for length in range(limit, 0, -1):
            code = sym_map.get(record[i : i + length])
            if code is not None:
                out.append(<int> code)
                i += length
                break
        if code is None:
            out.append(255)
            out.append(record[i])
            i += 1
    return bytes(out)


def fsst_decode(tuple symbols, bytes encoded):
    cdef Py_ssize_t n = len(encoded)
    cdef Py_ssize_t nsym = len(symbols)
    cdef const uint8_t *enc = <const uint8_t *> encoded
    cdef Py_ssize_t i = 0
    cdef int c
    out = bytearray()
    while i < n:
        c = enc[i]
        if c == 255:
            if i + 1 >= n:
                raise CorruptRecordError("trailing escape byte")
            out.append(enc[i + 1])
            i += 2
        else:
            if c >= nsym:
                raise CorruptRecordError("unknown symbol code %d" % c)
            out += <bytes> symbols[c]
            i += 1
    return bytes(out)


def fsst_decoded_length(tuple symbol_lengths, bytes encoded):
    cdef Py_ssize_t n = len(encoded)
    cdef Py_ssize_t nsym = len(symbol_lengths)
    cdef const uint8_t *enc = <const uint8_t *> encoded
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t total = 0
    cdef int c
    while i < n:
        c = enc[i]
        if c == 255:
            if i + 1 >= n:
                raise CorruptRecordError("trailing escape byte")
            total += 1
            i += 2
        else:
            if c >= nsym:
                raise CorruptRecordError("unknown symbol code %d" % c)
            total += <Py_ssize_t> symbol_lengths[c]
            i += 1
    return total


def kmp_contains(bytes pattern, bytes text):
    cdef Py_ssize_t m = len(pattern)
    if m == 0:
        return True
    cdef Py_ssize_t n = len(text)
    if m > n:
        return False
    cdef const uint8_t *pat = <const uint8_t *> pattern
    cdef const uint8_t *txt = <const uint8_t *> text
    cdef Py_ssize_t *lps = <Py_ssize_t *> malloc(m * sizeof(Py_ssize_t))
    if lps == NULL:
        raise MemoryError()
    cdef Py_ssize_t length = 0
    cdef Py_ssize_t i = 1
    cdef Py_ssize_t j
    try:
        lps[0] = 0
        while i < m:
            if pat[i] == pat[length]:
                length += 1
                lps[i] = length
                i += 1
            elif length != 0:
                length = lps[length - 1]
            else:
                lps[i] = 0
                i += 1
        i = 0
        j = 0
        while i < n:
            if txt[i] == pat[j]:
                i += 1
                j += 1
                if j == m:
                    return True
            elif j != 0:
                j = lps[j - 1]
            else:
                i += 1
        return False
    finally:
        free(lps)
