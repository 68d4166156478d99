"""Hot-loop kernels: bit packing, string codec inner loops, substring search.

The compiled Cython extension is preferred; the pure-Python twin is used
when the extension is unavailable or ``COLFUSE_PURE`` is set in the
environment.  Both expose the same functions with identical semantics.
"""

import os

from . import _py

if os.environ.get("COLFUSE_PURE"):
    _impl = _py
else:
    try:
        from . import _ck as _impl
    except ImportError:
        _impl = _py

BACKEND = _impl.BACKEND

pack_bits = _impl.pack_bits
unpack_values = _impl.unpack_values
fsst_encode = _impl.fsst_encode
fsst_decode = _impl.fsst_decode
fsst_decoded_length = _impl.fsst_decoded_length
kmp_contains = _impl.kmp_contains
