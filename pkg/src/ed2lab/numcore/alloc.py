"""Allocator tuning for the many same-sized temporaries of a training loop."""

import ctypes
import ctypes.util
import sys

# glibc mallopt parameter ids
_M_TRIM_THRESHOLD = -1
_M_MMAP_THRESHOLD = -3

_tuned = False


def keep_large_blocks(threshold: int = 256 << 20) -> bool:
    """Serve large arrays from the heap instead of fresh mmap pages.

    By default glibc maps every block above a few hundred KiB straight from
    the kernel and unmaps it on free, so each ~1 MiB activation or gradient
    pays page faults and zeroing. Raising the mmap and trim thresholds lets
    freed blocks be reused. Returns False where glibc is not available.
    """
    global _tuned
    if _tuned:
        return True
    if not sys.platform.startswith("linux"):
        return False
    try:
        libc = ctypes.CDLL(ctypes.util.find_library("c") or "libc.so.6")
        mallopt = libc.mallopt
    except (OSError, AttributeError):
        return False
    mallopt.argtypes = [ctypes.c_int, ctypes.c_int]
    ok = mallopt(_M_MMAP_THRESHOLD, threshold) == 1 and mallopt(_M_TRIM_THRESHOLD, 2 * threshold) == 1
    _tuned = ok
    return ok
