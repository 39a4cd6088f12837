"""Hot-loop backend selection.

The compiled Cython extension is used when available; set SATDEBLUR_NO_EXT=1
to force the numpy/scipy fallback (the benchmark script compares both).
"""

import os

from . import _kernels_np

if os.environ.get("SATDEBLUR_NO_EXT"):
    _impl = _kernels_np
    HAVE_EXT = False
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        HAVE_EXT = True
    except ImportError:
        _impl = _kernels_np
        HAVE_EXT = False

convolve2d = _impl.convolve2d
window_min = _impl.window_min
