"""Kernel backend selection.

The compiled Cython extension is used when available; setting the
environment variable ``ADAGB2_PURE_PYTHON=1`` (before import) forces the
numpy fallback.  Both backends share the exact same clamp semantics, so
results are bit-identical either way.
"""

import os

from . import pure

if os.environ.get("ADAGB2_PURE_PYTHON", "0") not in ("", "0"):
    _impl = pure
else:
    try:
        from . import _fastcore as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = pure

BACKEND = _impl.BACKEND
project_box = _impl.project_box
project_box_cap_trust = _impl.project_box_cap_trust
first_order = _impl.first_order
