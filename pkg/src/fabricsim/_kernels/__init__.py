"""Hot-kernel backend selection.

The compiled extension is preferred; the pure-Python module is the fallback
when the extension was not built. Both produce bit-identical results (see
the stream contract in ``pure``). Set FABRICSIM_KERNELS=pure to force the
fallback, e.g. for benchmarking.
"""

from __future__ import annotations

import os

import numpy as np

if os.environ.get("FABRICSIM_KERNELS", "").strip().lower() == "pure":
    from . import pure as _impl

    BACKEND = "pure"
else:
    try:
        from . import _speed as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import pure as _impl

        BACKEND = "pure"

MC_BLOCK = _impl.MC_BLOCK
FLAP_BLOCK = _impl.FLAP_BLOCK


def _edge_arrays(edges) -> tuple[np.ndarray, np.ndarray]:
    eu = np.ascontiguousarray([e[0] for e in edges], dtype=np.int32)
    ev = np.ascontiguousarray([e[1] for e in edges], dtype=np.int32)
    return eu, ev


def disconnection_counts(num_vertices: int, edges) -> list[int]:
    """counts[k] = number of k-edge failure sets that disconnect the graph."""
    eu, ev = _edge_arrays(edges)
    return [int(c) for c in _impl.disconnection_counts(num_vertices, eu, ev)]


def disconnection_mc(num_vertices: int, edges, p: float, trials: int, seed: int) -> int:
    """Count of Monte Carlo trials that left the graph disconnected."""
    eu, ev = _edge_arrays(edges)
    return int(_impl.disconnection_mc(num_vertices, eu, ev, float(p), int(trials), seed))


def flapping_run(to_bad, to_good, p_good, p_bad, slots: int, seed: int) -> tuple[int, int]:
    """(bad-state slots, failed slots) over a simulated two-state link."""
    bad, fails = _impl.flapping_run(
        float(to_bad), float(to_good), float(p_good), float(p_bad), int(slots), seed
    )
    return int(bad), int(fails)
