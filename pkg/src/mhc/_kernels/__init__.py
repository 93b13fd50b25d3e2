"""Numeric kernel backend selection.

The compiled Cython module is used when it imported cleanly; setting the
environment variable ``MHC_FORCE_PY=1`` forces the pure-numpy fallback.
Both expose the same functions with matching semantics (see
``benchmarks/bench_kernels.py`` for the speed comparison).
"""

import os

if os.environ.get("MHC_FORCE_PY", "").strip() not in ("", "0"):
    from . import reference as impl
else:
    try:
        from . import _native as impl  # type: ignore[attr-defined]
    except ImportError:
        from . import reference as impl

BACKEND = impl.BACKEND

rot6d_to_mat = impl.rot6d_to_mat
rot6d_norms = impl.rot6d_norms
quat_from_expmap = impl.quat_from_expmap
quat_to_expmap = impl.quat_to_expmap
quat_mul = impl.quat_mul
quat_conj = impl.quat_conj
quat_to_mat = impl.quat_to_mat
quat_from_mat = impl.quat_from_mat
expmap_to_mat = impl.expmap_to_mat
mat_to_expmap = impl.mat_to_expmap
fk_chain = impl.fk_chain
sim_substep = impl.sim_substep
