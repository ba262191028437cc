"""Kernel backend selection.

Prefers the compiled extension (``_fastcore``) and falls back to the
numpy implementation (``_purecore``).  Set ``BELFSC_PURE_PYTHON=1`` to
force the fallback, e.g. for the backend benchmark.
"""

import os

if os.environ.get("BELFSC_PURE_PYTHON"):
    from belfsc._kernels import _purecore as impl
else:
    try:
        from belfsc._kernels import _fastcore as impl  # type: ignore[no-redef]
    except ImportError:
        from belfsc._kernels import _purecore as impl  # type: ignore[no-redef]

BACKEND = impl.BACKEND_NAME

ln_gamma = impl.ln_gamma
digamma = impl.digamma
trigamma = impl.trigamma
ln_gamma_arr = impl.ln_gamma_arr
digamma_arr = impl.digamma_arr
trigamma_arr = impl.trigamma_arr
bayes_risk_batch = impl.bayes_risk_batch
kl_uniform_batch = impl.kl_uniform_batch
bel_grad_batch = impl.bel_grad_batch
