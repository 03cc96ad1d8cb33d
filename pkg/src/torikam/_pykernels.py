"""Pure numpy versions of the compiled kernels in ``_ckernels.pyx``.

Both implementations accumulate in the same order (outer index ascending) and
spell out complex multiplication as separately rounded real operations, so
they agree bitwise on IEEE hardware without fused multiply-add.
"""

import numpy as np


def conv_accumulate(ia, va, ib, vb, out):
    """``out[ia[i] + ib[j]] += va[i] * vb[j]`` for all pairs.

    ``ia``/``ib`` are flat offsets into ``out``; offsets in ``ib`` are distinct.
    """
    br, bi = np.ascontiguousarray(vb.real), np.ascontiguousarray(vb.imag)
    o = out.view(np.float64)
    for i in range(ia.shape[0]):
        ar, ai = va[i].real, va[i].imag
        k = 2 * (ia[i] + ib)
        o[k] += ar * br - ai * bi
        o[k + 1] += ar * bi + ai * br
