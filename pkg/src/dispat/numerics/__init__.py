import warnings

import numpy as np

from ..errors import DegenerateVectorWarning
from .gradcheck import GradCheckReport, grad_check
from .optim import Adam, AdamState, adam_step
from .tensor import (
    MASK_VALUE, Parameter, Tensor, add, backward, clamp, concat_last, cosine,
    dropout, forward_op, getitem, hadamard, layer_norm_row, log,
    masked_mean_pool, matmul, mean_all, no_grad, relu, reshape, scale,
    sigmoid, softmax_row, sub, sum_all, sum_axis, take_rows, transpose,
)


def cosine_similarity(a, b):
    """Cosine of two plain vectors; 0 with a warning if either is zero."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        warnings.warn("zero-norm vector in cosine", DegenerateVectorWarning, stacklevel=2)
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))
