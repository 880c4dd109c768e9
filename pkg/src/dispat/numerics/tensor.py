"""Dense float64 tensors with reverse-mode automatic differentiation.

Every op returns a new :class:`Tensor` holding a closure that maps the
output gradient to input gradients. :func:`backward` walks the recorded
graph in reverse topological order and then releases it, so a graph can be
differentiated exactly once.

Ops broadcast over leading (batch) axes the way numpy does; gradients are
summed back to the input shapes.
"""
import contextlib
import threading

import numpy as np

from ..errors import EmptyPoolError, NumericError, ShapeError, TapeError

# Large finite negative used for masked attention logits; keeps every
# intermediate finite while still yielding an exact 0 after softmax.
MASK_VALUE = -1e30

_state = threading.local()


def grad_enabled():
    return getattr(_state, "enabled", True)


@contextlib.contextmanager
def no_grad():
    prev = grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = prev


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward",
                 "_op", "_consumed", "__weakref__")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self._parents = ()
        self._backward = None
        self._op = None
        self._consumed = False

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def item(self):
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else None

    def numpy(self):
        return self.data

    def backward(self):
        backward(self)

    def __repr__(self):
        tag = f", op={self._op}" if self._op else ""
        return f"Tensor(shape={self.shape}{tag})"

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        if np.isscalar(other):
            return scale(self, other)
        return hadamard(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return scale(self, -1.0)


class Parameter(Tensor):
    """A named leaf tensor that always tracks gradients."""

    __slots__ = ("name",)

    def __init__(self, name, data):
        super().__init__(data, requires_grad=True)
        self.name = name
        self.grad = np.zeros_like(self.data)

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape})"


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _check_finite(out, op):
    if not np.all(np.isfinite(out)):
        raise NumericError(f"non-finite output from {op}")


def _make(out, op, parents, backward_fn):
    _check_finite(out, op)
    t = Tensor(out)
    t._op = op
    if grad_enabled() and any(p.requires_grad for p in parents):
        t.requires_grad = True
        t._parents = tuple(parents)
        t._backward = backward_fn
    return t


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _broadcast_shape(op, *shapes):
    try:
        return np.broadcast_shapes(*shapes)
    except ValueError:
        raise ShapeError(f"{op}: shapes {shapes} are not conformable") from None


# ---------------------------------------------------------------- elementwise

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("add", a.shape, b.shape)
    out = a.data + b.data

    def bw(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _make(out, "add", (a, b), bw)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("sub", a.shape, b.shape)
    out = a.data - b.data

    def bw(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _make(out, "sub", (a, b), bw)


def hadamard(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("hadamard", a.shape, b.shape)
    out = a.data * b.data

    def bw(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _make(out, "hadamard", (a, b), bw)


def scale(a, c):
    a = as_tensor(a)
    c = float(c)
    return _make(a.data * c, "scale", (a,), lambda g: (g * c,))


def relu(a):
    a = as_tensor(a)
    on = a.data > 0
    return _make(np.where(on, a.data, 0.0), "relu", (a,), lambda g: (g * on,))


def sigmoid(a):
    a = as_tensor(a)
    x = a.data
    # split by sign so exp never overflows
    e = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return _make(out, "sigmoid", (a,), lambda g: (g * out * (1.0 - out),))


def log(a):
    a = as_tensor(a)
    if np.any(a.data <= 0):
        raise NumericError("log of non-positive value")
    x = a.data
    return _make(np.log(x), "log", (a,), lambda g: (g / x,))


def clamp(a, lo, hi):
    a = as_tensor(a)
    inside = (a.data >= lo) & (a.data <= hi)
    return _make(np.clip(a.data, lo, hi), "clamp", (a,), lambda g: (g * inside,))


def dropout(a, rate, rng, training=True):
    """Inverted dropout; identity outside training or when ``rate`` is 0."""
    a = as_tensor(a)
    if not training or rate <= 0.0:
        return a
    keep = (rng.random(a.shape) >= rate) / (1.0 - rate)
    return _make(a.data * keep, "dropout", (a,), lambda g: (g * keep,))


# ---------------------------------------------------------------- structural

def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    _broadcast_shape("matmul", a.shape[:-2], b.shape[:-2])
    out = np.matmul(a.data, b.data)

    def bw(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _make(out, "matmul", (a, b), bw)


def transpose(a, axes=None):
    """Swap the last two axes, or permute by ``axes``."""
    a = as_tensor(a)
    if axes is None:
        if a.ndim < 2:
            raise ShapeError("transpose needs at least 2 dims")
        axes = tuple(range(a.ndim - 2)) + (a.ndim - 1, a.ndim - 2)
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    return _make(np.transpose(a.data, axes), "transpose", (a,),
                 lambda g: (np.transpose(g, inv),))


def reshape(a, shape):
    a = as_tensor(a)
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: {a.shape} -> {shape}") from None
    return _make(out, "reshape", (a,), lambda g: (g.reshape(a.shape),))


def getitem(a, index):
    a = as_tensor(a)
    out = a.data[index]

    def bw(g):
        full = np.zeros_like(a.data)
        np.add.at(full, index, g)
        return (full,)

    return _make(np.array(out), "getitem", (a,), bw)


def take_rows(table, idx):
    """Gather rows of a 2-d ``table`` by an integer index array of any shape."""
    table = as_tensor(table)
    idx = np.asarray(idx, dtype=np.intp)
    if table.ndim != 2:
        raise ShapeError("take_rows expects a 2-d table")
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise ShapeError("take_rows: index out of range")

    def bw(g):
        full = np.zeros_like(table.data)
        np.add.at(full, idx.reshape(-1), g.reshape(-1, table.shape[1]))
        return (full,)

    return _make(table.data[idx], "take_rows", (table,), bw)


def concat_last(tensors):
    tensors = [as_tensor(t) for t in tensors]
    lead = {t.shape[:-1] for t in tensors}
    if len(lead) != 1:
        raise ShapeError(f"concat_last: leading shapes differ {sorted(lead)}")
    out = np.concatenate([t.data for t in tensors], axis=-1)
    bounds = np.cumsum([0] + [t.shape[-1] for t in tensors])

    def bw(g):
        return tuple(g[..., bounds[i]:bounds[i + 1]] for i in range(len(tensors)))

    return _make(out, "concat_last", tuple(tensors), bw)


def sum_all(a):
    a = as_tensor(a)
    return _make(np.array(a.data.sum()), "sum", (a,),
                 lambda g: (np.broadcast_to(g, a.shape).copy(),))


def sum_axis(a, axis):
    a = as_tensor(a)
    out = a.data.sum(axis=axis)
    return _make(out, "sum_axis", (a,),
                 lambda g: (np.broadcast_to(np.expand_dims(g, axis), a.shape).copy(),))


def mean_all(a):
    a = as_tensor(a)
    return scale(sum_all(a), 1.0 / a.data.size)


# ---------------------------------------------------------------- row-wise

def softmax_row(a):
    """Softmax over the last axis."""
    a = as_tensor(a)
    z = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=-1, keepdims=True)

    def bw(g):
        return (out * (g - (g * out).sum(axis=-1, keepdims=True)),)

    return _make(out, "softmax_row", (a,), bw)


def layer_norm_row(a, eps=1e-5, gain=None, bias=None):
    """Normalise the last axis to zero mean and unit (population) variance."""
    a = as_tensor(a)
    x = a.data
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    def bw(g):
        gm = g.mean(axis=-1, keepdims=True)
        gx = (g * xhat).mean(axis=-1, keepdims=True)
        return (inv * (g - gm - xhat * gx),)

    out = _make(xhat, "layer_norm_row", (a,), bw)
    if gain is not None:
        out = hadamard(out, gain)
    if bias is not None:
        out = add(out, bias)
    return out


def masked_mean_pool(h, mask, allow_empty=False):
    """Mean over the rows of ``h`` selected by ``mask``.

    ``h`` is ``(..., n, d)`` and ``mask`` is ``(..., n)``. An all-false mask
    raises :class:`EmptyPoolError` unless ``allow_empty`` is set, in which case
    the pooled vector is zero.
    """
    h = as_tensor(h)
    mask = np.asarray(mask, dtype=bool)
    if h.shape[:-1] != mask.shape:
        raise ShapeError(f"masked_mean_pool: H {h.shape} vs mask {mask.shape}")
    count = mask.sum(axis=-1, keepdims=True).astype(np.float64)
    if np.any(count == 0) and not allow_empty:
        raise EmptyPoolError("mask selects no rows")
    w = mask / np.maximum(count, 1.0)
    w = w[..., None]
    out = (h.data * w).sum(axis=-2)
    return _make(out, "masked_mean_pool", (h,),
                 lambda g: (np.expand_dims(g, -2) * w,))


def cosine(a, b, eps=0.0):
    """Cosine similarity over the last axis with numpy broadcasting.

    Positions where either vector has zero norm yield 0 and pass no gradient.
    """
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("cosine", a.shape, b.shape)
    x, y = np.broadcast_arrays(a.data, b.data)
    na = np.sqrt((x * x).sum(-1))
    nb = np.sqrt((y * y).sum(-1))
    ok = (na > eps) & (nb > eps)
    na_s = np.where(ok, na, 1.0)
    nb_s = np.where(ok, nb, 1.0)
    dot = (x * y).sum(-1)
    c = np.where(ok, dot / (na_s * nb_s), 0.0)

    def bw(g):
        gk = (g * ok)[..., None]
        inv = (1.0 / (na_s * nb_s))[..., None]
        cc = c[..., None]
        ga = gk * (y * inv - cc * x / (na_s ** 2)[..., None])
        gb = gk * (x * inv - cc * y / (nb_s ** 2)[..., None])
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _make(c, "cosine", (a, b), bw)


# ---------------------------------------------------------------- dispatch

_OPS = {
    "matmul": matmul,
    "add": add,
    "hadamard": hadamard,
    "relu": relu,
    "sigmoid": sigmoid,
    "softmax_row": softmax_row,
    "layer_norm_row": layer_norm_row,
    "concat_last": lambda *ts: concat_last(ts),
    "transpose": transpose,
    "scale": scale,
}


def forward_op(kind, *inputs, **kwargs):
    """Apply a primitive by name, e.g. ``forward_op("matmul", a, b)``."""
    try:
        fn = _OPS[kind]
    except KeyError:
        raise ValueError(f"unknown op kind {kind!r}") from None
    return fn(*inputs, **kwargs)


# ---------------------------------------------------------------- reverse pass

def backward(loss):
    """Populate ``.grad`` on every leaf reachable from the scalar ``loss``.

    Gradients accumulate into leaves; callers zero them between steps. The
    graph is released afterwards, and a second call raises :class:`TapeError`.
    """
    if loss._consumed:
        raise TapeError("backward already called on this graph; rebuild it")
    if loss.data.size != 1:
        raise ShapeError(f"loss must be scalar, got shape {loss.shape}")
    if not loss.requires_grad:
        raise TapeError("loss does not depend on any tensor requiring grad")

    order = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))

    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            if node.grad is None:
                node.grad = np.zeros_like(node.data)
            node.grad = node.grad + g
            continue
        for p, gp in zip(node._parents, node._backward(g)):
            if not p.requires_grad:
                continue
            if id(p) in grads:
                grads[id(p)] = grads[id(p)] + gp
            else:
                grads[id(p)] = gp

    for node in order:
        node._parents = ()
        node._backward = None
    loss._consumed = True
