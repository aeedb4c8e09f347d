"""Reverse-mode differentiation on an explicit tape, plus the MLP kit the
training loops are built from: forward passes with inverted dropout,
parameter and input gradients, an exact second-order path for the gradient
penalty, Adam, initializers, and a bit-exact text serialization.

Everything is float64 numpy.  The tape records array-valued primitive ops in
execution order; the backward sweep walks them once in reverse, which is a
reverse topological order by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NonFiniteError",
    "Var",
    "Tape",
    "MlpNet",
    "AdamState",
    "mlp_forward",
    "mlp_forward_batch",
    "dropout_masks",
    "grad_params",
    "grad_input",
    "grad_input_batch",
    "grad_params_of_input_grad",
    "adam_init",
    "adam_step",
    "init_gan_net",
    "init_uniform_net",
    "net_params",
    "net_with_params",
    "net_to_text",
    "net_from_text",
]


class NonFiniteError(ArithmeticError):
    """A forward or backward quantity left the reals (inf/nan)."""


# ---------------------------------------------------------------------------
# tape engine
# ---------------------------------------------------------------------------


class Var:
    """Array node. Constants carry tape=None and never accumulate gradient."""

    __slots__ = ("tape", "value", "grad")

    def __init__(self, tape, value):
        self.tape = tape
        self.value = value
        self.grad = None

    # operator sugar; every path funnels into the module-level primitives
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


class Tape:
    """Ordered op record: (output Var, backward closure)."""

    __slots__ = ("_ops",)

    def __init__(self):
        self._ops = []

    def leaf(self, value) -> Var:
        return Var(self, np.asarray(value, dtype=np.float64))

    def push(self, out: Var, bwd) -> Var:
        self._ops.append((out, bwd))
        return out

    def backward(self, loss: Var) -> None:
        """Seed d(loss)/d(loss)=1 and sweep the record once, last op first."""
        if np.size(loss.value) != 1:
            raise ValueError("backward needs a scalar loss")
        loss.grad = np.ones_like(loss.value)
        for out, bwd in reversed(self._ops):
            if out.grad is not None:
                bwd(out.grad)

    def release(self) -> None:
        """Unlink the op record once gradients have been read off.

        Recorded Vars point at the tape and the backward closures point at
        their input Vars, so a finished step's graph is one big reference
        cycle; dropping it is otherwise deferred to a full gc pass, which at
        training batch sizes means hundreds of MB of dead activations per
        step waiting around.  Leaf Vars are untouched.
        """
        for out, _ in self._ops:
            out.tape = None
            out.grad = None
        self._ops.clear()


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum g down to `shape`, undoing numpy broadcasting."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _acc(v, g) -> None:
    if not isinstance(v, Var) or v.tape is None:
        return
    g = _unbroadcast(np.asarray(g), v.value.shape)
    if v.grad is None:
        v.grad = g.copy()
    else:
        v.grad += g


def _wrap(x, tape) -> Var:
    if isinstance(x, Var):
        return x
    return Var(None, np.asarray(x, dtype=np.float64))


def _tape_of(*xs) -> Tape:
    for x in xs:
        if isinstance(x, Var) and x.tape is not None:
            return x.tape
    raise ValueError("no tape among operands")


def add(a, b) -> Var:
    t = _tape_of(a, b)
    a, b = _wrap(a, t), _wrap(b, t)
    out = Var(t, a.value + b.value)

    def bwd(g):
        _acc(a, g)
        _acc(b, g)

    return t.push(out, bwd)


def sub(a, b) -> Var:
    t = _tape_of(a, b)
    a, b = _wrap(a, t), _wrap(b, t)
    out = Var(t, a.value - b.value)

    def bwd(g):
        _acc(a, g)
        _acc(b, -g)

    return t.push(out, bwd)


def mul(a, b) -> Var:
    t = _tape_of(a, b)
    a, b = _wrap(a, t), _wrap(b, t)
    out = Var(t, a.value * b.value)

    def bwd(g):
        _acc(a, g * b.value)
        _acc(b, g * a.value)

    return t.push(out, bwd)


def _live(v) -> bool:
    return isinstance(v, Var) and v.tape is not None


def matmul(a, b) -> Var:
    t = _tape_of(a, b)
    a, b = _wrap(a, t), _wrap(b, t)
    out = Var(t, a.value @ b.value)

    def bwd(g):
        # skip the GEMM entirely for constant operands
        if _live(a):
            _acc(a, g @ b.value.T)
        if _live(b):
            _acc(b, a.value.T @ g)

    return t.push(out, bwd)


def affine(x, w, b=None) -> Var:
    """x @ w.T (+ b). Fused so one tape op covers a dense layer."""
    t = _tape_of(x, w, b)
    x, w = _wrap(x, t), _wrap(w, t)
    val = x.value @ w.value.T
    if b is not None:
        b = _wrap(b, t)
        val = val + b.value
    out = Var(t, val)

    def bwd(g):
        if _live(x):
            _acc(x, g @ w.value)
        if _live(w):
            _acc(w, g.T @ x.value)
        if b is not None and _live(b):
            _acc(b, g.sum(axis=0) if g.ndim == 2 else g)

    return t.push(out, bwd)


def tanh(a) -> Var:
    t = _tape_of(a)
    out = Var(t, np.tanh(a.value))

    def bwd(g):
        _acc(a, g * (1.0 - out.value * out.value))

    return t.push(out, bwd)


def relu(a) -> Var:
    t = _tape_of(a)
    out = Var(t, np.maximum(a.value, 0.0))

    def bwd(g):
        # subgradient 0 at the kink
        _acc(a, g * (a.value > 0.0))

    return t.push(out, bwd)


def exp(a) -> Var:
    t = _tape_of(a)
    out = Var(t, np.exp(a.value))

    def bwd(g):
        _acc(a, g * out.value)

    return t.push(out, bwd)


def log(a) -> Var:
    t = _tape_of(a)
    out = Var(t, np.log(a.value))

    def bwd(g):
        _acc(a, g / a.value)

    return t.push(out, bwd)


def square(a) -> Var:
    t = _tape_of(a)
    out = Var(t, a.value * a.value)

    def bwd(g):
        _acc(a, 2.0 * g * a.value)

    return t.push(out, bwd)


def reduce_sum(a, axis=None) -> Var:
    t = _tape_of(a)
    out = Var(t, np.sum(a.value, axis=axis))

    def bwd(g):
        if axis is None:
            _acc(a, np.broadcast_to(g, a.value.shape))
        else:
            _acc(a, np.broadcast_to(np.expand_dims(g, axis), a.value.shape))

    return t.push(out, bwd)


def reduce_mean(a, axis=None) -> Var:
    t = _tape_of(a)
    denom = a.value.size if axis is None else a.value.shape[axis]
    out = Var(t, np.sum(a.value, axis=axis) / denom)

    def bwd(g):
        if axis is None:
            _acc(a, np.broadcast_to(g / denom, a.value.shape))
        else:
            _acc(a, np.broadcast_to(np.expand_dims(g / denom, axis), a.value.shape))

    return t.push(out, bwd)


def take_cols(a, j0: int, j1: int) -> Var:
    """Column slice [:, j0:j1] of a 2-D node."""
    t = _tape_of(a)
    out = Var(t, a.value[:, j0:j1])

    def bwd(g):
        full = np.zeros_like(a.value)
        full[:, j0:j1] = g
        _acc(a, full)

    return t.push(out, bwd)


def hstack(parts) -> Var:
    t = _tape_of(*parts)
    parts = [_wrap(p, t) for p in parts]
    widths = [p.value.shape[1] for p in parts]
    out = Var(t, np.hstack([p.value for p in parts]))

    def bwd(g):
        j = 0
        for p, w in zip(parts, widths):
            _acc(p, g[:, j : j + w])
            j += w

    return t.push(out, bwd)


def logabsdet(a) -> Var:
    """log |det A| for a square matrix node; adjoint is g * A^{-T}."""
    t = _tape_of(a)
    sign, ld = np.linalg.slogdet(a.value)
    if sign == 0.0 or not np.isfinite(ld):
        raise NonFiniteError("singular matrix in logabsdet")
    out = Var(t, np.asarray(ld))

    def bwd(g):
        _acc(a, np.asarray(g) * np.linalg.inv(a.value).T)

    return t.push(out, bwd)


# ---------------------------------------------------------------------------
# MLP kit
# ---------------------------------------------------------------------------

_ACTIVATIONS = ("relu", "tanh", "identity")


@dataclass
class MlpNet:
    """Fully connected net: dims [q1, h1, ..., qL]; weights[l] is (out, in).

    `activation` applies to all hidden layers; the output layer is identity.
    Depth = number of affine layers = len(weights).
    """

    layer_dims: list
    weights: list
    biases: list
    activation: str = "tanh"
    output_activation: str = "identity"

    def __post_init__(self):
        dims = list(self.layer_dims)
        if len(dims) < 2:
            raise ValueError("need at least input and output dims")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.output_activation != "identity":
            raise ValueError("output activation is fixed to identity")
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ValueError("weights/biases must have len(layer_dims)-1 entries")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[l + 1], dims[l]):
                raise ValueError(f"weight {l} has shape {w.shape}, want {(dims[l + 1], dims[l])}")
            if b.shape != (dims[l + 1],):
                raise ValueError(f"bias {l} has shape {b.shape}, want {(dims[l + 1],)}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"non-finite parameters in layer {l}")

    @property
    def depth(self) -> int:
        return len(self.weights)


def _act_fn(name: str):
    if name == "relu":
        return lambda z: np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh
    return lambda z: z


def _act_prime_from_value(name: str, z, a):
    """Derivative in terms of pre-activation z and activation value a."""
    if name == "relu":
        return (z > 0.0).astype(np.float64)
    if name == "tanh":
        return 1.0 - a * a
    return np.ones_like(z)


def _act_second_from_value(name: str, z, a):
    if name == "tanh":
        return -2.0 * a * (1.0 - a * a)
    return np.zeros_like(z)


def dropout_masks(net: MlpNet, n_rows: int, rate: float, rng) -> list:
    """Inverted-dropout masks for each hidden layer: 0 or 1/(1-rate).

    Masks are per-sample, per-unit, resampled by the caller per forward pass.
    """
    from .core import as_generator

    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    gen = as_generator(rng)
    keep = 1.0 - rate
    masks = []
    for width in net.layer_dims[1:-1]:
        m = (gen.random((n_rows, width)) < keep).astype(np.float64) / keep
        masks.append(m)
    return masks


def mlp_forward_batch(net: MlpNet, x: np.ndarray, dropout_rate: float = 0.0, rng=None, masks=None) -> np.ndarray:
    """Plain forward pass on an (n, q1) batch; masks take precedence over rng."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.layer_dims[0]:
        raise ValueError(f"batch shape {x.shape} does not match input dim {net.layer_dims[0]}")
    if masks is None and dropout_rate > 0.0:
        if rng is None:
            raise ValueError("dropout needs an rng (training mode)")
        masks = dropout_masks(net, x.shape[0], dropout_rate, rng)
    act = _act_fn(net.activation)
    h = x
    last = net.depth - 1
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w.T + b
        if l < last:
            h = act(z)
            if masks is not None:
                h = h * masks[l]
        else:
            h = z
    return h


def mlp_forward(net: MlpNet, x, dropout_rate: float = 0.0, rng=None) -> np.ndarray:
    """Single-input forward pass; dropout only active when rng is supplied."""
    x = np.asarray(x, dtype=np.float64).ravel()
    rate = dropout_rate if rng is not None else 0.0
    out = mlp_forward_batch(net, x[None, :], rate, rng)
    return out[0]


def taped_net(tape: Tape, net: MlpNet):
    """Lift parameters onto a tape: ([W vars], [b vars])."""
    wv = [tape.leaf(w) for w in net.weights]
    bv = [tape.leaf(b) for b in net.biases]
    return wv, bv


def taped_mlp(tape: Tape, wvars, bvars, x, activation: str, masks=None) -> Var:
    """Forward pass as tape ops; raises NonFiniteError naming the bad layer."""
    h = x if isinstance(x, Var) else Var(None, np.asarray(x, dtype=np.float64))
    last = len(wvars) - 1
    for l, (w, b) in enumerate(zip(wvars, bvars)):
        z = affine(h, w, b)
        if not np.all(np.isfinite(z.value)):
            raise NonFiniteError(f"non-finite values at layer {l}")
        if l < last:
            if activation == "relu":
                h = relu(z)
            elif activation == "tanh":
                h = tanh(z)
            else:
                h = z
            if masks is not None:
                h = mul(h, masks[l])
        else:
            h = z
    return h


def _flatten_grads(wvars, bvars) -> list:
    out = []
    for w, b in zip(wvars, bvars):
        out.append(w.grad if w.grad is not None else np.zeros_like(w.value))
        out.append(b.grad if b.grad is not None else np.zeros_like(b.value))
    return out


def grad_params(net: MlpNet, loss_fn, batch, masks=None) -> list:
    """Reverse-mode gradient of a full-batch scalar loss w.r.t. parameters.

    `loss_fn` maps the (n, out_dim) output Var to a scalar Var using this
    module's ops.  Returns [dW0, db0, dW1, db1, ...].  An empty batch has
    zero loss weight, hence zero gradient.
    """
    x = batch.values if hasattr(batch, "values") else np.asarray(batch, dtype=np.float64)
    if x.shape[0] == 0:
        return [np.zeros_like(p) for p in net_params(net)]
    _, grads = loss_and_grad_params(net, loss_fn, x, masks)
    return grads


def loss_and_grad_params(net: MlpNet, loss_fn, x: np.ndarray, masks=None):
    tape = Tape()
    wv, bv = taped_net(tape, net)
    out = taped_mlp(tape, wv, bv, x, net.activation, masks)
    loss = loss_fn(out)
    if not np.all(np.isfinite(loss.value)):
        raise NonFiniteError("non-finite loss value")
    tape.backward(loss)
    loss_value = float(loss.value)
    grads = _flatten_grads(wv, bv)
    tape.release()
    return loss_value, grads


# -- input gradients (hand-rolled, vectorized; no tape overhead) -------------


def _forward_trace(net: MlpNet, x: np.ndarray, masks):
    """Forward pass keeping (pre-mask activation values, post-mask hiddens)."""
    act = _act_fn(net.activation)
    last = net.depth - 1
    hs = [x]  # H_{l-1} inputs per layer
    zs = []  # pre-activations
    avs = []  # activation values per hidden layer
    h = x
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w.T + b
        zs.append(z)
        if l < last:
            a = act(z)
            avs.append(a)
            h = a if masks is None else a * masks[l]
        else:
            h = z
        hs.append(h)
    return zs, avs, hs


def grad_input_batch(net: MlpNet, x: np.ndarray, masks=None) -> np.ndarray:
    """d net(x_i) / d x_i for every row of x; scalar-output nets only."""
    x = np.asarray(x, dtype=np.float64)
    if net.layer_dims[-1] != 1:
        raise ValueError("grad_input needs a scalar-output net")
    zs, avs, _ = _forward_trace(net, x, masks)
    g = np.ones((x.shape[0], 1))
    for l in range(net.depth - 1, -1, -1):
        if l < net.depth - 1:
            prime = _act_prime_from_value(net.activation, zs[l], avs[l])
            if masks is not None:
                prime = prime * masks[l]
            g = g * prime
        g = g @ net.weights[l]
    return g


def grad_input(net: MlpNet, x, masks=None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    return grad_input_batch(net, x[None, :], masks)[0]


def grad_params_of_input_grad(net: MlpNet, x: np.ndarray, cotangents: np.ndarray, masks=None) -> list:
    """Parameter gradient of phi(theta) = sum_i c_i . grad_x net(x_i).

    This is the second-order piece the gradient penalty needs, computed as
    forward-over-reverse: push the input-direction tangents c_i through a
    dual-number forward pass, then run one reverse sweep over the doubled
    computation.  Exact (up to the a.e. relu convention), no nested tapes.
    Returns grads in [dW0, db0, dW1, db1, ...] order.
    """
    x = np.asarray(x, dtype=np.float64)
    c = np.asarray(cotangents, dtype=np.float64)
    if c.shape != x.shape:
        raise ValueError("cotangents must match the input batch shape")
    if net.layer_dims[-1] != 1:
        raise ValueError("needs a scalar-output net")
    name = net.activation
    last = net.depth - 1

    zs, avs, hs = _forward_trace(net, x, masks)
    # tangent forward: hd[l] = d/deps H_l(x + eps*c)
    hd = [c]
    zds = []
    for l, w in enumerate(net.weights):
        zd = hd[-1] @ w.T
        zds.append(zd)
        if l < last:
            prime = _act_prime_from_value(name, zs[l], avs[l])
            ad = prime * zd
            hd.append(ad if masks is None else ad * masks[l])
        else:
            hd.append(zd)

    grads_w = [np.zeros_like(w) for w in net.weights]
    grads_b = [np.zeros_like(b) for b in net.biases]
    # phi = sum(tangent output); adjoints for (Z_l, Zdot_l)
    lam = np.zeros_like(zs[last])
    mu = np.ones_like(zds[last])
    for l in range(last, -1, -1):
        grads_w[l] += lam.T @ hs[l] + mu.T @ hd[l]
        grads_b[l] += lam.sum(axis=0)
        lam_h = lam @ net.weights[l]
        mu_h = mu @ net.weights[l]
        if l == 0:
            break
        k = l - 1  # hidden layer feeding this one
        prime = _act_prime_from_value(name, zs[k], avs[k])
        second = _act_second_from_value(name, zs[k], avs[k])
        if masks is not None:
            lam_h = lam_h * masks[k]
            mu_h = mu_h * masks[k]
        lam = prime * lam_h + second * zds[k] * mu_h
        mu = prime * mu_h
    out = []
    for gw, gb in zip(grads_w, grads_b):
        out.append(gw)
        out.append(gb)
    return out


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    lr: float
    beta1: float
    beta2: float
    eps: float
    m: list
    v: list
    t: int = 0

    def __post_init__(self):
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("betas must lie in [0, 1)")
        if self.t < 0:
            raise ValueError("t must be >= 0")


def adam_init(params, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    return AdamState(
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
        m=[np.zeros_like(p) for p in params],
        v=[np.zeros_like(p) for p in params],
        t=0,
    )


def adam_step(state: AdamState, params, grads):
    """One bias-corrected Adam update. Returns (new params, new state)."""
    if len(params) != len(state.m) or len(grads) != len(params):
        raise ValueError("parameter/gradient/state length mismatch")
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m2 = b1 * m + (1.0 - b1) * g
        v2 = b2 * v + (1.0 - b2) * (g * g)
        step = state.lr * (m2 / c1) / (np.sqrt(v2 / c2) + state.eps)
        new_p.append(p - step)
        new_m.append(m2)
        new_v.append(v2)
    return new_p, AdamState(lr=state.lr, beta1=b1, beta2=b2, eps=state.eps, m=new_m, v=new_v, t=t)


# ---------------------------------------------------------------------------
# initializers and parameter plumbing
# ---------------------------------------------------------------------------


_GAN_INIT_STD = 0.02  # weight entries iid gaussian with sd 0.02


def init_gan_net(dims, rng, activation: str = "relu") -> MlpNet:
    """Weights iid N(0, 0.02^2), biases exactly 0."""
    from .core import as_generator

    gen = as_generator(rng)
    dims = list(dims)
    ws, bs = [], []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        ws.append(gen.normal(0.0, _GAN_INIT_STD, size=(d_out, d_in)))
        bs.append(np.zeros(d_out))
    return MlpNet(layer_dims=dims, weights=ws, biases=bs, activation=activation)


def init_uniform_net(dims, rng, activation: str = "tanh", zero_last: bool = False) -> MlpNet:
    """Fan-in uniform init U[-1/sqrt(fan_in), +1/sqrt(fan_in)] for weights and
    biases; zero_last zeroes the output layer so the net starts as the zero
    map (used to make flow couplings start as the identity)."""
    from .core import as_generator

    gen = as_generator(rng)
    dims = list(dims)
    ws, bs = [], []
    n_layers = len(dims) - 1
    for l, (d_in, d_out) in enumerate(zip(dims[:-1], dims[1:])):
        bound = 1.0 / math.sqrt(d_in)
        if zero_last and l == n_layers - 1:
            ws.append(np.zeros((d_out, d_in)))
            bs.append(np.zeros(d_out))
        else:
            ws.append(gen.uniform(-bound, bound, size=(d_out, d_in)))
            bs.append(gen.uniform(-bound, bound, size=d_out))
    return MlpNet(layer_dims=dims, weights=ws, biases=bs, activation=activation)


def net_params(net: MlpNet) -> list:
    """Flat parameter list [W0, b0, W1, b1, ...] aliasing the net's arrays."""
    out = []
    for w, b in zip(net.weights, net.biases):
        out.append(w)
        out.append(b)
    return out


def net_with_params(net: MlpNet, params) -> MlpNet:
    ws = [np.asarray(params[2 * l]) for l in range(net.depth)]
    bs = [np.asarray(params[2 * l + 1]) for l in range(net.depth)]
    return MlpNet(layer_dims=list(net.layer_dims), weights=ws, biases=bs, activation=net.activation)


# ---------------------------------------------------------------------------
# text serialization
# ---------------------------------------------------------------------------


def net_to_text(net: MlpNet) -> str:
    from .core import format_float

    lines = ["mlpnet", f"activation {net.activation}", "dims " + " ".join(str(d) for d in net.layer_dims)]
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        lines.append(f"W{l} " + " ".join(format_float(v) for v in w.ravel()))
        lines.append(f"b{l} " + " ".join(format_float(v) for v in b))
    lines.append("end mlpnet")
    return "\n".join(lines) + "\n"


def net_from_text(text) -> MlpNet:
    """Parse net_to_text output (also accepts an iterator of lines, leaving
    it positioned after the net block, so nets can embed in larger files)."""
    lines = iter(text.splitlines()) if isinstance(text, str) else text
    first = next(lines).strip()
    if first != "mlpnet":
        raise ValueError(f"expected 'mlpnet' header, got {first!r}")
    activation = next(lines).split()[1]
    dims = [int(tok) for tok in next(lines).split()[1:]]
    ws, bs = [], []
    for l in range(len(dims) - 1):
        wtoks = next(lines).split()
        btoks = next(lines).split()
        if wtoks[0] != f"W{l}" or btoks[0] != f"b{l}":
            raise ValueError(f"malformed net block at layer {l}")
        ws.append(np.array([float(v) for v in wtoks[1:]]).reshape(dims[l + 1], dims[l]))
        bs.append(np.array([float(v) for v in btoks[1:]]))
    tail = next(lines).strip()
    if tail != "end mlpnet":
        raise ValueError("missing net block terminator")
    return MlpNet(layer_dims=dims, weights=ws, biases=bs, activation=activation)
