"""Affine autoregressive flow: depth-10 stack of (actnorm, invertible dense
linear, affine coupling), trained by exact maximum likelihood.

The forward map S sends data to base noise; sampling inverts it.  Each
coupling passes one contiguous half of the coordinates through unchanged
(alternating halves per step) and transforms the rest by exp(tanh(s))*x + t
with s, t produced by small tanh MLPs of the passed half; the tanh bound on
the log-scale keeps every block well conditioned early in training.

Log-density is exact: base log-density at S(z) plus the accumulated
log-|det| of actnorm scales, linear blocks, and coupling scales.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import Dataset, as_generator
from .. import autodiff as ad
from .gan import TrainingDivergedError

_LOG2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class FlowConfig:
    steps: int = 1000
    depth: int = 10
    lr: float = 5e-3
    beta1: float = 0.9
    beta2: float = 0.999
    coupling_width: int = 8
    coupling_depth: int = 3

    def __post_init__(self):
        if self.steps < 0 or self.depth < 1:
            raise ValueError("steps >= 0 and depth >= 1 required")
        if self.coupling_width < 1 or self.coupling_depth < 2:
            raise ValueError("coupling nets need width >= 1 and depth >= 2")


@dataclass
class FlowStep:
    log_scale: np.ndarray  # actnorm scale, (p,)
    shift: np.ndarray  # actnorm shift, (p,)
    linear: np.ndarray  # invertible (p, p)
    pass_first: bool  # True: cols [0, k) pass; False: cols [k, p) pass
    scale_net: ad.MlpNet | None
    shift_net: ad.MlpNet | None


@dataclass
class FlowPayload:
    steps: list
    p: int
    train_log: list = field(default_factory=list)


def _split_cols(p: int, pass_first: bool):
    """(pass range, transform range), both contiguous; k = ceil(p/2)."""
    k = (p + 1) // 2
    if pass_first:
        return (0, k), (k, p)
    return (k, p), (0, k)


def _random_orthogonal(p: int, gen) -> np.ndarray:
    a = gen.standard_normal((p, p))
    q, r = np.linalg.qr(a)
    d = np.sign(np.diag(r))
    d[d == 0.0] = 1.0
    return q * d


def init_flow(p: int, cfg: FlowConfig, rng) -> FlowPayload:
    """Identity-at-init stack: actnorm zeros, orthogonal linears,
    zero-output couplings."""
    gen = as_generator(rng)
    steps = []
    for i in range(cfg.depth):
        pass_first = i % 2 == 0
        (a0, a1), (b0, b1) = _split_cols(p, pass_first)
        pass_w, tr_w = a1 - a0, b1 - b0
        if tr_w == 0:
            s_net = t_net = None
        else:
            dims = [pass_w] + [cfg.coupling_width] * (cfg.coupling_depth - 1) + [tr_w]
            s_net = ad.init_uniform_net(dims, gen, activation="tanh", zero_last=True)
            t_net = ad.init_uniform_net(dims, gen, activation="tanh", zero_last=True)
        steps.append(
            FlowStep(
                log_scale=np.zeros(p),
                shift=np.zeros(p),
                linear=_random_orthogonal(p, gen),
                pass_first=pass_first,
                scale_net=s_net,
                shift_net=t_net,
            )
        )
    return FlowPayload(steps=steps, p=p, train_log=[])


# ---------------------------------------------------------------------------
# plain (untaped) passes
# ---------------------------------------------------------------------------


def flow_forward(payload: FlowPayload, z: np.ndarray):
    """Data -> base noise. Returns (u, per-sample log|det dS/dz|)."""
    x = np.asarray(z, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.shape[1] != payload.p:
        raise ValueError(f"points have dim {x.shape[1]}, flow has p={payload.p}")
    ld = np.zeros(x.shape[0])
    for st in payload.steps:
        x = x * np.exp(st.log_scale) + st.shift
        ld += st.log_scale.sum()
        sign, l_lin = np.linalg.slogdet(st.linear)
        if sign == 0.0:
            raise ArithmeticError("linear block is singular")
        x = x @ st.linear.T
        ld += l_lin
        if st.scale_net is not None:
            (a0, a1), (b0, b1) = _split_cols(payload.p, st.pass_first)
            kept = x[:, a0:a1]
            s = np.tanh(ad.mlp_forward_batch(st.scale_net, kept))
            t = ad.mlp_forward_batch(st.shift_net, kept)
            moved = x[:, b0:b1] * np.exp(s) + t
            x = np.hstack([kept, moved]) if st.pass_first else np.hstack([moved, kept])
            ld += s.sum(axis=1)
    if squeeze:
        return x[0], float(ld[0])
    return x, ld


def flow_inverse(payload: FlowPayload, u: np.ndarray) -> np.ndarray:
    """Base noise -> data; exact inverse of flow_forward block by block."""
    x = np.asarray(u, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    for st in reversed(payload.steps):
        if st.scale_net is not None:
            (a0, a1), (b0, b1) = _split_cols(payload.p, st.pass_first)
            if st.pass_first:
                kept, moved = x[:, : a1 - a0], x[:, a1 - a0 :]
            else:
                moved, kept = x[:, : b1 - b0], x[:, b1 - b0 :]
            s = np.tanh(ad.mlp_forward_batch(st.scale_net, kept))
            t = ad.mlp_forward_batch(st.shift_net, kept)
            orig = (moved - t) * np.exp(-s)
            full = np.empty_like(x)
            full[:, a0:a1] = kept
            full[:, b0:b1] = orig
            x = full
        x = np.linalg.solve(st.linear, x.T).T
        x = (x - st.shift) * np.exp(-st.log_scale)
    return x[0] if squeeze else x


def flow_log_density_payload(payload: FlowPayload, z):
    """Exact log-density of the flow's pushforward at z (vector or batch)."""
    u, ld = flow_forward(payload, z)
    if np.ndim(z) == 1:
        return float(-0.5 * payload.p * _LOG2PI - 0.5 * np.sum(u * u) + ld)
    return -0.5 * payload.p * _LOG2PI - 0.5 * np.sum(u * u, axis=1) + ld


def sample_flow(payload: FlowPayload, m: int, rng) -> Dataset:
    gen = as_generator(rng)
    if m == 0:
        return Dataset(np.empty((0, payload.p)))
    u = gen.standard_normal((m, payload.p))
    return Dataset(flow_inverse(payload, u))


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


def flow_params(payload: FlowPayload) -> list:
    """Flat trainable-parameter list in a fixed order (per step: actnorm
    log-scale, shift, linear, scale-net params, shift-net params)."""
    out = []
    for st in payload.steps:
        out.extend([st.log_scale, st.shift, st.linear])
        if st.scale_net is not None:
            out.extend(ad.net_params(st.scale_net))
            out.extend(ad.net_params(st.shift_net))
    return out


def flow_with_params(payload: FlowPayload, params: list) -> FlowPayload:
    steps = []
    i = 0
    for st in payload.steps:
        ls, mu, w = params[i], params[i + 1], params[i + 2]
        i += 3
        s_net = t_net = None
        if st.scale_net is not None:
            k = 2 * st.scale_net.depth
            s_net = ad.net_with_params(st.scale_net, params[i : i + k])
            i += k
            t_net = ad.net_with_params(st.shift_net, params[i : i + k])
            i += k
        steps.append(
            FlowStep(
                log_scale=ls,
                shift=mu,
                linear=w,
                pass_first=st.pass_first,
                scale_net=s_net,
                shift_net=t_net,
            )
        )
    return FlowPayload(steps=steps, p=payload.p, train_log=list(payload.train_log))


def _nll_and_grads(payload: FlowPayload, data: np.ndarray):
    """Full-batch negative mean log-likelihood and its parameter gradient,
    in flow_params order."""
    n, p = data.shape
    tape = ad.Tape()
    vars_per_step = []
    for st in payload.steps:
        ls = tape.leaf(st.log_scale)
        mu = tape.leaf(st.shift)
        w = tape.leaf(st.linear)
        nets = None
        if st.scale_net is not None:
            nets = (ad.taped_net(tape, st.scale_net), ad.taped_net(tape, st.shift_net))
        vars_per_step.append((ls, mu, w, nets, st.pass_first))

    h = ad.Var(None, data)
    logdet = None  # scalar Var: total log|det| summed over samples
    for ls, mu, w, nets, pass_first in vars_per_step:
        h = ad.add(ad.mul(h, ad.exp(ls)), mu)
        contrib = ad.mul(ad.reduce_sum(ls), float(n))
        h = ad.affine(h, w)
        contrib = ad.add(contrib, ad.mul(ad.logabsdet(w), float(n)))
        if nets is not None:
            (a0, a1), (b0, b1) = _split_cols(p, pass_first)
            kept = ad.take_cols(h, a0, a1)
            moved = ad.take_cols(h, b0, b1)
            (sw, sb), (tw, tb) = nets
            s = ad.tanh(ad.taped_mlp(tape, sw, sb, kept, "tanh"))
            t = ad.taped_mlp(tape, tw, tb, kept, "tanh")
            moved = ad.add(ad.mul(moved, ad.exp(s)), t)
            h = ad.hstack([kept, moved]) if pass_first else ad.hstack([moved, kept])
            contrib = ad.add(contrib, ad.reduce_sum(s))
        logdet = contrib if logdet is None else ad.add(logdet, contrib)

    nll = ad.add(
        ad.mul(ad.reduce_sum(ad.square(h)), 0.5 / n),
        ad.mul(logdet, -1.0 / n),
    )
    nll = ad.add(nll, 0.5 * p * _LOG2PI)
    if not np.isfinite(nll.value):
        raise ad.NonFiniteError("non-finite likelihood")
    tape.backward(nll)

    grads = []
    for ls, mu, w, nets, _ in vars_per_step:
        for v in (ls, mu, w):
            grads.append(v.grad if v.grad is not None else np.zeros_like(v.value))
        if nets is not None:
            for wv, bv in nets:
                for wvar, bvar in zip(wv, bv):
                    grads.append(wvar.grad if wvar.grad is not None else np.zeros_like(wvar.value))
                    grads.append(bvar.grad if bvar.grad is not None else np.zeros_like(bvar.value))
    value = float(nll.value)
    tape.release()
    return value, grads


def fit_flow_payload(data: Dataset, cfg: FlowConfig, rng) -> FlowPayload:
    """Maximum-likelihood training with full-batch Adam.

    train_log[k] is the NLL after k updates (entry 0 = at initialization),
    so the log has cfg.steps + 1 entries.
    """
    if data.n < 2:
        raise ValueError("flow fit needs n >= 2")
    gen = as_generator(rng)
    payload = init_flow(data.p, cfg, gen)
    params = flow_params(payload)
    state = ad.adam_init(params, cfg.lr, cfg.beta1, cfg.beta2)
    log = []
    for step in range(cfg.steps):
        try:
            nll, grads = _nll_and_grads(payload, data.values)
        except ad.NonFiniteError as err:
            raise TrainingDivergedError(step, str(err)) from err
        log.append(nll)
        params, state = ad.adam_step(state, params, grads)
        if not all(np.all(np.isfinite(q)) for q in params):
            raise TrainingDivergedError(step, "flow parameters are not finite")
        payload = flow_with_params(payload, params)
    try:
        final_nll, _ = _nll_and_grads(payload, data.values)
    except ad.NonFiniteError as err:
        raise TrainingDivergedError(cfg.steps, str(err)) from err
    log.append(final_nll)
    payload.train_log = log
    return payload
