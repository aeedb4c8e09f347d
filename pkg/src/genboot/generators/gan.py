"""WGAN-GP trainer: full-batch alternating Adam on generator and critic.

Per generator step the critic takes `critic_steps` updates minimizing
mean[D(fake)] - mean[D(real)] + penalty * mean[(||grad_x D(xhat)||_2 - 1)^2]
with xhat = eps*real + (1-eps)*fake, eps ~ U[0,1] per pair; the generator
then takes one update minimizing -mean[D(fake)].  Dropout is live on every
hidden layer of both nets during training and off for sampling.

The penalty's parameter gradient is the second-order piece: it reuses the
hand-derived forward-over-reverse path in `autodiff`, so no graph is ever
taped twice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import Dataset, RngStream, as_generator
from .. import autodiff as ad


class TrainingDivergedError(ArithmeticError):
    """Loss or activations left the reals; carries the failing step index."""

    def __init__(self, step: int, detail: str):
        super().__init__(f"training diverged at step {step}: {detail}")
        self.step = step


@dataclass(frozen=True)
class GanConfig:
    gen_steps: int = 2000
    critic_steps: int = 5
    penalty: float = 1.0
    lr: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.9
    dropout: float = 0.4
    width: int = 200
    depth: int = 6

    def __post_init__(self):
        if self.gen_steps < 0 or self.critic_steps < 1:
            raise ValueError("gen_steps >= 0 and critic_steps >= 1 required")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.width < 1 or self.depth < 2:
            raise ValueError("width >= 1 and depth >= 2 required")


@dataclass
class GanPayload:
    generator_net: ad.MlpNet
    critic_net: ad.MlpNet
    noise_dim: int
    train_log: list = field(default_factory=list)


def _net_dims(p_in: int, p_out: int, cfg: GanConfig) -> list:
    return [p_in] + [cfg.width] * (cfg.depth - 1) + [p_out]


def gradient_penalty(critic: ad.MlpNet, xhat: np.ndarray, masks=None):
    """Penalty value mean[(||g||-1)^2] and its exact parameter gradient."""
    g = ad.grad_input_batch(critic, xhat, masks)
    norms = np.linalg.norm(g, axis=1)
    resid = norms - 1.0
    value = float(np.mean(resid**2))
    n = xhat.shape[0]
    coef = 2.0 * resid / (n * (norms + 1e-12))
    grads = ad.grad_params_of_input_grad(critic, xhat, coef[:, None] * g, masks)
    return value, grads


def fit_gan_payload(data: Dataset, cfg: GanConfig, rng) -> GanPayload:
    """Train generator and critic on the full data batch.

    All randomness (inits, noise, dropout masks, interpolation eps) flows
    from `rng` in a fixed order, so a (data, cfg, stream) triple pins the
    fitted model bit-for-bit.
    """
    if data.n < 2:
        raise ValueError("GAN fit needs n >= 2")
    gen = as_generator(rng)
    n, p = data.n, data.p
    real = data.values

    g_net = ad.init_gan_net(_net_dims(p, p, cfg), gen)
    d_net = ad.init_gan_net(_net_dims(p, 1, cfg), gen)
    g_params = ad.net_params(g_net)
    d_params = ad.net_params(d_net)
    g_state = ad.adam_init(g_params, cfg.lr, cfg.beta1, cfg.beta2)
    d_state = ad.adam_init(d_params, cfg.lr, cfg.beta1, cfg.beta2)

    # signed mean weights for one concatenated [fake; real] critic pass
    sign = np.concatenate([np.full(n, 1.0 / n), np.full(n, -1.0 / n)])[:, None]
    train_log = []

    for step in range(cfg.gen_steps):
        try:
            critic_loss = 0.0
            for _ in range(cfg.critic_steps):
                u = gen.standard_normal((n, p))
                g_masks = ad.dropout_masks(g_net, n, cfg.dropout, gen) if cfg.dropout else None
                fake = ad.mlp_forward_batch(g_net, u, masks=g_masks)
                batch = np.vstack([fake, real])
                d_masks = ad.dropout_masks(d_net, 2 * n, cfg.dropout, gen) if cfg.dropout else None
                w_loss, w_grads = ad.loss_and_grad_params(
                    d_net, lambda out: ad.reduce_sum(ad.mul(out, sign)), batch, d_masks
                )
                eps = gen.random((n, 1))
                xhat = eps * real + (1.0 - eps) * fake
                p_masks = ad.dropout_masks(d_net, n, cfg.dropout, gen) if cfg.dropout else None
                p_value, p_grads = gradient_penalty(d_net, xhat, p_masks)
                grads = [wg + cfg.penalty * pg for wg, pg in zip(w_grads, p_grads)]
                d_params, d_state = ad.adam_step(d_state, d_params, grads)
                if not all(np.all(np.isfinite(q)) for q in d_params):
                    raise ad.NonFiniteError("critic parameters are not finite")
                d_net = ad.net_with_params(d_net, d_params)
                critic_loss = w_loss + cfg.penalty * p_value

            u = gen.standard_normal((n, p))
            g_masks = ad.dropout_masks(g_net, n, cfg.dropout, gen) if cfg.dropout else None
            d_masks = ad.dropout_masks(d_net, n, cfg.dropout, gen) if cfg.dropout else None
            tape = ad.Tape()
            gw, gb = ad.taped_net(tape, g_net)
            fake_var = ad.taped_mlp(tape, gw, gb, u, g_net.activation, g_masks)
            # critic parameters ride along as constants: gradient flows
            # through them into the generator but never accumulates on them
            out = ad.taped_mlp(
                tape,
                [ad.Var(None, w) for w in d_net.weights],
                [ad.Var(None, b) for b in d_net.biases],
                fake_var,
                d_net.activation,
                d_masks,
            )
            loss = ad.mul(ad.reduce_mean(out), -1.0)
            if not np.isfinite(loss.value):
                raise ad.NonFiniteError("generator loss is not finite")
            tape.backward(loss)
            g_grads = []
            for w, b in zip(gw, gb):
                g_grads.append(w.grad if w.grad is not None else np.zeros_like(w.value))
                g_grads.append(b.grad if b.grad is not None else np.zeros_like(b.value))
            tape.release()
            g_params, g_state = ad.adam_step(g_state, g_params, g_grads)
            if not all(np.all(np.isfinite(q)) for q in g_params):
                raise ad.NonFiniteError("generator parameters are not finite")
            g_net = ad.net_with_params(g_net, g_params)
        except ad.NonFiniteError as err:
            raise TrainingDivergedError(step, str(err)) from err
        if not np.isfinite(critic_loss):
            raise TrainingDivergedError(step, "critic loss is not finite")
        train_log.append(critic_loss)

    return GanPayload(generator_net=g_net, critic_net=d_net, noise_dim=p, train_log=train_log)


def sample_gan(payload: GanPayload, m: int, rng) -> Dataset:
    gen = as_generator(rng)
    p = payload.generator_net.layer_dims[-1]
    if m == 0:
        return Dataset(np.empty((0, p)))
    u = gen.standard_normal((m, payload.noise_dim))
    return Dataset(ad.mlp_forward_batch(payload.generator_net, u))
