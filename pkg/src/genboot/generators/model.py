"""One interface over the four generators: fit from a Dataset, sample m
synthetic rows, save/load as a text model file.

Model files are line-oriented ASCII: a short header (variant, dimension,
fitting stream), then the variant payload.  Empirical and smoothed payloads
embed the training data CSV verbatim; net-backed payloads embed the
bit-exact net blocks, so save -> load -> sample replays identically.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ..core import Dataset, RngStream, dataset_from_text, dataset_to_text, format_float
from .. import autodiff as ad
from .empirical import EmpiricalPayload, fit_empirical_payload, quantile_map, sample_empirical
from .smoothed import (
    SmoothedPayload,
    fit_smoothed_payload,
    sample_smoothed_payload,
    silverman_bandwidth,
)
from .gan import GanConfig, GanPayload, TrainingDivergedError, fit_gan_payload, sample_gan
from .flow import (
    FlowConfig,
    FlowPayload,
    FlowStep,
    fit_flow_payload,
    flow_log_density_payload,
    sample_flow,
)

_VARIANTS = ("empirical", "smoothed", "gan", "flow")


@dataclass(frozen=True)
class GeneratorModel:
    variant: str
    p: int
    payload: object
    fit_seed: tuple | None = None  # (seed, stream_id) when fitted from an RngStream

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")


def _seed_of(rng) -> tuple | None:
    if isinstance(rng, RngStream):
        return (rng.seed, rng.stream_id)
    return None


def fit_empirical(data: Dataset) -> GeneratorModel:
    return GeneratorModel("empirical", data.p, fit_empirical_payload(data))


def fit_smoothed(data: Dataset) -> GeneratorModel:
    return GeneratorModel("smoothed", data.p, fit_smoothed_payload(data))


def fit_gan(data: Dataset, cfg: GanConfig | None = None, rng=None) -> GeneratorModel:
    if rng is None:
        raise ValueError("fit_gan needs an rng")
    cfg = cfg or GanConfig()
    return GeneratorModel("gan", data.p, fit_gan_payload(data, cfg, rng), _seed_of(rng))


def fit_flow(data: Dataset, cfg: FlowConfig | None = None, rng=None) -> GeneratorModel:
    if rng is None:
        raise ValueError("fit_flow needs an rng")
    cfg = cfg or FlowConfig()
    return GeneratorModel("flow", data.p, fit_flow_payload(data, cfg, rng), _seed_of(rng))


def fit_generator(data: Dataset, method: str, gan_cfg=None, flow_cfg=None, rng=None) -> GeneratorModel:
    """Dispatch by method name; training methods consume the rng."""
    if method == "empirical":
        return fit_empirical(data)
    if method == "smoothed":
        return fit_smoothed(data)
    if method == "gan":
        return fit_gan(data, gan_cfg, rng)
    if method == "flow":
        return fit_flow(data, flow_cfg, rng)
    raise ValueError(f"unknown method {method!r}, want one of {_VARIANTS}")


def sample(model: GeneratorModel, m: int, rng) -> Dataset:
    """m i.i.d. rows from the fitted model; nets run without dropout."""
    if m < 0:
        raise ValueError("m must be >= 0")
    if model.variant == "empirical":
        return sample_empirical(model.payload, m, rng)
    if model.variant == "smoothed":
        return sample_smoothed_payload(model.payload, m, rng)
    if model.variant == "gan":
        return sample_gan(model.payload, m, rng)
    return sample_flow(model.payload, m, rng)


def sample_smoothed(model: GeneratorModel, m: int, rng) -> Dataset:
    if model.variant != "smoothed":
        raise ValueError("model is not a smoothed generator")
    return sample_smoothed_payload(model.payload, m, rng)


def flow_log_density(model, z):
    """Exact log-density of a flow model at z (accepts model or payload)."""
    payload = model.payload if isinstance(model, GeneratorModel) else model
    if not isinstance(payload, FlowPayload):
        raise ValueError("flow_log_density needs a flow model")
    return flow_log_density_payload(payload, z)


# ---------------------------------------------------------------------------
# model files
# ---------------------------------------------------------------------------


def _floats_line(tag: str, values) -> str:
    toks = " ".join(format_float(v) for v in np.asarray(values, dtype=np.float64).ravel())
    return f"{tag} {toks}".rstrip()


def _parse_floats(line: str, tag: str) -> np.ndarray:
    toks = line.split()
    if not toks or toks[0] != tag:
        raise ValueError(f"expected {tag!r} line, got {line!r}")
    return np.array([float(t) for t in toks[1:]])


def _embed_csv(lines: list, data: Dataset) -> None:
    csv_text = dataset_to_text(data)
    csv_lines = csv_text.splitlines()
    lines.append(f"data {len(csv_lines)}")
    lines.extend(csv_lines)


def _read_csv_block(it) -> Dataset:
    head = next(it).split()
    if head[0] != "data":
        raise ValueError("expected data block")
    count = int(head[1])
    return dataset_from_text("\n".join(next(it) for _ in range(count)))


def model_to_text(model: GeneratorModel) -> str:
    lines = ["genboot-model 1", f"variant {model.variant}", f"p {model.p}"]
    if model.fit_seed is None:
        lines.append("fit_seed none")
    else:
        lines.append(f"fit_seed {model.fit_seed[0]} {model.fit_seed[1]}")
    pl = model.payload
    if model.variant == "empirical":
        _embed_csv(lines, pl.data)
    elif model.variant == "smoothed":
        lines.append(_floats_line("bandwidth", pl.bandwidth))
        _embed_csv(lines, pl.data)
    elif model.variant == "gan":
        lines.append(f"noise_dim {pl.noise_dim}")
        lines.append(_floats_line("train_log", pl.train_log))
        lines.append(ad.net_to_text(pl.generator_net).rstrip("\n"))
        lines.append(ad.net_to_text(pl.critic_net).rstrip("\n"))
    else:
        lines.append(f"depth {len(pl.steps)}")
        lines.append(_floats_line("train_log", pl.train_log))
        for i, st in enumerate(pl.steps):
            lines.append(f"step {i} pass_first {int(st.pass_first)}")
            lines.append(_floats_line("actnorm_log_scale", st.log_scale))
            lines.append(_floats_line("actnorm_shift", st.shift))
            lines.append(_floats_line("linear", st.linear))
            lines.append(f"coupling {int(st.scale_net is not None)}")
            if st.scale_net is not None:
                lines.append(ad.net_to_text(st.scale_net).rstrip("\n"))
                lines.append(ad.net_to_text(st.shift_net).rstrip("\n"))
    lines.append("end genboot-model")
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> GeneratorModel:
    it = iter(text.splitlines())
    if next(it).strip() != "genboot-model 1":
        raise ValueError("not a model file (bad magic line)")
    variant = next(it).split()[1]
    p = int(next(it).split()[1])
    seed_toks = next(it).split()[1:]
    fit_seed = None if seed_toks == ["none"] else (int(seed_toks[0]), int(seed_toks[1]))

    if variant == "empirical":
        payload = EmpiricalPayload(data=_read_csv_block(it))
    elif variant == "smoothed":
        bw = _parse_floats(next(it), "bandwidth")
        payload = SmoothedPayload(data=_read_csv_block(it), bandwidth=bw)
    elif variant == "gan":
        noise_dim = int(next(it).split()[1])
        train_log = _parse_floats(next(it), "train_log").tolist()
        g_net = ad.net_from_text(it)
        d_net = ad.net_from_text(it)
        payload = GanPayload(
            generator_net=g_net, critic_net=d_net, noise_dim=noise_dim, train_log=train_log
        )
    elif variant == "flow":
        depth = int(next(it).split()[1])
        train_log = _parse_floats(next(it), "train_log").tolist()
        steps = []
        for i in range(depth):
            head = next(it).split()
            if head[0] != "step" or int(head[1]) != i:
                raise ValueError(f"malformed flow step header at {i}")
            pass_first = bool(int(head[3]))
            ls = _parse_floats(next(it), "actnorm_log_scale")
            mu = _parse_floats(next(it), "actnorm_shift")
            lin = _parse_floats(next(it), "linear").reshape(p, p)
            has_coupling = bool(int(next(it).split()[1]))
            s_net = t_net = None
            if has_coupling:
                s_net = ad.net_from_text(it)
                t_net = ad.net_from_text(it)
            steps.append(
                FlowStep(
                    log_scale=ls,
                    shift=mu,
                    linear=lin,
                    pass_first=pass_first,
                    scale_net=s_net,
                    shift_net=t_net,
                )
            )
        payload = FlowPayload(steps=steps, p=p, train_log=train_log)
    else:
        raise ValueError(f"unknown variant {variant!r} in model file")

    if next(it).strip() != "end genboot-model":
        raise ValueError("missing model file terminator")
    return GeneratorModel(variant, p, payload, fit_seed)


def save_model(model: GeneratorModel, path) -> None:
    with open(path, "w") as fh:
        fh.write(model_to_text(model))


def load_model(path) -> GeneratorModel:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path) as fh:
        return model_from_text(fh.read())


# ---------------------------------------------------------------------------
# CLI-facing training options: plain key=value text
# ---------------------------------------------------------------------------

_OPTION_TYPES = {
    "gen_steps": int,
    "critic_steps": int,
    "lambda": float,
    "lr": float,
    "dropout": float,
    "flow_depth": int,
    "flow_steps": int,
    "seed": int,
}


def parse_training_options(text: str) -> dict:
    """Parse `key=value` lines (blank lines and #-comments allowed)."""
    opts = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"expected key=value, got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in _OPTION_TYPES:
            raise ValueError(f"unknown training option {key!r}")
        opts[key] = _OPTION_TYPES[key](val)
    return opts


def training_options_to_text(opts: dict) -> str:
    lines = []
    for key in _OPTION_TYPES:
        if key in opts:
            val = opts[key]
            lines.append(f"{key}={format_float(val) if isinstance(val, float) else val}")
    return "\n".join(lines) + "\n" if lines else ""


def gan_config_from_options(opts: dict, base: GanConfig | None = None) -> GanConfig:
    base = base or GanConfig()
    return GanConfig(
        gen_steps=opts.get("gen_steps", base.gen_steps),
        critic_steps=opts.get("critic_steps", base.critic_steps),
        penalty=opts.get("lambda", base.penalty),
        lr=opts.get("lr", base.lr),
        beta1=base.beta1,
        beta2=base.beta2,
        dropout=opts.get("dropout", base.dropout),
        width=base.width,
        depth=base.depth,
    )


def flow_config_from_options(opts: dict, base: FlowConfig | None = None) -> FlowConfig:
    base = base or FlowConfig()
    return FlowConfig(
        steps=opts.get("flow_steps", base.steps),
        depth=opts.get("flow_depth", base.depth),
        lr=opts.get("lr", base.lr),
        beta1=base.beta1,
        beta2=base.beta2,
        coupling_width=base.coupling_width,
        coupling_depth=base.coupling_depth,
    )
