"""Desk-scale acceptance runs: coverage bands for the four bootstrap
methods, the cube-root limit-law match, a compact property bundle, and
training-progress checks.

Each test prints one summary line per checked leg (run with -s to see them
live).  Tests are ordered cheap to expensive; the GAN coverage leg runs
for hours and sits last.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from genboot.autodiff import (
    MlpNet,
    loss_and_grad_params,
    mlp_forward_batch,
    mul,
    net_params,
    reduce_sum,
)
from genboot.core import DgpSpec, Dataset, RngStream, gen_iso_data
from genboot.estimators import maxmin_eval, pava_fit
from genboot.generators import (
    FlowConfig,
    GanConfig,
    fit_flow,
    fit_gan,
    fit_smoothed,
    flow_forward,
    flow_inverse,
    sample,
    silverman_bandwidth,
)
from genboot.generators.flow import flow_log_density_payload
from genboot.inference import TrialConfig, run_coverage, report_to_csv
from genboot.oracles import (
    ChernoffConfig,
    chernoff_limit_scale,
    chernoff_sample,
    isotonic_partition_oracle,
    ks_distance,
    w1_1d,
    w1_lp,
)

SEED = 2026


def _verdict(label: str, detail: str, ok: bool) -> None:
    print(f"[{label}] {detail}: {'PASS' if ok else 'FAIL'}", flush=True)


def _coverage(problem: str, method: str, n: int, boot: int, reps: int, **cfg_kwargs):
    cfg = TrialConfig(problem=problem, method=method, n=n, boot_reps=boot,
                      seed=SEED, **cfg_kwargs)
    return run_coverage(cfg, reps)


@pytest.fixture(scope="module")
def flow_model():
    data = gen_iso_data(DgpSpec("iso_regression", 150), RngStream(99, 0))
    return fit_flow(data, FlowConfig(steps=60), RngStream(99, 1))


@pytest.mark.acceptance
class TestPropertyBundle:
    """Criterion: the fast property suite, compact re-run at full tolerances."""

    def test_pava_equals_maxmin_identity(self):
        import random as pyrandom

        rnd = pyrandom.Random(314)
        for _ in range(200):
            n = rnd.randint(1, 12)
            xs = [Fraction(rnd.randint(0, 8)) for _ in range(n)]
            ys = [Fraction(rnd.randint(-8, 8)) for _ in range(n)]
            fit = pava_fit(xs, ys)
            x0 = rnd.choice(xs)
            assert fit.evaluate(x0) == maxmin_eval(xs, ys, x0)
        _verdict("properties", "PAVA = max-min identity, 200 exact instances", True)

    def test_pava_equals_partition_oracle(self):
        rng = np.random.default_rng(271)
        for _ in range(60):
            n = int(rng.integers(1, 9))
            ys = rng.integers(-5, 6, size=n).astype(float)
            fit = pava_fit(np.arange(n, dtype=float), ys)
            want = isotonic_partition_oracle(list(ys))
            got = [fit.evaluate(float(i)) for i in range(n)]
            np.testing.assert_allclose(got, want, atol=1e-12)
        _verdict("properties", "PAVA = partition QP oracle on 60 instances", True)

    def test_flow_round_trip(self, flow_model):
        pts = np.random.default_rng(1).uniform(-0.2, 1.2, size=(300, 2))
        u, _ = flow_forward(flow_model.payload, pts)
        back = flow_inverse(flow_model.payload, u)
        err = float(np.max(np.abs(back - pts)))
        ok = err <= 1e-8
        _verdict("properties", f"flow round trip max err {err:.2e}", ok)
        assert ok

    def test_flow_density_integrates_to_one(self, flow_model):
        grid = np.linspace(-1.5, 2.5, 400)
        xx, yy = np.meshgrid(grid, grid)
        pts = np.column_stack([xx.ravel(), yy.ravel()])
        dens = np.exp(flow_log_density_payload(flow_model.payload, pts)).reshape(400, 400)
        step = grid[1] - grid[0]
        mass = float(np.trapezoid(np.trapezoid(dens, dx=step, axis=1), dx=step))
        ok = abs(mass - 1.0) <= 0.01
        _verdict("properties", f"flow density mass {mass:.4f} within 1 +- 0.01", ok)
        assert ok

    def test_flow_log_density_matches_jacobian(self, flow_model):
        payload = flow_model.payload
        eps = 1e-6
        worst = 0.0
        for x in np.array([[0.4, 0.45], [0.7, 0.66], [0.2, 0.22]]):
            u, _ = flow_forward(payload, x)
            jac = np.empty((2, 2))
            for j in range(2):
                xp, xm = x.copy(), x.copy()
                xp[j] += eps
                xm[j] -= eps
                up, _ = flow_forward(payload, xp)
                um, _ = flow_forward(payload, xm)
                jac[:, j] = (up - um) / (2 * eps)
            want = (
                -np.log(2 * np.pi)
                - 0.5 * float(u @ u)
                + np.log(abs(np.linalg.det(jac)))
            )
            got = flow_log_density_payload(payload, x)
            worst = max(worst, abs(got / want - 1.0))
        ok = worst <= 1e-5
        _verdict("properties", f"flow log density vs numerical jacobian rel err {worst:.2e}", ok)
        assert ok

    def test_autodiff_gradients_match_fd(self):
        rng = np.random.default_rng(7)
        dims = [3, 5, 5, 2]
        ws = [rng.normal(0, 0.6, size=(dims[i + 1], dims[i])) for i in range(3)]
        bs = [rng.normal(0, 0.1, size=dims[i + 1]) for i in range(3)]
        net = MlpNet(layer_dims=dims, weights=ws, biases=bs, activation="tanh")
        x = rng.normal(size=(4, 3))

        def loss_fn(out):
            return reduce_sum(mul(out, out))

        _, grads = loss_and_grad_params(net, loss_fn, x)
        params = net_params(net)
        worst = 0.0
        eps = 1e-6
        for k, p in enumerate(params):
            flat = p.ravel()
            for idx in range(0, flat.size, max(1, flat.size // 5)):
                orig = flat[idx]
                for sgn in (+1, -1):
                    flat[idx] = orig + sgn * eps
                    out = mlp_forward_batch(net, x)
                    val = float(np.sum(out * out))
                    if sgn > 0:
                        up = val
                    else:
                        down = val
                flat[idx] = orig
                fd = (up - down) / (2 * eps)
                got = grads[k].ravel()[idx]
                rel = abs(got - fd) / max(1.0, abs(fd))
                worst = max(worst, rel)
        ok = worst < 1e-5
        _verdict("properties", f"autodiff vs FD worst rel err {worst:.2e}", ok)
        assert ok

    def test_w1_equals_lp_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(40):
            a = rng.normal(size=int(rng.integers(1, 7)))
            b = rng.normal(size=int(rng.integers(1, 7)))
            assert w1_1d(a, b) == pytest.approx(w1_lp(a, b), abs=1e-9)
        _verdict("properties", "w1_1d = LP coupling oracle on 40 instances", True)

    def test_smoothed_w1_within_bandwidth(self):
        rng = np.random.default_rng(23)
        data = Dataset(rng.normal(size=(200, 1)))
        model = fit_smoothed(data)
        draws = sample(model, 100000, RngStream(24, 0))
        h = float(silverman_bandwidth(data)[0])
        d = w1_1d(draws.values[:, 0], data.values[:, 0])
        ok = d <= h
        _verdict("properties", f"smoothed W1 {d:.4f} <= bandwidth {h:.4f}", ok)
        assert ok

    def test_coverage_csv_worker_invariant(self):
        cfg = TrialConfig(problem="iso", method="empirical", n=40, boot_reps=20, seed=3)
        a = report_to_csv(run_coverage(cfg, 4, workers=1))
        b = report_to_csv(run_coverage(cfg, 4, workers=2))
        ok = a == b
        _verdict("properties", "coverage CSV identical across workers", ok)
        assert ok


@pytest.mark.acceptance
class TestLimitLaw:
    def test_cube_root_pivots_match_chernoff(self):
        n, reps = 2000, 500
        pivots = np.empty(reps)
        for r in range(reps):
            data = gen_iso_data(DgpSpec("iso_regression", n), RngStream(SEED, r))
            fit = pava_fit(data.values[:, 0], data.values[:, 1])
            pivots[r] = n ** (1.0 / 3.0) * (fit.evaluate(0.5) - 0.5)
        scale = chernoff_limit_scale(3.3333e-5, 1.0)
        limit = scale * chernoff_sample(
            ChernoffConfig(t_max=3.0, delta=0.001, draws=20000), RngStream(SEED + 1, 0)
        )
        d = ks_distance(pivots, limit)
        ok = d <= 0.12
        _verdict("limit-law", f"KS(pivots, scaled limit draws) = {d:.4f} <= 0.12", ok)
        assert ok


@pytest.mark.acceptance
class TestTrainingProgress:
    def test_flow_nll_decreases(self):
        data = gen_iso_data(DgpSpec("iso_regression", 1000), RngStream(42, 0))
        model = fit_flow(data, FlowConfig(steps=300), RngStream(42, 1))
        log = model.payload.train_log
        ok = log[-1] < log[0]
        _verdict("training", f"flow NLL step0 {log[0]:.4f} -> step300 {log[-1]:.4f}", ok)
        assert ok

    @pytest.mark.slow
    def test_gan_critic_objective_drops(self):
        data = gen_iso_data(DgpSpec("iso_regression", 1000), RngStream(42, 0))
        model = fit_gan(data, GanConfig(gen_steps=300), RngStream(42, 2))
        log = model.payload.train_log
        early = float(np.mean(log[:10]))
        ok = log[-1] < early
        _verdict("training", f"critic loss step300 {log[-1]:.4f} < first-10 mean {early:.4f}", ok)
        assert ok


@pytest.mark.acceptance
@pytest.mark.slow
class TestIsotonicCoverage:
    def test_empirical_undercovers(self):
        rep = _coverage("iso", "empirical", n=1000, boot=500, reps=200)
        c = rep.coverage[0.90]
        ok = c <= 0.80
        _verdict("iso", f"empirical coverage90 = {c:.3f} <= 0.80", ok)
        assert ok

    def test_smoothed_valid(self):
        rep = _coverage("iso", "smoothed", n=1000, boot=500, reps=200)
        c = rep.coverage[0.90]
        ok = 0.83 <= c <= 0.99
        _verdict("iso", f"smoothed coverage90 = {c:.3f} in [0.83, 0.99]", ok)
        assert ok

    def test_flow_valid(self):
        rep = _coverage("iso", "flow", n=1000, boot=500, reps=200,
                        flow=FlowConfig(steps=300))
        c = rep.coverage[0.90]
        ok = 0.83 <= c <= 0.99
        _verdict("iso", f"flow coverage90 = {c:.3f} in [0.83, 0.99]", ok)
        assert ok


@pytest.mark.acceptance
@pytest.mark.slow
class TestOlsCoverage:
    def test_empirical_parity(self):
        rep = _coverage("ols", "empirical", n=500, boot=300, reps=100, p=24)
        c = rep.coverage[0.90]
        ok = 0.80 <= c <= 0.97
        _verdict("ols", f"empirical coverage90 = {c:.3f} in [0.80, 0.97]", ok)
        assert ok

    def test_flow_parity(self):
        rep = _coverage("ols", "flow", n=500, boot=300, reps=100, p=24,
                        flow=FlowConfig(steps=300))
        c = rep.coverage[0.90]
        ok = 0.80 <= c <= 0.98
        _verdict("ols", f"flow coverage90 = {c:.3f} in [0.80, 0.98]", ok)
        assert ok

    def test_gan_relaxed_band(self):
        rep = _coverage("ols", "gan", n=500, boot=300, reps=100, p=24,
                        gan=GanConfig(gen_steps=300))
        c = rep.coverage[0.90]
        ok = 0.75 <= c <= 1.00
        _verdict("ols", f"gan coverage90 = {c:.3f} in [0.75, 1.00]", ok)
        assert ok
