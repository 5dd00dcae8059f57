"""Self-contained verification suites, exposed both to the CLI and tests.

Each suite cross-checks a closed form against an independent oracle
(sampled suprema, quadrature, finite differences, Monte-Carlo lower
estimates) and returns a machine-readable verdict.
"""

from __future__ import annotations

import math

import numpy as np

from . import bounds as bounds_mod
from . import kernels, rademacher, trainer
from .network import GaussianHead, SmoothLeakyRelu


def _check(name: str, passed: bool, detail: str) -> dict:
    return {"name": name, "passed": bool(passed), "detail": detail}


def _verdict(suite: str, checks: list[dict]) -> dict:
    return {
        "suite": suite,
        "passed": all(c["passed"] for c in checks),
        "checks": checks,
    }


def suite_lemma1(
    num_matrices: int = 100, seed: int = 0, inject_error: bool = False
) -> dict:
    """Sampled density-ratio suprema never exceed the closed form.

    inject_error deliberately corrupts the closed form so failure
    reporting can be exercised.
    """
    rng = np.random.default_rng(seed)
    checks = []
    worst_gap = -math.inf
    worst_cover = math.inf
    for i in range(num_matrices):
        d = int(rng.integers(2, 7))
        w = rng.standard_normal((d, d))
        target = float(rng.uniform(0.1, 10.0))
        w *= target / bounds_mod.operator_norm(w)
        s = (d + 0.1) / 2.0
        closed = bounds_mod.density_ratio_bound(w, s)
        if inject_error:
            closed *= 0.5
        sampled = bounds_mod.density_ratio_grid_sup(w, s, s)
        worst_gap = max(worst_gap, sampled - closed)
        if target > 1.0:
            worst_cover = min(worst_cover, sampled / closed)
    checks.append(
        _check(
            "density-ratio closed form dominates sampled supremum",
            worst_gap <= 1e-9,
            f"worst sampled-minus-closed gap {worst_gap:.3e} (tolerance 1e-9)",
        )
    )
    checks.append(
        _check(
            "sampled supremum reaches 99% of closed form for expanding maps",
            worst_cover >= 0.99,
            f"worst coverage ratio {worst_cover:.6f}",
        )
    )
    return _verdict("lemma1", checks)


def suite_dominance(
    draws: int = 2000, candidates: int = 500, seeds: tuple[int, ...] = (0, 1, 2)
) -> dict:
    """MC lower estimates stay strictly below the closed-form class bound."""
    n = 20
    d = 2
    s = (d + 0.1) / 2.0
    C, D = 1.5, 0.5
    B = kernels.kernel_trace_bound(d, s)
    g_norm = kernels.gaussian_head_norm(d, s, 1.0)
    sigma_norm = bounds_mod.activation_opnorm_bound(SmoothLeakyRelu(), d)
    points = np.random.default_rng(1234).standard_normal((n, d))
    checks = []
    for depth in (1, 2):
        spec = rademacher.FunctionClassSpec(
            widths=(d,) * (depth + 1), constraint="inv", C=C, D=D
        )
        upper = rademacher.class_upper_bound(spec, n, s, B, g_norm, sigma_norm)
        for seed in seeds:
            lower = rademacher.empirical_rademacher_lower(
                points, spec, draws=draws, candidates=candidates, seed=seed
            )
            checks.append(
                _check(
                    f"L={depth} seed={seed}: MC lower < closed-form bound",
                    lower < upper,
                    f"lower={lower:.6f}, upper={upper:.6f}",
                )
            )
    return _verdict("dominance", checks)


def _finite_diff_ok(value_fn, params, grads, step, rel_tol, rng, coords_per_tensor=12):
    """Central finite differences on a random subset of coordinates."""
    worst = 0.0
    for p, g in zip(params, grads):
        flat_p = p.reshape(-1)
        flat_g = g.reshape(-1)
        size = flat_p.size
        idxs = rng.choice(size, size=min(coords_per_tensor, size), replace=False)
        for i in idxs:
            orig = flat_p[i]
            flat_p[i] = orig + step
            up = value_fn()
            flat_p[i] = orig - step
            down = value_fn()
            flat_p[i] = orig
            num = (up - down) / (2 * step)
            denom = max(abs(num), abs(flat_g[i]), 1e-8)
            worst = max(worst, abs(num - flat_g[i]) / denom)
    return worst


def suite_gradients(seed: int = 0, nets_per_arch: int = 5) -> dict:
    """Analytic loss/regularizer gradients vs central finite differences."""
    rng = np.random.default_rng(seed)
    checks = []
    for widths, head_loss, head in (
        ([3, 3, 6], "squared", GaussianHead()),
        ([6, 8, 8, 4], "squared", GaussianHead()),
    ):
        worst = 0.0
        for k in range(nets_per_arch):
            net = trainer.build_network(widths, head, seed=int(rng.integers(1 << 30)))
            for layer in net.layers:
                layer.bias = rng.standard_normal(layer.bias.shape) * 0.3
            X = rng.standard_normal((8, widths[0]))
            Y = rng.random(8)
            _, grads = trainer.loss_and_grads(net, X, Y, head_loss)
            params = [l.weight for l in net.layers] + [l.bias for l in net.layers]
            flat_grads = [g[0] for g in grads] + [g[1] for g in grads]
            worst = max(
                worst,
                _finite_diff_ok(
                    lambda: trainer.loss_and_grads(net, X, Y, head_loss)[0],
                    params, flat_grads, 1e-5, 1e-4, rng,
                ),
            )
        checks.append(
            _check(
                f"loss gradients {widths}",
                worst < 1e-4,
                f"worst relative error {worst:.3e} (tolerance 1e-4)",
            )
        )
    # regularizers, skipping nearly repeated top singular values
    worst = 0.0
    count = 0
    while count < 5:
        w = rng.standard_normal((6, 6))
        sv = np.linalg.svd(w, compute_uv=False)
        if sv[0] - sv[1] < 1e-3:
            continue
        count += 1
        _, g = trainer.regularizer_perlayer(w, 0.01, 0.01)
        worst = max(
            worst,
            _finite_diff_ok(
                lambda: trainer.regularizer_perlayer(w, 0.01, 0.01)[0],
                [w], [g], 1e-5, 1e-3, rng,
            ),
        )
    checks.append(
        _check(
            "per-layer regularizer gradient",
            worst < 1e-3,
            f"worst relative error {worst:.3e} (tolerance 1e-3)",
        )
    )
    return _verdict("gradients", checks)


def suite_kernels(seed: int = 0) -> dict:
    """Closed-form kernel constants vs quadrature, plus Gram positivity."""
    from scipy import integrate

    checks = []
    worst = 0.0
    for d, s in ((1, 1.0), (2, 1.55), (3, 2.0)):
        def radial(r, d=d, s=s):
            area = 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)
            return area * r ** (d - 1) / (1.0 + r * r) ** s

        quad_val, _ = integrate.quad(radial, 0.0, np.inf)
        closed = kernels.kernel_trace_bound(d, s) ** 2
        worst = max(worst, abs(closed - quad_val) / quad_val)
    checks.append(
        _check(
            "kernel diagonal closed form vs radial quadrature",
            worst < 1e-6,
            f"worst relative error {worst:.3e} (tolerance 1e-6)",
        )
    )
    worst = 0.0
    for r in np.linspace(0.05, 5.0, 20):
        val = kernels.sobolev_kernel([0.0], [r], 1, 1.0)
        ref = math.pi * math.exp(-r)
        worst = max(worst, abs(val - ref) / ref)
    checks.append(
        _check(
            "d=1 s=1 kernel equals pi*exp(-|x-y|)",
            worst < 1e-6,
            f"worst relative error {worst:.3e} (tolerance 1e-6)",
        )
    )
    rng = np.random.default_rng(seed)
    min_eig = math.inf
    for _ in range(10):
        d = int(rng.integers(1, 4))
        s = d / 2 + float(rng.uniform(0.1, 1.5))
        pts = rng.standard_normal((20, d)) * 2.0
        gram = kernels.sobolev_gram(pts, s)
        min_eig = min(min_eig, float(np.linalg.eigvalsh(gram)[0]))
    checks.append(
        _check(
            "Gram matrices positive semi-definite",
            min_eig >= -1e-8,
            f"minimum eigenvalue {min_eig:.3e} (tolerance -1e-8)",
        )
    )
    return _verdict("kernels", checks)


SUITES = {
    "lemma1": suite_lemma1,
    "dominance": suite_dominance,
    "gradients": suite_gradients,
    "kernels": suite_kernels,
}


def run_suites(names: list[str]) -> dict:
    verdicts = [SUITES[name]() for name in names]
    return {"passed": all(v["passed"] for v in verdicts), "suites": verdicts}
