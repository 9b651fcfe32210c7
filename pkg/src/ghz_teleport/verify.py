"""Invariant suites run by ``ghz-teleport verify``.

Each check draws from its own generator derived from the master seed, so a
failing check can be rerun alone and the table does not depend on order.
Checks call into the modules through their attributes, which keeps them
sensitive to patched (faulty) implementations.
"""
from __future__ import annotations

import math
import traceback
from dataclasses import dataclass

import numpy as np

from . import analytics, bases, protocol, statevec

SCALES = {
    "quick": {"states": 200, "params": 50, "trials": 20_000, "triples": 20_000, "grid": 100, "inputs": 50},
    "full": {"states": 1000, "params": 200, "trials": 100_000, "triples": 100_000, "grid": 200, "inputs": 100},
}
Z_THRESHOLD = 4.0


class CheckFailed(AssertionError):
    pass


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise CheckFailed(msg)


def random_complex(rng: np.random.Generator, low: float = 0.2, high: float = 5.0) -> complex:
    """Log-uniform modulus in [low, high], uniform phase."""
    r = math.exp(rng.uniform(math.log(low), math.log(high)))
    return complex(r * np.exp(1j * rng.uniform(0, 2 * math.pi)))


def random_canonical(rng: np.random.Generator, size: int) -> np.ndarray:
    """(size, 3) canonical weight triples."""
    w = rng.uniform(0.0, 0.5, size=(size, 3))
    w = np.where(w == 0.0, 0.5, w)
    w[:, 1:] = np.sort(w[:, 1:], axis=1)
    return w


def check_unitary_norm(rng, s):
    worst = 0.0
    for _ in range(s["states"]):
        state = statevec.random_ket(3, rng)
        targets = list(rng.permutation(3)[:2])
        out = statevec.apply_unitary(state, statevec.random_unitary(4, rng), targets)
        worst = max(worst, abs(np.linalg.norm(out.amplitudes) - 1.0))
    _require(worst < 1e-12, f"norm drift {worst:.2e}")
    return f"max norm drift {worst:.1e}"


def check_measurement_completeness(rng, s):
    worst = 0.0
    for _ in range(s["states"]):
        state = statevec.random_ket(3, rng)
        u = statevec.random_unitary(4, rng).entries
        basis = statevec.OrthonormalBasis(tuple(statevec.Ket(row) for row in u))
        probs = statevec.outcome_probabilities(state, basis, [2, 0])
        worst = max(worst, abs(probs.sum() - 1.0))
    _require(worst < 1e-10, f"probability sum off by {worst:.2e}")
    return f"max deviation {worst:.1e}"


def check_product_factorization(rng, s):
    worst = 0.0
    for _ in range(s["states"]):
        a, b = statevec.random_ket(1, rng), statevec.random_ket(2, rng)
        u = statevec.random_unitary(4, rng).entries
        basis = statevec.OrthonormalBasis(tuple(statevec.Ket(row) for row in u))
        joint = statevec.outcome_probabilities(statevec.tensor(a, b), basis, [1, 2])
        alone = statevec.outcome_probabilities(b, basis, [0, 1])
        worst = max(worst, float(np.max(np.abs(joint - alone))))
    _require(worst < 1e-12, f"factorization broken by {worst:.2e}")
    return f"max deviation {worst:.1e}"


def check_basis_orthonormality(rng, s):
    worst = 0.0
    for _ in range(s["params"]):
        for basis in (bases.bell_basis(random_complex(rng)), bases.x_basis(random_complex(rng))):
            mat = np.array([v.amplitudes for v in basis.vectors])
            worst = max(worst, float(np.max(np.abs(mat.conj() @ mat.T - np.eye(len(mat))))))
    _require(worst < 1e-12, f"Gram deviation {worst:.2e}")
    return f"max Gram deviation {worst:.1e}"


def check_decomposition_identity(rng, s):
    worst = 0.0
    for _ in range(s["params"]):
        cfg = bases.ChannelConfig.three_party(*(random_complex(rng) for _ in range(3)))
        state = statevec.random_ket(1, rng)
        joint = protocol.prepare_joint(state, cfg)
        basis = analytics.measurement_basis(cfg)
        residuals = statevec.project_outcomes(joint, basis, [0, 1, 2])
        rebuilt = sum(np.kron(v.amplitudes, r) for v, r in zip(basis.vectors, residuals))
        worst = max(worst, float(np.max(np.abs(rebuilt - joint.amplitudes))))
    _require(worst < 1e-12, f"reconstruction error {worst:.2e}")
    return f"max reconstruction error {worst:.1e}"


def _branch_fidelities(cfg, state, lookup):
    residuals = analytics.branch_residuals(cfg, state)
    alpha, beta = state.amplitudes
    fids, total = [], 0.0
    for (bell, xs), r in zip(protocol.all_branches(cfg.L), residuals):
        prob = float(np.sum(np.abs(r) ** 2))
        total += prob
        if prob < 1e-300:
            continue
        pauli, coeff = lookup(bell, xs, cfg)
        predicted = protocol.PAULI[pauli] @ np.array([alpha * coeff.c, beta * coeff.d])
        fids.append(statevec.fidelity(statevec.make_ket(r), statevec.make_ket(predicted)))
    return fids, total


def check_branch_table(rng, s):
    worst_fid, worst_sum = 1.0, 0.0
    for _ in range(s["params"]):
        cfg = bases.ChannelConfig.three_party(*(random_complex(rng) for _ in range(3)))
        state = statevec.random_ket(1, rng)
        for lookup in (protocol.three_party_coefficients, protocol.branch_coefficients):
            fids, total = _branch_fidelities(cfg, state, lookup)
            worst_fid = min(worst_fid, *fids)
            worst_sum = max(worst_sum, abs(total - 1.0))
    _require(worst_fid >= 1 - 1e-10, f"residual fidelity {worst_fid!r}")
    _require(worst_sum < 1e-10, f"branch probabilities sum off by {worst_sum:.2e}")
    return f"min fidelity 1-{1 - worst_fid:.1e}, sum deviation {worst_sum:.1e}"


def check_lparty_table(rng, s):
    worst = 1.0
    for L in (4, 5):
        for _ in range(max(5, s["params"] // 10)):
            cfg = bases.ChannelConfig(
                n=random_complex(rng), m=random_complex(rng), b_list=[random_complex(rng) for _ in range(L - 2)], L=L
            )
            fids, _ = _branch_fidelities(cfg, statevec.random_ket(1, rng), protocol.branch_coefficients)
            worst = min(worst, *fids)
    _require(worst >= 1 - 1e-10, f"multi-party residual fidelity {worst!r}")
    return f"min fidelity 1-{1 - worst:.1e}"


def check_input_independence(rng, s):
    products = []
    for _ in range(s["inputs"]):
        alpha, beta = statevec.random_ket(1, rng).amplitudes
        products.append([r.conversion_times_joint for r in analytics.branch_profile(2, 1, 1, alpha, beta)])
    products = np.array(products)
    spread = float(np.max(products.std(axis=0)))
    total = float(products.sum(axis=1).mean())
    _require(spread < 1e-10, f"per-branch spread {spread:.2e}")
    _require(abs(total - 0.4) < 1e-12, f"summed value {total!r} != 0.4")
    return f"max spread {spread:.1e}, sum {total:.15f}"


def check_oracle_chain(rng, s):
    worst = 0.0
    for _ in range(s["params"]):
        n, m, b = (random_complex(rng) for _ in range(3))
        cfg = bases.ChannelConfig.three_party(n, m, b)
        values = [
            analytics.success_probability(n, m, b),
            analytics.success_probability_weights(analytics.weights_from_params(n, m, b)),
            sum(r.conversion_times_joint for r in analytics.branch_profile(n, m, b)),
            analytics.lparty_success_oracle(cfg),
            analytics.lparty_success_closed_form(cfg),
        ]
        worst = max(worst, max(values) - min(values))
    _require(worst < 1e-12, f"closed forms disagree by {worst:.2e}")
    return f"max disagreement {worst:.1e}"


def check_monte_carlo(rng, s):
    zs, min_fid = [], 1.0
    configs = [bases.ChannelConfig.three_party(2, 1, 1), bases.ChannelConfig.uniform(2, 1, 1, 4)]
    configs += [bases.ChannelConfig.three_party(*(random_complex(rng) for _ in range(3))) for _ in range(3)]
    for cfg in configs:
        report = protocol.run_trials(cfg, s["trials"], seed=int(rng.integers(2**63)))
        p = analytics.analytic_success(cfg)
        sigma = math.sqrt(p * (1 - p) / report.trials)
        zs.append((report.empirical_p - p) / sigma)
        if report.min_success_fidelity is not None:
            min_fid = min(min_fid, report.min_success_fidelity)
    worst = max(abs(z) for z in zs)
    _require(worst <= Z_THRESHOLD, f"|z| = {worst:.2f} exceeds {Z_THRESHOLD}")
    _require(min_fid >= 1 - 1e-9, f"success fidelity {min_fid!r}")
    return f"max |z| {worst:.2f}, min success fidelity 1-{1 - min_fid:.1e}"


def check_symmetries(rng, s):
    worst = 0.0
    for xi, zeta, eta in rng.uniform(0.0, 1.0, size=(s["triples"] // 10, 3)):
        base = analytics._p_weights(xi, zeta, eta)
        for image in ((1 - xi, zeta, eta), (xi, 1 - zeta, eta), (xi, zeta, 1 - eta), (xi, eta, zeta)):
            worst = max(worst, abs(analytics._p_weights(*image) - base))
    _require(worst <= 1e-15, f"symmetry broken by {worst:.2e}")
    return f"max deviation {worst:.1e}"


def check_region_coverage(rng, s):
    counts = {label: 0 for label in analytics.RegionLabel}
    worst, ties = 0.0, 0
    for triple in random_canonical(rng, s["triples"]):
        w = analytics.SquaredWeights(*triple)
        region = analytics.classify_region(w)
        counts[region.label] += 1
        ties += region.on_boundary
        worst = max(worst, abs(analytics.regional_formula(region, w) - analytics.success_probability_weights(w)))
    _require(worst < 1e-12, f"regional formula off by {worst:.2e}")
    summary = ", ".join(f"{k.value}={v}" for k, v in counts.items())
    return f"{summary}, ties={ties}, max formula deviation {worst:.1e}"


def excluded_systems(xi: np.ndarray, zeta: np.ndarray, eta: np.ndarray) -> dict[str, np.ndarray]:
    """Masks of points satisfying each inequality pair ruled out on the canonical domain."""
    xc, zc, ec = 1 - xi, 1 - zeta, 1 - eta
    first = xi * zeta * ec > xc * zc * eta
    second_gt = xi * zc * eta > xc * zeta * ec
    second_lt = xi * zc * eta < xc * zeta * ec
    third = xc * zeta * eta > xi * zc * ec
    return {
        "first>second>": first & second_gt,
        "second>third>": second_gt & third,
        "first>second<": first & second_lt,
    }


def check_excluded_systems(rng, s):
    w = random_canonical(rng, s["triples"])
    hits = {k: int(v.sum()) for k, v in excluded_systems(w[:, 0], w[:, 1], w[:, 2]).items()}
    _require(not any(hits.values()), f"excluded systems satisfied: {hits}")
    return f"{len(w)} triples, no excluded system satisfied"


def check_grid_maximum(rng, s):
    details = []
    for xi in (0.05, 0.1, 0.2, 0.3, 0.4, 0.5):
        best = analytics.grid_search_max(xi, s["grid"])
        target = analytics.max_success_probability(xi)
        _require(best.p_star <= target + 1e-12, f"xi={xi}: grid max {best.p_star!r} exceeds {target!r}")
        _require(abs(best.p_star - target) <= 1e-2, f"xi={xi}: grid max {best.p_star!r} far from {target!r}")
        _require(best.region.admits(analytics.RegionLabel.F), f"xi={xi}: argmax in {best.region.label.value}")
        details.append(f"{xi}:{best.p_star:.4f}")
    return " ".join(details)


def check_balanced_bases(rng, s):
    worst = 0.0
    for r in np.exp(rng.uniform(math.log(1e-3), math.log(1e3), size=100)):
        xi = analytics.weights_from_params(r, 1, 1).xi
        worst = max(worst, abs(analytics.success_probability(r, 1, 1) - 2 * min(xi, 1 - xi)))
    _require(worst < 1e-12, f"m=b=1 deviates from 2 min(xi, 1-xi) by {worst:.2e}")
    return f"max deviation {worst:.1e}"


CHECKS = [
    ("unitary preserves norm", check_unitary_norm),
    ("measurement completeness", check_measurement_completeness),
    ("product factorization", check_product_factorization),
    ("basis orthonormality", check_basis_orthonormality),
    ("decomposition identity", check_decomposition_identity),
    ("three-party branch table", check_branch_table),
    ("multi-party branch table", check_lparty_table),
    ("input independence", check_input_independence),
    ("closed-form oracle chain", check_oracle_chain),
    ("Monte Carlo vs closed form", check_monte_carlo),
    ("weight symmetries", check_symmetries),
    ("region coverage", check_region_coverage),
    ("excluded inequality systems", check_excluded_systems),
    ("grid maximum", check_grid_maximum),
    ("balanced bases", check_balanced_bases),
]


def run_checks(seed: int = 0, scale: str = "quick") -> list[CheckResult]:
    if scale not in SCALES:
        raise ValueError(f"unknown scale {scale!r}")
    sizes = SCALES[scale]
    streams = np.random.SeedSequence(seed).spawn(len(CHECKS))
    results = []
    for (name, fn), stream in zip(CHECKS, streams):
        try:
            detail = fn(np.random.default_rng(stream), sizes)
            results.append(CheckResult(name, True, detail))
        except CheckFailed as exc:
            results.append(CheckResult(name, False, str(exc)))
        except Exception as exc:  # a crashing check is a failed check
            last = traceback.extract_tb(exc.__traceback__)[-1]
            results.append(CheckResult(name, False, f"{type(exc).__name__}: {exc} ({last.name}:{last.lineno})"))
    return results


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}" for r in results]
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} checks passed")
    return "\n".join(lines)
