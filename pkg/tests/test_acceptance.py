"""Acceptance criteria 1-8.

Each test prints one ``criterion N: PASS|FAIL`` line with its measured
quantity and runtime. Run standalone with ``python tests/test_acceptance.py``
or through pytest.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from test_stretching import CASE_SEED, random_input, random_plan, within_stderr  # noqa: E402

from cvstretch.bounds import negativity_sweep, plob_bound  # noqa: E402
from cvstretch.channels import ChannelKind, compose, make_channel  # noqa: E402
from cvstretch.finite_dim import (  # noqa: E402
    amplitude_damping,
    apply_kraus,
    simulate_stretching,
    stretch_check,
    weyl_channel,
)
from cvstretch.fock_sim import (  # noqa: E402
    apply_channel_fock,
    bell_project,
    distance,
    integrate_stretch,
    make_ket,
)
from cvstretch.stretching import achieved_channel, make_plan, predicted_output, simulate_locc_gaussian  # noqa: E402


def criterion_1(rng):
    worst = 0.0
    count = 0

    def check(got, want):
        nonlocal worst, count
        count += 1
        for a, b in ((got.K, want.K), (got.m, want.m), (got.alpha, want.alpha)):
            worst = max(worst, float(np.abs(a - b).max()))

    for _ in range(1000):
        e1, e2 = rng.uniform(0.01, 0.99, size=2)
        n1, n2 = rng.uniform(0, 2, size=2)
        check(
            compose(make_channel(ChannelKind.thermal_loss(e2, n2)), make_channel(ChannelKind.thermal_loss(e1, n1))),
            make_channel(ChannelKind.thermal_loss(e1 * e2, n1 + e1 * n2)),
        )
        check(
            compose(make_channel(ChannelKind.pure_loss(e2)), make_channel(ChannelKind.pure_loss(e1))),
            make_channel(ChannelKind.pure_loss(e1 * e2)),
        )
        xi = rng.uniform(0.1, 0.999)
        t = xi * xi
        n = rng.uniform(0, 2)
        kappa = rng.uniform(1, 5) / t  # kappa * xi^2 >= 1
        check(
            compose(make_channel(ChannelKind.pure_loss(t)), make_channel(ChannelKind.amplifier(kappa, n))),
            make_channel(ChannelKind.amplifier(kappa * t, n + kappa * (1 - t))),
        )
        kappa = rng.uniform(1, 5)
        check(
            compose(make_channel(ChannelKind.pure_loss(t)), make_channel(ChannelKind.amplifier(kappa / t, n))),
            make_channel(ChannelKind.amplifier(kappa, n + kappa * (1 - t) / t)),
        )
    return worst <= 1e-12, f"{count} relations, max deviation {worst:.1e}"


def criterion_2():
    worst = 0.0
    cases = 0
    grid = np.linspace(0.01, 0.99, 20)
    for eta in grid:
        for xi in grid:
            if xi * xi <= eta:
                continue
            cases += 1
            target = ChannelKind.pure_loss(eta)
            plan = make_plan(target, xi)
            worst = max(worst, abs(plan.resource_channel.eta - eta / xi**2))
            got, want = achieved_channel(plan), make_channel(target)
            for a, b in ((got.K, want.K), (got.m, want.m), (got.alpha, want.alpha)):
                worst = max(worst, float(np.abs(a - b).max()))
    return worst <= 1e-12, f"{cases} grid points, max deviation {worst:.1e}"


def criterion_3(rng):
    worst_weight = 0.0
    worst_fid = 0.0
    for _ in range(40):
        xi = rng.uniform(0.1, 0.9)
        z = rng.uniform(0, 1) * np.exp(2j * np.pi * rng.uniform())
        a0 = complex(*rng.uniform(-0.7, 0.7, size=2))
        beta = z - a0
        res = bell_project(beta, xi, make_ket("coherent", 40, alpha=a0).density())
        want = (1 - xi**2) / (2 * math.pi) * math.exp(-(1 - xi**2) * abs(z) ** 2)
        worst_weight = max(worst_weight, abs(res.weight - want) / want)
        fid = distance(res.state, make_ket("coherent", 40, alpha=xi * z).density(), "fidelity")
        worst_fid = max(worst_fid, 1 - fid)
    ok = worst_weight <= 1e-8 and worst_fid <= 1e-8
    return ok, f"max relative weight error {worst_weight:.1e}, max infidelity {worst_fid:.1e}"


def criterion_4():
    plan = make_plan(ChannelKind.pure_loss(0.5), 0.9)
    details = []
    ok = True
    for label, ket in (("coherent(0.8)", make_ket("coherent", 40, alpha=0.8)), ("fock(1)", make_ket("fock", 40, n=1))):
        rho = ket.density()
        res = integrate_stretch(plan, rho)
        td = distance(res.rho, apply_channel_fock(ChannelKind.pure_loss(0.5), rho))
        ok &= td <= 1e-3
        details.append(f"{label} trace distance {td:.1e} (step {res.grid.step:.3g})")
    return ok, ", ".join(details)


def criterion_5():
    kappa, xi = 1.5, 0.95
    n_tilde = kappa * (1 - xi**2) / xi**2
    plan = make_plan(ChannelKind.amplifier(kappa), xi)
    rho = make_ket("fock", 40, n=0).density()
    res = integrate_stretch(plan, rho)
    td = distance(res.rho, apply_channel_fock(ChannelKind.amplifier(kappa, n_tilde), rho))
    ok = td <= 2e-3 and n_tilde > 0 and abs(plan.achieved.excess_noise - n_tilde) < 1e-15
    return ok, f"N~ = {n_tilde:.6f}, trace distance {td:.1e}"


def criterion_6():
    rng = np.random.default_rng(CASE_SEED)
    passed = 0
    for case in range(20):
        plan, state = random_plan(rng), random_input(rng)
        res = simulate_locc_gaussian(plan, state, 100_000, seed=1000 + case)
        passed += within_stderr(res, predicted_output(plan, state))
    again = simulate_locc_gaussian(plan, state, 100_000, seed=1019)
    same = again.empirical_cov.tobytes() == res.empirical_cov.tobytes() and (
        again.empirical_mean.tobytes() == res.empirical_mean.tobytes()
    )
    return passed == 20 and same, f"{passed}/20 cases within 3 stderr, reproducible bytes: {same}"


def criterion_7(rng):
    worst = 0.0
    for d in (2, 3):
        kraus = weyl_channel(rng.dirichlet(np.ones(d * d)), d)
        cert = stretch_check(kraus, d)
        if not cert.stretchable:
            return False, f"Pauli channel in d = {d} not certified"
        for _ in range(50):
            g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            rho = g @ g.conj().T
            rho /= np.trace(rho).real
            out = simulate_stretching(kraus, rho, d, cert.corrections)
            worst = max(worst, float(np.abs(out - apply_kraus(kraus, rho)).max()))
    rejected = not stretch_check(amplitude_damping(0.5), 2).stretchable
    return worst <= 1e-12 and rejected, f"max deviation {worst:.1e}, amplitude damping rejected: {rejected}"


def criterion_8():
    b05, b99 = plob_bound(0.5), plob_bound(0.99)
    values_ok = b05 == 1.0 and abs(b99 - 6.643856) <= 1e-6
    axis = np.linspace(0.05, 0.95, 10)
    table = np.array([[r.log_negativity for r in negativity_sweep(e, 0.0, axis)] for e in axis])
    mono = bool(np.all(np.diff(table, axis=0) >= 0) and np.all(np.diff(table, axis=1) >= 0))
    return values_ok and mono, f"bound(0.5) = {b05:.9g}, bound(0.99) = {b99:.9g}, monotone 10x10: {mono}"


CRITERIA = [
    (1, "channel composition algebra", lambda: criterion_1(np.random.default_rng(1)), 1.0),
    (2, "loss plan parameters", criterion_2, 1.0),
    (3, "Bell projection closed form", lambda: criterion_3(np.random.default_rng(3)), 10.0),
    (4, "pure-loss stretching in Fock space", criterion_4, 300.0),
    (5, "amplifier stretching residual noise", criterion_5, 300.0),
    (6, "Monte-Carlo LOCC simulator", criterion_6, 60.0),
    (7, "finite-dimensional oracle", lambda: criterion_7(np.random.default_rng(7)), 5.0),
    (8, "bound values and sweep monotonicity", criterion_8, None),
]


def run_criterion(number, title, func, limit):
    start = time.perf_counter()
    ok, detail = func()
    elapsed = time.perf_counter() - start
    in_time = limit is None or elapsed < limit
    budget = f" (limit {limit:g} s)" if limit is not None else ""
    verdict = "PASS" if ok and in_time else "FAIL"
    line = f"criterion {number}: {verdict} {title}: {detail}; {elapsed:.2f} s{budget}"
    return ok and in_time, line


@pytest.mark.parametrize("number,title,func,limit", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(number, title, func, limit, capsys):
    ok, line = run_criterion(number, title, func, limit)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [run_criterion(*c) for c in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
