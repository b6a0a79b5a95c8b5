"""End-to-end acceptance gate.

One test per criterion; each prints a single pass/fail line with capture
suspended, so a plain pytest run still shows the per-criterion outcome.
"""

import json
import math
from contextlib import contextmanager

import numpy as np

from conftest import multiset_gap
from fracstab.cli import main
from fracstab.control import (
    ControlGains,
    make_controlled,
    toda2_prop41_classify,
    verify_convergence,
)
from fracstab.integrator import IntegrationConfig, convergence_probe, integrate, mittag_leffler
from fracstab.stability import (
    Verdict,
    analyze,
    critical_order,
    eigenvalues,
    find_equilibria,
    jacobian,
    matignon_classify,
)
from fracstab.systems import (
    EquilibriumState,
    lipschitz_bound,
    make_system,
    toda2_controlled,
    toda_lattice,
)


@contextmanager
def criterion(capfd, num, desc):
    outcome = "FAIL"
    try:
        yield
        outcome = "PASS"
    finally:
        with capfd.disabled():
            print(f"criterion {num}: {outcome} - {desc}", flush=True)


def family_point(m):
    return EquilibriumState(x=np.array([0.0, m, 0.0]), residual=0.0)


def test_criterion_1_uncontrolled_spectrum_and_verdict(capfd):
    rng = np.random.default_rng(101)
    with criterion(capfd, 1, "uncontrolled spectrum {0, -m, -k} and Unstable verdict, 100 samples"):
        for _ in range(100):
            m = float(rng.uniform(-2.0, 2.0))
            k = float(rng.uniform(-2.0, 2.0))
            while abs(k) < 1e-6:
                k = float(rng.uniform(-2.0, 2.0))
            sysk = toda2_controlled(k)
            for q in (0.1, 0.5, 0.9):
                rep = analyze(sysk, family_point(m), q)
                assert rep.verdict is Verdict.UNSTABLE, (m, k, q)
                assert multiset_gap(rep.eigenvalues, [0.0, -m, -k]) < 1e-8, (m, k)


def test_criterion_2_closed_form_matches_generic_pipeline(capfd):
    rng = np.random.default_rng(202)
    qs = (0.25, 0.5, 0.75, 0.99)
    with criterion(capfd, 2, "closed-form classifier vs argument test, 10^4 tuples x 4 orders"):
        checked = 0
        while checked < 10**4:
            k, c1, c2, m = (float(v) for v in rng.uniform(-2.0, 2.0, 4))
            if min(abs(k), abs(c1), abs(c2), abs(m), abs(c1 - m)) < 1e-6:
                continue
            expected, _ = toda2_prop41_classify(k, c1, c2, m)
            loop = make_controlled(
                toda2_controlled(k), family_point(m), ControlGains(np.array([c1, c2, 0.0]))
            )
            J = jacobian(loop.system, loop.x_e.x)
            eigs = eigenvalues(J)
            for q in qs:
                rep = matignon_classify(eigs, q, matrix=J)
                assert rep.verdict is expected, (k, c1, c2, m, q)
            checked += 1


def test_criterion_3_reference_gain_cases(capfd):
    cases = [
        (0.4, -0.02, -0.3, Verdict.ASYMPTOTICALLY_STABLE),
        (1.0, 0.02, -0.3, Verdict.UNSTABLE),
        (-0.25, -0.02, -0.3, Verdict.UNSTABLE),
    ]
    with criterion(capfd, 3, "three reference gain settings classified exactly"):
        for k, c1, c2, expected in cases:
            loop = make_controlled(
                toda2_controlled(k), family_point(0.0), ControlGains(np.array([c1, c2, 0.0]))
            )
            rep = analyze(loop.system, loop.x_e, 0.9)
            assert rep.verdict is expected, (k, c1, c2)
            closed_form, _ = toda2_prop41_classify(k, c1, c2, 0.0)
            assert closed_form is expected
            if expected is Verdict.ASYMPTOTICALLY_STABLE:
                assert rep.critical_order == 2.0


def test_criterion_4_integrator_against_series_solution(capfd):
    relax = make_system(1, lambda x: -x, jac=lambda x: np.array([[-1.0]]))
    cfg = IntegrationConfig(h=1e-3, t_end=1.0)
    with criterion(capfd, 4, "scalar relaxation at t=1: error < 1e-3 (q<1), < 1e-5 (q=1)"):
        assert abs(mittag_leffler(0.5, -1.0) - math.e * math.erfc(1.0)) < 1e-12
        for q in (0.3, 0.5, 0.8):
            traj = integrate(relax, q, np.array([1.0]), cfg)
            assert abs(traj.states[-1, 0] - mittag_leffler(q, -1.0)) < 1e-3, q
        traj = integrate(relax, 1.0, np.array([1.0]), cfg)
        assert abs(traj.states[-1, 0] - math.exp(-1.0)) < 1e-5


def test_criterion_5_convergence_orders(capfd):
    relax = make_system(1, lambda x: -x, jac=lambda x: np.array([[-1.0]]))
    hs = [0.02, 0.01, 0.005, 0.0025]
    with criterion(capfd, 5, "empirical order >= 1.0 at q=0.5 and 2.0 +/- 0.3 at q=1"):
        half = convergence_probe(relax, 0.5, np.array([1.0]), hs)
        assert half.order_estimate >= 1.0, half.order_estimate
        one = convergence_probe(relax, 1.0, np.array([1.0]), hs)
        assert abs(one.order_estimate - 2.0) <= 0.3, one.order_estimate


def test_criterion_6_closed_loop_trajectories(capfd):
    x0 = np.array([0.1, 0.1, 0.1])
    cfg = IntegrationConfig(h=0.01, t_end=40.0)
    with criterion(capfd, 6, "stabilized run settles (< 0.05, shrinking tail); unstable run does not"):
        good = make_controlled(
            toda2_controlled(0.4), family_point(0.0), ControlGains(np.array([-0.02, -0.3, 0.0]))
        )
        check = verify_convergence(good, 0.9, x0, cfg)
        assert check.converged, check.final_distance
        assert check.final_distance < 0.05
        assert check.monotone_tail
        bad = make_controlled(
            toda2_controlled(1.0), family_point(0.0), ControlGains(np.array([0.02, -0.3, 0.0]))
        )
        check = verify_convergence(bad, 0.9, x0, cfg)
        assert check.diverged or check.final_distance > 0.05, check.final_distance


def test_criterion_7_lipschitz_certificate(capfd):
    rng = np.random.default_rng(707)
    x0 = np.array([0.0, 1.0, 0.0])
    delta, k = 1.0, 1.0
    sysk = toda2_controlled(k)
    with criterion(capfd, 7, "growth bound L ~ 8.16228 holds on 10^4 random pairs, zero violations"):
        L = lipschitz_bound(x0, delta, k)
        assert abs(L - 8.16228) < 1e-4

        def sample():
            u = rng.normal(size=3)
            return x0 + delta * rng.uniform() ** (1.0 / 3.0) * u / np.linalg.norm(u)

        violations = 0
        for _ in range(10**4):
            x, y = sample(), sample()
            lhs = np.linalg.norm(sysk.f(x) - sysk.f(y))
            if lhs > L * np.linalg.norm(x - y):
                violations += 1
        assert violations == 0, violations


def test_criterion_8_module_invariants(capfd):
    rng = np.random.default_rng(808)
    with criterion(capfd, 8, "spectral, classification, and feedback invariants hold"):
        # conjugate closure of computed spectra
        for _ in range(200):
            n = int(rng.integers(1, 9))
            M = rng.normal(size=(n, n))
            eigs = eigenvalues(M)
            cplx = [z for z in eigs if z.imag != 0.0]
            scale = 1.0 + max((abs(z) for z in eigs), default=0.0)
            assert multiset_gap(cplx, [z.conjugate() for z in cplx]) < 1e-8 * scale

        # verdict monotone in the order, and consistent with the critical order
        for _ in range(200):
            n = int(rng.integers(1, 6))
            eigs = [complex(rng.uniform(-2, 2), rng.uniform(-2, 2)) for _ in range(n)]
            if any(abs(l) < 1e-6 for l in eigs):
                continue
            q_t = critical_order(eigs)
            unstable_seen = False
            for q in (0.15, 0.35, 0.55, 0.75, 0.95):
                if abs(q - q_t) < 1e-6:
                    continue
                verdict = matignon_classify(eigs, q).verdict
                expected = (
                    Verdict.ASYMPTOTICALLY_STABLE if q < q_t else Verdict.UNSTABLE
                )
                assert verdict is expected
                if verdict is Verdict.UNSTABLE:
                    unstable_seen = True
                else:
                    assert not unstable_seen

        # closing the loop shifts the Jacobian diagonally and keeps the target
        sysk = toda2_controlled(0.4)
        c = np.array([-0.02, -0.3, 0.0])
        loop = make_controlled(sysk, family_point(0.0), ControlGains(c))
        for _ in range(100):
            x = rng.uniform(-3.0, 3.0, 3)
            np.testing.assert_allclose(
                jacobian(loop.system, x), jacobian(sysk, x) + np.diag(c), atol=1e-8
            )
        np.testing.assert_allclose(loop.system.f(loop.x_e.x), np.zeros(3), atol=1e-14)

        # finite differences agree with the analytic Jacobian
        bare = make_system(3, sysk.f)
        for _ in range(20):
            x = rng.uniform(-2.0, 2.0, 3)
            np.testing.assert_allclose(jacobian(bare, x), sysk.jac(x), atol=1e-5)

        # equilibrium search lands on a certified family point near its seed
        lattice = toda_lattice(3)
        roots = find_equilibria(lattice, [[0.02, -0.01, 0.3, 0.1, -0.2]])
        assert len(roots) == 1 and roots[0].residual < 1e-10
        assert np.linalg.norm(roots[0].x[:2]) < 1e-6


def _write_config(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


def test_criterion_9_cli_determinism_and_exit_codes(tmp_path, capfd):
    case1 = {
        "model": {"name": "toda2_controlled", "k": 0.4, "c1": -0.02, "c2": -0.3, "m": 0.0},
        "q": 0.9,
        "x0": [0.1, 0.1, 0.1],
        "h": 0.01,
        "t_end": 40.0,
    }
    case2 = dict(case1, model={"name": "toda2_controlled", "k": 1.0, "c1": 0.02, "c2": -0.3})
    case3 = dict(case1, model={"name": "toda2_controlled", "k": -0.25, "c1": -0.02, "c2": -0.3})
    sweep_point = {
        "model": {"name": "toda2", "k": 1.0, "m": 0.0},
        "q": 0.9,
        "sweep": {
            "c1": {"min": 0.02, "max": 0.02, "step": 1.0},
            "c2": {"min": -0.3, "max": -0.3, "step": 1.0},
        },
    }
    sweep_grid = {
        "model": {"name": "toda2", "k": 0.4, "m": 0.0},
        "q": 0.5,
        "sweep": {
            "c1": {"min": -1.0, "max": 1.0, "step": 0.1},
            "c2": {"min": -1.0, "max": 1.0, "step": 0.1},
        },
    }
    cfg = {
        "sim1": _write_config(tmp_path / "sim1.json", case1),
        "stab1": _write_config(tmp_path / "stab1.json", case1),
        "stab2": _write_config(tmp_path / "stab2.json", case2),
        "stab3": _write_config(tmp_path / "stab3.json", case3),
        "sw_pt": _write_config(tmp_path / "sw_pt.json", sweep_point),
        "sw_grid": _write_config(tmp_path / "sw_grid.json", sweep_grid),
    }
    with criterion(capfd, 9, "CLI runs are byte-deterministic with the contract exit codes"):
        outputs = {}
        for tag in ("a", "b"):
            root = tmp_path / tag
            assert main(["simulate", "--config", cfg["sim1"], "--out", str(root / "sim1")]) == 0
            assert main(["stability", "--config", cfg["stab1"], "--out", str(root / "st1")]) == 0
            assert main(["stability", "--config", cfg["stab2"], "--out", str(root / "st2")]) == 4
            assert main(["stability", "--config", cfg["stab3"], "--out", str(root / "st3")]) == 4
            assert main(["sweep", "--config", cfg["sw_pt"], "--out", str(root / "swp")]) == 0
            assert main(["sweep", "--config", cfg["sw_grid"], "--out", str(root / "swg")]) == 0
            outputs[tag] = {
                rel: (root / rel).read_bytes()
                for rel in (
                    "sim1/trajectory.csv",
                    "st1/report.json",
                    "st1/report.txt",
                    "st2/report.json",
                    "st2/report.txt",
                    "st3/report.json",
                    "st3/report.txt",
                    "swp/sweep.csv",
                    "swg/sweep.csv",
                )
            }
        assert outputs["a"] == outputs["b"]

        report1 = json.loads(outputs["a"]["st1/report.json"].decode())
        assert report1["verdict"] == "AsymptoticallyStable"
        assert report1["critical_order"] == 2.0

        point_rows = outputs["a"]["swp/sweep.csv"].decode().splitlines()
        assert point_rows[0] == "c1,c2,verdict,q_tilde"
        assert len(point_rows) == 2 and "Unstable" in point_rows[1]

        grid_rows = outputs["a"]["swg/sweep.csv"].decode().splitlines()[1:]
        assert len(grid_rows) == 441
        for row in grid_rows:
            c1_s, c2_s, verdict, _ = row.split(",")
            c1_v, c2_v = float(c1_s), float(c2_s)
            stabilizing = verdict != "Unstable"
            expected = c1_v < -1e-9 and c2_v < -1e-9
            assert stabilizing == expected, row
