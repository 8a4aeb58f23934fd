import json
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq

from ksflow.dynamics import (
    TRAJECTORY_SCHEMA_VERSION,
    IntegratorOptions,
    PhaseState,
    direct_step,
    hamiltonian,
    ks_segment,
    propagate,
)
from ksflow.errors import AtSingularity, BudgetExceeded, LiftFailure
from ksflow.potential import free, multi_coulomb, yukawa

KEPLER = multi_coulomb([[0, 0, 0]], [-1.0])
PAIR = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]


def kepler_collision_time(lam, x0):
    # substitute r = u^2 to remove the endpoint behaviour at r = 0
    return quad(lambda u: u * u / math.sqrt(lam * u * u + 1.0), 0.0, math.sqrt(x0),
                epsabs=0.0, epsrel=1e-12)[0]


def radial_state(lam=0.5, x0=2.0):
    return PhaseState.of([x0, 0, 0], [-math.sqrt(lam + 1.0 / x0), 0, 0])


def test_hamiltonian_examples():
    assert hamiltonian(free(), PhaseState.of([0, 0, 0], [1, 0, 0])) == 1.0
    assert hamiltonian(KEPLER, PhaseState.of([1, 0, 0], [0, 1, 0])) == pytest.approx(0.0)
    with pytest.raises(AtSingularity):
        hamiltonian(KEPLER, PhaseState.of([0, 0, 0], [0, 1, 0]))


def test_direct_step_free_motion():
    s = direct_step(free(), PhaseState.of([1, 2, 3], [0.5, -1, 0.25]), 3.0)
    assert np.allclose(s.x, [1 + 3.0, 2 - 6.0, 3 + 1.5], rtol=1e-14)
    assert np.array_equal(s.xi, [0.5, -1, 0.25])


def test_direct_step_circular_orbit():
    state = PhaseState.of([1, 0, 0], [0, math.sqrt(0.5), 0])
    period = math.sqrt(2.0) * math.pi
    worst = 0.0
    for _ in range(100):
        state = direct_step(KEPLER, state, period / 100)
        worst = max(worst, abs(np.linalg.norm(state.x) - 1.0))
    assert worst <= 1e-9
    assert np.allclose(state.x, [1, 0, 0], atol=1e-8)


def test_direct_step_energy_drift_over_many_steps():
    state = PhaseState.of([1.5, 0, 0], [0.1, 0.6, 0.0])
    lam = hamiltonian(KEPLER, state)
    worst = 0.0
    for _ in range(1000):
        state = direct_step(KEPLER, state, 0.01)
        worst = max(worst, abs(hamiltonian(KEPLER, state) - lam) / max(abs(lam), 1))
    assert worst <= 1e-10


def test_free_propagation_single_segment():
    tr = propagate(free(), PhaseState.of([-5, 0.5, 0], [1, 0, 0]), 10.0)
    assert len(tr.segments) == 1 and tr.collisions == []
    assert np.allclose(tr.state_at(4.0).x, [3, 0.5, 0])


def test_kepler_radial_collision_and_backscatter():
    lam, x0 = 0.5, 2.0
    t_star = kepler_collision_time(lam, x0)
    tr = propagate(KEPLER, radial_state(lam, x0), 1.5 * t_star)
    assert len(tr.collisions) == 1
    c = tr.collisions[0]
    assert c.site == 0
    assert c.t0 == pytest.approx(t_star, rel=1e-8)
    assert np.allclose(c.v, [-1, 0, 0], atol=1e-10)
    for d in np.linspace(1e-3, t_star / 2, 25):
        a, b = tr.state_at(c.t0 + d), tr.state_at(c.t0 - d)
        assert np.allclose(a.x, b.x, atol=1e-6)
        assert np.allclose(a.xi, -b.xi, atol=1e-6)
    # momentum blows up on approach, like |x|^-1/2
    near = [tr.state_at(c.t0 - d) for d in (1e-3, 1e-6, 1e-9)]
    speeds = [np.linalg.norm(s.xi) for s in near]
    assert speeds[0] < speeds[1] < speeds[2] and speeds[2] > 5e2


def test_regularized_momentum_at_collision():
    lam = 0.5
    tr = propagate(KEPLER, radial_state(lam), 2.0)
    seg = next(s for s in tr.segments if s.chart == "ks")
    # t(s) is flat at the collision, so locate it in fictitious time through z.zeta
    s_guess = seg._s_at(tr.collisions[0].t0)
    s0 = brentq(lambda s: seg.sol(s)[1:5] @ seg.sol(s)[5:], s_guess - 1e-3, s_guess + 1e-3,
                xtol=1e-15)
    y = seg.sol(s0)
    assert np.linalg.norm(y[1:5]) < 1e-8
    assert y[5:] @ y[5:] / 4 == pytest.approx(1.0, rel=1e-8)


def test_repulsive_head_on_never_collides():
    spec = multi_coulomb([[0, 0, 0]], [1.0])
    tr = propagate(spec, PhaseState.of([3, 0, 0], [-1, 0, 0]), 10.0)
    assert tr.collisions == []
    # turning point at |x| = f / lambda = 0.75
    assert min(np.linalg.norm(x) for _, _, x, _ in tr.samples()) > 0.75 - 1e-8


def test_cross_integrator_ks_vs_physical():
    # one site with a big local radius so a whole non-colliding arc stays in the KS chart
    spec = multi_coulomb([[0, 0, 0]], [-1.0], local_radii=[4.0])
    start = PhaseState.of([0.6, 0.0, 0.0], [0.0, 0.8, 0.1])
    lam = hamiltonian(spec, start)
    opts = IntegratorOptions(rtol=1e-12, atol=1e-12)
    seg, exit_state, hits = ks_segment(spec, 0, start, lam, t_end=2.0, opts=opts)
    assert hits == [] and exit_state is None
    for t in np.linspace(0.1, 2.0, 12):
        a = seg.state_at(t)
        b = direct_step(spec, start, t, opts)
        assert np.max(np.abs(np.concatenate([a.x - b.x, a.xi - b.xi]))) <= 1e-8


def test_ks_segment_rejects_entry_on_site():
    with pytest.raises(LiftFailure):
        ks_segment(KEPLER, 0, PhaseState.of([0, 0, 0], [1, 0, 0]), 1.0, t_end=1.0)


def test_fiber_independence():
    spec = multi_coulomb(PAIR, [-1.0, -1.0])
    start = PhaseState.of([0.0, 0.3, 0.0], [0.4, -0.2, 0.1])
    a = propagate(spec, start, 6.0)
    b = propagate(spec, start, 6.0, IntegratorOptions(lift_angle=2.1))
    for t in np.linspace(0, 6, 13):
        sa, sb = a.state_at(t), b.state_at(t)
        assert np.allclose(sa.x, sb.x, atol=1e-8)
        assert np.allclose(sa.xi, sb.xi, atol=1e-8)


def test_time_reversal_without_collisions():
    spec = multi_coulomb(PAIR, [1.0, 1.0])
    start = PhaseState.of([0.3, 2.0, 0.1], [0.1, -0.8, 0.0])
    T = 6.0
    end = propagate(spec, start, T).final_state
    back = propagate(spec, end.reversed(), T).final_state
    assert np.allclose(back.x, start.x, atol=1e-6)
    assert np.allclose(back.xi, -start.xi, atol=1e-6)


def test_negative_time_matches_reversal():
    spec = multi_coulomb(PAIR, [1.0, -1.0])
    start = PhaseState.of([0.2, 0.5, 0.0], [0.3, 0.1, 0.0])
    back = propagate(spec, start, -3.0)
    assert back.t_final == pytest.approx(-3.0)
    fwd = propagate(spec, back.final_state, 3.0).final_state
    assert np.allclose(fwd.x, start.x, atol=1e-6)


@pytest.mark.parametrize("coeffs", [(-1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)])
def test_conservation(coeffs):
    spec = multi_coulomb(PAIR, list(coeffs))
    tr = propagate(spec, PhaseState.of([0.0, 0.4, 0.1], [0.5, -0.3, 0.2]), 20.0)
    assert tr.energy_drift() <= 1e-8
    h, ell = tr.ks_drift()
    assert h <= 1e-10 and ell <= 1e-10


def test_yukawa_radial_collision():
    spec = yukawa()
    tr = propagate(spec, PhaseState.of([1.5, 0, 0], [-0.8, 0, 0]), 4.0)
    assert len(tr.collisions) == 1
    assert tr.energy_drift() <= 1e-8


def test_budget_exceeded():
    spec = multi_coulomb(PAIR, [-1.0, -1.0])
    with pytest.raises(BudgetExceeded):
        propagate(spec, PhaseState.of([0, 0, 0], [0.5, 0, 0]), 100.0,
                  IntegratorOptions(max_steps=20))


def test_jsonl_records(tmp_path):
    tr = propagate(KEPLER, radial_state(), 2.0)
    path = tmp_path / "t.jsonl"
    tr.write_jsonl(path, {"scenario_hash": "abc"})
    recs = [json.loads(line) for line in path.read_text().splitlines()]
    assert recs[0]["type"] == "header" and recs[0]["version"] == TRAJECTORY_SCHEMA_VERSION
    assert recs[0]["scenario_hash"] == "abc"
    kinds = [r["type"] for r in recs[1:]]
    assert kinds.count("collision") == 1
    times = [r["t"] for r in recs if r["type"] == "sample"]
    assert times == sorted(times)
    coll = next(r for r in recs if r["type"] == "collision")
    assert coll["site"] == 0 and len(coll["v"]) == 3
    phys = [r for r in recs if r["type"] == "sample" and r["chart"] == "physical"]
    assert all(abs(r["p"] - 0.5) <= 1e-8 for r in phys)
