import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from znn.core import (
    Diverged,
    RunConfig,
    ZnnState,
    fov_boundary,
    run,
    step,
    warmup,
)
from znn.flows import (
    MonitoredFlow,
    OutOfOrderAccess,
    SamplingGrid,
    constant_flow,
    make_flow_set,
    record_flow,
    replay_flow,
)
from znn.formulas import lookup
from znn.problems import make_problem
from znn.tensor import vec


def test_step_examples():
    f = lookup("2_3")
    v = np.array([0.5, -1.0])
    state = ZnnState(capacity=5)
    for _ in range(5):
        state.push(v)
    assert np.allclose(step(f, state, np.zeros(2), 0.1), v)
    assert len(state.history) == 5 and state.k == 2

    state = ZnnState(capacity=5)
    for _ in range(5):
        state.push(np.zeros(1))
    assert step(f, state, np.array([2.0]), 0.04)[0] == pytest.approx(9 / 4 * 0.04 * 2)

    e = lookup("1_2")
    state = ZnnState(capacity=3)
    state.push(np.array([1.0]))
    assert step(e, state, np.array([3.0]), 0.1)[0] == pytest.approx(1.3)


def test_step_nonfinite_diverges():
    state = ZnnState(capacity=2)
    state.push(np.array([1.0]))
    with pytest.raises(Diverged):
        step(lookup("1_2"), state, np.array([np.inf]), 0.1)


def test_polyrest_sums_to_one():
    for name in ("1_2", "2_3", "2_2", "3_3", "4_5"):
        assert sum(lookup(name).polyrest) == pytest.approx(1.0, abs=1e-12)


def test_warmup_counts_and_oracle_history():
    flows = {"A": constant_flow(np.array([[2.0, 1.0], [1.0, 3.0]]))}
    for name, n_steps in (("4_5", 9), ("2_3", 5)):
        f = lookup(name)
        cfg = RunConfig(f, SamplingGrid(0.0, 1.0, 0.01), h=0.1)
        seen = []
        state = warmup(make_problem("inverse"), flows, f, cfg, on_step=lambda k, t, x: seen.append(k))
        assert len(seen) == n_steps and state.phase == "running"
        assert len(state.history) == n_steps and state.k == n_steps + 1
        ref = vec(np.linalg.inv(flows["A"].sample(0.0)))
        for x in state.history:
            assert np.allclose(x, ref, atol=1e-14)


def test_warmup_random_sqrt_decreases():
    f = lookup("4_5")
    flows = make_flow_set("spd2-sqrt")
    cfg = RunConfig(f, SamplingGrid(0.0, 1.0, 0.02), h=0.1, start="random", rng_seed=3)
    problem = make_problem("sqrt")
    state = warmup(problem, flows, f, cfg)
    S = {"A": flows["A"].sample(9 * 0.02)}
    res = np.linalg.norm(problem.residual(0.0, S, state.current))
    S0 = {"A": flows["A"].sample(0.0)}
    res0 = np.linalg.norm(problem.residual(0.0, S0, state.history[-1]))
    assert np.isfinite(res) and res < res0


def test_constant_flow_stays_exact():
    A = np.array([[3.0, 1.0], [0.5, 2.0]])
    cfg = RunConfig("2_3", SamplingGrid(0.0, 2.0, 0.01), h=0.1)
    tr = run(make_problem("inverse"), {"A": constant_flow(A)}, cfg)
    assert len(tr) == 200
    assert tr.residual.max() <= 1e-12 * (1 + np.linalg.norm(A))


def test_linsys_steady_state():
    cfg = RunConfig("2_3", SamplingGrid(0.0, 2.0, 1e-3), eta=100.0, track_oracle=True)
    tr = run(make_problem("linsys"), make_flow_set("sym2"), cfg)
    assert tr.steady_state() <= 1e-9
    # the Euler warm-up transient has died out well before t = 0.5
    assert tr.relative[tr.window(0.5)].max() <= 1e-9
    assert tr.oracle_errors[tr.window(0.5)].max() <= 1e-9


def test_linsys_eta_500_diverges():
    """h = tau eta = 0.5 lies outside the five-instance formula's stable range."""
    cfg = RunConfig("2_3", SamplingGrid(0.0, 2.0, 1e-3), eta=500.0)
    with pytest.raises(Diverged) as info:
        run(make_problem("linsys"), make_flow_set("sym2"), cfg)
    assert info.value.trace is not None and info.value.trace.diverged_at == info.value.k
    assert 0 < len(info.value.trace) < 2000


def test_inverse_steady_state():
    cfg = RunConfig("2_3", SamplingGrid(0.0, 2.0, 1e-3), h=0.1)
    tr = run(make_problem("inverse"), make_flow_set("sym2"), cfg)
    assert tr.steady_state(column="residual") <= 1e-8
    assert tr.residual[tr.window(0.5)].max() <= 1e-8


def test_tau_halving_ratio():
    res = []
    for tau in (1e-3, 5e-4):
        tr = run(make_problem("linsys"), make_flow_set("sym2"), RunConfig("2_3", SamplingGrid(0.0, 3.0, tau), h=0.1))
        res.append(tr.steady_state())
    assert 8 <= res[0] / res[1] <= 32


@pytest.mark.parametrize("name,flow", [("linsys", "sym2"), ("sqrt", "spd2-sqrt(1)"), ("sylvester", "sylv2"),
                                       ("lyapunov", "lyap2"), ("pinv-right", "rect23")])
def test_decay_law(name, flow):
    """Euler at tau = 1e-5: r(t) <= r(0) exp(-eta t) (1 + 0.05) on [0, 5/eta]."""
    problem = make_problem(name)
    flows = make_flow_set(flow)
    eta = 100.0
    S = {k: flows[k].sample(0.0) for k in problem.needs}
    rng = np.random.default_rng(4)
    z0 = problem.initial(0.0, S) + 0.05 * rng.standard_normal(problem.size(S))
    cfg = RunConfig("1_2", SamplingGrid(0.0, 5 / eta, 1e-5), eta=eta, start="given", start_value=z0)
    tr = run(problem, flows, cfg)
    bound = tr.residual[0] * np.exp(-eta * tr.t) * 1.05
    assert np.all(tr.residual <= bound)


def test_random_start_is_seeded():
    cfg = RunConfig("2_3", SamplingGrid(0.0, 0.5, 0.01), h=0.1, start="random", rng_seed=5)
    a = run(make_problem("sqrt"), make_flow_set("spd2-sqrt"), cfg)
    b = run(make_problem("sqrt"), make_flow_set("spd2-sqrt"), cfg)
    assert np.array_equal(a.residual, b.residual)


def test_csv_deterministic_and_formatted():
    cfg = RunConfig("2_3", SamplingGrid(0.0, 0.2, 0.01), h=0.1, record_solution=True, track_oracle=True)
    texts = [run(make_problem("linsys"), make_flow_set("sym2"), cfg).csv_text(oracle=True) for _ in range(2)]
    assert texts[0] == texts[1]
    lines = [ln for ln in texts[0].splitlines() if not ln.startswith("#")]
    assert lines[0] == "k,t,residual_fro,relative_residual,solve_condition,oracle_error,x1,x2"
    assert len(lines) == 21
    assert "# h = 0.10000000000000001" in texts[0].splitlines()


def test_replay_reproduces_functional_run(tmp_path):
    flows = make_flow_set("sym2")
    grid = SamplingGrid(0.0, 1.0, 0.01)
    replayed = {k: replay_flow(record_flow(f, grid)) for k, f in flows.items()}
    cfg = RunConfig("2_3", grid, h=0.1, derivative="backward")
    a = run(make_problem("linsys"), flows, cfg)
    b = run(make_problem("linsys"), replayed, cfg)
    assert np.max(np.abs(a.residual - b.residual)) <= 1e-15


def test_backward_derivative_run_converges():
    cfg = RunConfig("2_3", SamplingGrid(0.0, 2.0, 1e-3), h=0.1, derivative="backward")
    tr = run(make_problem("linsys"), make_flow_set("sym2"), cfg)
    # the first samples have too little history for a full-order estimate
    assert tr.relative[tr.window(0.5)].max() <= 1e-9


def test_analytic_derivative_required():
    cfg = RunConfig("2_3", SamplingGrid(0.0, 0.1, 0.01), h=0.1, derivative="analytic")
    with pytest.raises(ValueError):
        run(make_problem("inverse"), make_flow_set("mixed2"), cfg)


@settings(max_examples=10)
@given(st.sampled_from(["linsys", "inverse", "sqrt", "eigen:0"]), st.sampled_from(["2_3", "4_5", "1_2"]),
       st.sampled_from(["analytic", "backward"]))
def test_predictive_access(problem, formula, deriv):
    """No sample later than t_k is read before x_{k+1} exists."""
    flow = {"linsys": "sym2", "inverse": "sym2", "sqrt": "spd2-sqrt", "eigen:0": "herm3"}[problem]
    flows = {k: MonitoredFlow(f) for k, f in make_flow_set(flow).items()}
    latest = []
    cfg = RunConfig(formula, SamplingGrid(0.0, 0.3, 0.01), h=0.1, derivative=deriv)
    run(make_problem(problem), flows, cfg,
        on_step=lambda k, t, x: latest.append(max(f.latest for f in flows.values()) <= t))
    assert len(latest) == 29 and all(latest)


def test_monitored_flow_catches_rewind():
    flows = {k: MonitoredFlow(f) for k, f in make_flow_set("sym2").items()}
    flows["A"].sample(100.0)
    with pytest.raises(OutOfOrderAccess):
        run(make_problem("linsys"), flows, RunConfig("2_3", SamplingGrid(0.0, 0.1, 0.01), h=0.1))


def test_config_validation():
    g = SamplingGrid(0.0, 1.0, 0.1)
    with pytest.raises(ValueError):
        RunConfig("2_3", g, eta=1.0, h=0.1)
    with pytest.raises(ValueError):
        RunConfig("2_3", g, eta=-1.0)
    with pytest.raises(ValueError):
        RunConfig("2_3", g, start="given")
    f, eta, h = RunConfig("2_3", g).resolved()
    assert h == pytest.approx(f.default_h) and eta == pytest.approx(h / 0.1)


def test_trace_header_records_h():
    cfg = RunConfig("2_3", SamplingGrid(0.0, 0.1, 0.01), eta=20.0)
    tr = run(make_problem("inverse"), make_flow_set("sym2"), cfg)
    assert float(tr.header["h"]) == pytest.approx(0.2)
    out = io.StringIO()
    tr.to_csv(out)
    assert "# h = 0.20000000000000001" in out.getvalue().splitlines()
    assert "# eta = 20" in out.getvalue().splitlines()


# -- field of values ---------------------------------------------------------


def test_fov_normal_matrix_hits_eigenvalues():
    t, pts = fov_boundary(np.diag([1.0, 1j]))
    assert len(pts) == len(t)
    d = np.minimum(np.abs(pts - 1), np.abs(pts - 1j))
    assert d.max() <= 1e-8
    assert np.abs(pts - 1).min() <= 1e-8 and np.abs(pts - 1j).min() <= 1e-8


def test_fov_matches_dense_boundary():
    rng = np.random.default_rng(6)
    A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    t, pts = fov_boundary(A, tau=2 * math.pi / 4000)
    H = (A + A.conj().T) / 2
    K = (A - A.conj().T) / 2j
    ref = []
    for tk in t:
        w, V = np.linalg.eigh(math.cos(tk) * H + math.sin(tk) * K)
        v = V[:, -1]
        ref.append(np.vdot(v, A @ v))
    # support function check: Re(e^{-it} p) equals the largest eigenvalue
    support = np.array([np.linalg.eigvalsh(math.cos(tk) * H + math.sin(tk) * K)[-1] for tk in t])
    assert np.max(np.abs((np.exp(-1j * t) * pts).real - support)) <= 1e-8
    assert np.median(np.abs(pts - np.array(ref))) <= 1e-5
