import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridforge.network import (STRAY_B, Attachment, Bus, ConstantImpedanceLoad, LinearTransformer,
                               NetworkCase, PerUnitBase, PiLine, PowerFlowError, build_nine_bus,
                               compile_network, instantaneous_power, mv_hv_transformer,
                               network_derivatives, solve_power_flow)

finite = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)


def two_bus(r=0.01, x=0.1, c_half=0.02, load=None):
    buses = (Bus("a", 230.0, 0.01), Bus("b", 230.0, 0.01))
    loads = () if load is None else (load,)
    return NetworkCase(buses, (PiLine("ab", "a", "b", r, x, c_half),), (), loads)


def phasor_state(net, V):
    """Rotating steady state of the network for bus phasors ``V``."""
    w = net.omega_b
    x = np.zeros(net.n_states)
    x[0:2 * V.size:2], x[1:2 * V.size:2] = V.real, V.imag
    o = 2 * V.size
    for b in range(net.br_R.size):
        i = (V[net.br_from[b]] - V[net.br_to[b]]) / (net.br_R[b] + 1j * w * net.br_L[b])
        x[o + 2 * b], x[o + 2 * b + 1] = i.real, i.imag
    o += 2 * net.br_R.size
    for s in range(net.shl_L.size):
        i = V[net.shl_node[s]] / (1j * w * net.shl_L[s])
        x[o + 2 * s], x[o + 2 * s + 1] = i.real, i.imag
    return x


def stored_energy(net, x):
    n = net.n_nodes
    nb = net.br_R.size
    v = x[:2 * n].reshape(-1, 2)
    ib = x[2 * n:2 * (n + nb)].reshape(-1, 2)
    ish = x[2 * (n + nb):].reshape(-1, 2)
    return (0.5 * np.sum(net.node_C * np.sum(v**2, axis=1))
            + 0.5 * np.sum(net.br_L * np.sum(ib**2, axis=1))
            + 0.5 * np.sum(net.shl_L * np.sum(ish**2, axis=1)))


def test_per_unit_base():
    base = PerUnitBase()
    assert base.z_b == pytest.approx(230e3**2 / 100e6)
    assert base.i_b == pytest.approx(100e6 / (math.sqrt(3) * 230e3))


def test_unexcited_network_is_at_rest():
    net = compile_network(build_nine_bus())
    dx, v = network_derivatives(net, np.zeros(net.n_states), np.zeros((net.n_nodes, 2)))
    assert not dx.any() and not v.any()


def test_line_phasor_relation():
    net = compile_network(two_bus())
    V = np.array([1.0 + 0.1j, 0.95 - 0.05j])
    x = phasor_state(net, V)
    dx, _ = network_derivatives(net, x, np.zeros((2, 2)))
    # line current rotates at omega_b: dI/dt = j omega_b I
    i = complex(x[4], x[5])
    assert complex(dx[4], dx[5]) == pytest.approx(1j * net.omega_b * i, rel=1e-12)
    assert V[0] - V[1] == pytest.approx((0.01 + 1j * 0.1) * i, rel=1e-12)


@pytest.mark.parametrize("p, q", [(1.0, 0.0), (0.7, 0.2), (0.0, 0.3), (0.5, -0.1)])
def test_load_draws_nominal_power_at_one_pu(p, q):
    bus_b = 0.01
    case = NetworkCase((Bus("a", 230.0, bus_b),), (), (), (ConstantImpedanceLoad("a", p, q),))
    y = compile_network(case).ybus()
    s = np.conj(y[0, 0])  # V = 1
    assert s == pytest.approx(complex(p, q - bus_b), abs=1e-12)


def test_nine_bus_topology():
    case = build_nine_bus()
    assert len(case.external_buses) == 9
    assert len(case.lines) == 6
    assert len(case.transformers) == 3
    assert sorted(ld.bus for ld in case.loads) == ["5", "7", "9"]
    assert [a.site for a in case.attachments] == ["1", "2", "3"]


def test_nine_bus_step_up_transformer_data():
    tr = mv_hv_transformer("T", "1", "4")
    assert (tr.s_r, tr.r1, tr.r2, tr.l1, tr.l2, tr.rm, tr.lm) == (
        210e6, 0.0027, 0.0027, 0.08, 0.08, 500.0, 500.0)


@pytest.mark.parametrize("base_load", [0.0, 2.0, 2.25])
def test_nine_bus_load_split_is_uniform(base_load):
    case = build_nine_bus(base_load=base_load)
    assert [ld.p_nom for ld in case.loads] == [pytest.approx(base_load / 3)] * 3


def test_converter_mix_adds_internal_bus():
    case = build_nine_bus(("sm", "gfc", "gfc"), modules=100)
    assert {b.name for b in case.buses if b.internal} == {"2lv", "3lv"}
    lv = [t for t in case.transformers if t.name == "T2lv"][0]
    assert lv.s_r == pytest.approx(160e6)
    assert case.buses[0].b_shunt == STRAY_B


@pytest.mark.parametrize("kwargs", [
    dict(mix=("sm", "sm")), dict(mix=("sm", "sm", "wind")),
])
def test_nine_bus_rejects_bad_mix(kwargs):
    with pytest.raises(ValueError):
        build_nine_bus(**kwargs)


def test_case_validation():
    with pytest.raises(ValueError):
        NetworkCase((Bus("a", 1.0), Bus("b", 1.0)), (), (), ())  # disconnected
    with pytest.raises(ValueError):
        NetworkCase((Bus("a", 1.0),), (), (), (), (Attachment("g", "sm", "z", "z"),))
    with pytest.raises(ValueError):
        PiLine("x", "a", "b", -1.0, 0.1, 0.0)
    with pytest.raises(ValueError):
        LinearTransformer("t", "a", "b", 0.0, 1, 1, 0.1, 0.1, 0.1, 0.1, 1, 1)
    with pytest.raises(ValueError):
        ConstantImpedanceLoad("a", -1.0)


def test_power_flow_without_load_is_flat():
    # lossless network, no load, no dispatch: only charging current flows
    net = compile_network(two_bus(r=0.0, c_half=0.0))
    pf = solve_power_flow(net.ybus(), 0, 1.0, {1: (0.0, 1.0)})
    assert np.max(np.abs(np.angle(pf.voltage))) < 1e-12
    assert np.max(np.abs(pf.injection.real)) < 1e-12
    line = (pf.voltage[0] - pf.voltage[1]) / (1j * net.omega_b * net.br_L[0])
    assert abs(line) < 1e-12


def test_power_flow_balances_load():
    case = build_nine_bus(base_load=2.0)
    net = compile_network(case)
    pf = solve_power_flow(net.ybus(), 0, 1.04, {1: (0.7, 1.025), 2: (0.7, 1.025)})
    assert pf.residual <= 1e-10
    s = pf.voltage * np.conj(net.ybus() @ pf.voltage)
    assert np.allclose(s, pf.injection)
    assert pf.injection.real.sum() > 2.0  # losses are positive


def test_power_flow_infeasible():
    case = build_nine_bus(base_load=40.0)
    net = compile_network(case)
    with pytest.raises(PowerFlowError):
        solve_power_flow(net.ybus(), 0, 1.0, {1: (10.0, 1.0), 2: (10.0, 1.0)})


@pytest.mark.parametrize("v, i, pq", [((1.0, 0.0), (1.0, 0.0), (1.0, 0.0)),
                                      ((1.0, 0.0), (0.0, -1.0), (0.0, 1.0))])
def test_instantaneous_power_examples(v, i, pq):
    assert instantaneous_power(np.array(v), np.array(i)) == pytest.approx(pq)


@settings(max_examples=100)
@given(finite, finite, finite, finite, st.floats(min_value=-4.0, max_value=4.0))
def test_power_is_rotation_invariant(va, vb, ia, ib, phi):
    c, s = math.cos(phi), math.sin(phi)
    rot = np.array([[c, s], [-s, c]])
    v, i = np.array([va, vb]), np.array([ia, ib])
    p, q = instantaneous_power(v, i)
    pd, qd = instantaneous_power(rot @ v, rot @ i)
    assert pd == pytest.approx(p, abs=1e-12)
    assert qd == pytest.approx(q, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_network_energy_balance(seed):
    rng = np.random.default_rng(seed)
    net = compile_network(build_nine_bus(("sm", "gfc", "sm"), base_load=2.0), {"2lv": 0.01})
    x = rng.normal(size=net.n_states)
    inj = rng.normal(size=(net.n_nodes, 2))
    dx, v = network_derivatives(net, x, inj)
    # dE/dt along the field equals injected power minus dissipation
    n, nb = net.n_nodes, net.br_R.size
    ib = x[2 * n:2 * (n + nb)].reshape(-1, 2)
    lhs = (np.sum(net.node_C * np.sum(v * dx[:2 * n].reshape(-1, 2), axis=1))
           + np.sum(net.br_L * np.sum(ib * dx[2 * n:2 * (n + nb)].reshape(-1, 2), axis=1))
           + np.sum(net.shl_L * np.sum(x[2 * (n + nb):].reshape(-1, 2)
                                       * dx[2 * (n + nb):].reshape(-1, 2), axis=1)))
    rhs = (np.sum(v * inj) - np.sum(net.node_G * np.sum(v**2, axis=1))
           - np.sum(net.br_R * np.sum(ib**2, axis=1)))
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


def test_energy_balance_along_trajectory():
    net = compile_network(two_bus(load=ConstantImpedanceLoad("b", 0.5, 0.2)))
    rng = np.random.default_rng(0)
    x = rng.normal(size=net.n_states)
    inj = np.array([[0.3, -0.1], [0.0, 0.0]])
    dt = 1e-8
    f = lambda y: network_derivatives(net, y, inj)[0]  # noqa: E731

    def power(y):
        v = y[:4].reshape(-1, 2)
        ib = y[4:6]
        return (np.sum(v * inj) - np.sum(net.node_G * np.sum(v**2, axis=1))
                - net.br_R[0] * ib @ ib)

    for _ in range(20):
        e0, p0 = stored_energy(net, x), power(x)
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x1 = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        e1, p1 = stored_energy(net, x1), power(x1)
        assert e1 - e0 == pytest.approx(0.5 * dt * (p0 + p1), rel=1e-6, abs=1e-12)
        x = x1


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_network_superposition(seed):
    rng = np.random.default_rng(seed)
    net = compile_network(two_bus(load=ConstantImpedanceLoad("b", 0.5, 0.2)))
    x1, x2 = rng.normal(size=(2, net.n_states))
    i1, i2 = rng.normal(size=(2, 2, 2))
    d1, _ = network_derivatives(net, x1, i1)
    d2, _ = network_derivatives(net, x2, i2)
    d12, _ = network_derivatives(net, x1 + x2, i1 + i2)
    assert np.allclose(d12, d1 + d2, rtol=1e-10, atol=1e-9)
