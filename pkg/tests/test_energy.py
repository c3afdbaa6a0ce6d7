import pytest

from manetq.energy import (DEAD, EnergyModel, NodeEnergy, charge, charge_over_idle, drain,
                           network_lifetime)


def test_linear_accounting():
    node = NodeEnergy(100.0)
    for _ in range(10):
        drain(node, 1.0, 1.0)
    assert node.residual == pytest.approx(90.0)
    assert node.spent == pytest.approx(10.0)


def test_zero_duration_is_identity():
    node = NodeEnergy(5.0)
    charge(node, "tx", 0.0, EnergyModel())
    assert node.residual == 5.0 and node.alive


def test_idle_death_time():
    model = EnergyModel(initial=83.0)
    node = NodeEnergy.fresh(model)
    for k in range(200):
        charge(node, "idle", 1.0, model, now=float(k))
    assert node.state == DEAD
    assert node.death_time == pytest.approx(100.0)
    assert node.residual == 0.0


def test_death_inside_interval():
    node = NodeEnergy(1.0)
    drain(node, 2.0, 10.0, now=5.0)
    assert node.death_time == pytest.approx(5.5)
    # dead nodes spend nothing more
    drain(node, 2.0, 10.0, now=20.0)
    assert node.death_time == pytest.approx(5.5)


def test_over_idle_tops_up_to_activity_power():
    model = EnergyModel()
    a = NodeEnergy(50.0)
    charge(a, "idle", 2.0, model)
    charge_over_idle(a, "tx", 2.0, model)
    b = NodeEnergy(50.0)
    charge(b, "tx", 2.0, model)
    assert a.residual == pytest.approx(b.residual)


def test_rejects_negative():
    with pytest.raises(ValueError):
        drain(NodeEnergy(1.0), 1.0, -1.0)
    with pytest.raises(ValueError):
        drain(NodeEnergy(1.0), -1.0, 1.0)


def test_profile_validation():
    with pytest.raises(ValueError):
        EnergyModel(p_idle=2.0)
    with pytest.raises(ValueError):
        EnergyModel(initial=0)
    assert EnergyModel().airtime(4096) == pytest.approx(4096 / 2e6)


def test_lifetime():
    a, b, c = NodeEnergy(1.0), NodeEnergy(1.0), NodeEnergy(1.0)
    a.death_time, b.death_time = 70.0, 50.0
    assert network_lifetime([a, b, c]) == 50.0
    assert network_lifetime([c]) is None
