import pytest

from manetq.engine import RandomStream
from manetq.routing.cluster import (GATEWAY, HEAD, MEMBER, ClusterRole, backbone_path,
                                    elect_clusters, role_violations, rreq_allowed)
from manetq.topology import Area, rebuild_links, uniform_placement

from conftest import link_set


def test_singleton_is_head():
    roles = elect_clusters(link_set(1, []), {0: 1.0})
    assert roles == {0: ClusterRole(HEAD, 0)}


def test_line_of_five():
    links = link_set(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
    roles = elect_clusters(links, {i: 1.0 for i in range(5)})
    assert [roles[i].role for i in range(5)] == [HEAD, GATEWAY, HEAD, GATEWAY, HEAD]
    assert role_violations(links, roles) == []


def test_energy_orders_heads():
    links = link_set(3, [(0, 1), (1, 2)])
    roles = elect_clusters(links, {0: 1.0, 1: 5.0, 2: 1.0})
    assert roles[1].role == HEAD and roles[0].head == 1 and roles[2].head == 1


def test_member_bridge_promoted():
    # heads 0 and 3 touch only through members 1-2
    links = link_set(4, [(0, 1), (1, 2), (2, 3)])
    roles = elect_clusters(links, {0: 9.0, 3: 8.0, 1: 1.0, 2: 1.0})
    assert roles[1].role == GATEWAY and roles[2].role == GATEWAY
    assert backbone_path(links, roles, 0, 3) == [0, 1, 2, 3]


@pytest.mark.parametrize("seed", range(1, 6))
def test_random_layout_invariants(seed):
    pts = uniform_placement(30, RandomStream(seed, "placement"), Area())
    links = rebuild_links(pts, 250)
    energies = {i: 100.0 - (i * 7 % 13) for i in range(30)}
    roles = elect_clusters(links, energies)
    assert set(roles) == set(range(30))
    assert role_violations(links, roles) == []
    for n, r in roles.items():
        if r.role != HEAD:
            assert links.linked(n, r.head)


def test_violation_checker_catches_problems():
    links = link_set(3, [(0, 1)])
    bad = {0: ClusterRole(HEAD, 0), 1: ClusterRole(GATEWAY, 0), 2: ClusterRole(MEMBER, 0)}
    msgs = role_violations(links, bad)
    assert any("out of range" in m for m in msgs)
    assert any("bridge" in m for m in msgs)


def test_scope_rules():
    roles = {0: ClusterRole(HEAD, 0), 1: ClusterRole(MEMBER, 0), 2: ClusterRole(MEMBER, 0),
             3: ClusterRole(GATEWAY, 0, (4,)), 4: ClusterRole(HEAD, 4)}
    assert rreq_allowed(roles, 1, 0) and rreq_allowed(roles, 0, 1)
    assert not rreq_allowed(roles, 1, 2)
    assert rreq_allowed(roles, 3, 4)
    assert not rreq_allowed(roles, 1, 9)


def test_intra_cluster_route_via_head():
    links = link_set(3, [(0, 1), (0, 2)])
    roles = elect_clusters(links, {0: 5.0, 1: 1.0, 2: 1.0})
    assert backbone_path(links, roles, 1, 2) == [1, 0, 2]


def test_two_clusters_through_gateway():
    # heads 0 and 4; node 2 hears both
    links = link_set(5, [(0, 1), (0, 2), (2, 4), (4, 3)])
    roles = elect_clusters(links, {0: 9.0, 4: 8.0, 1: 1.0, 2: 1.0, 3: 1.0})
    assert roles[2].role == GATEWAY
    assert backbone_path(links, roles, 1, 3) == [1, 0, 2, 4, 3]
    assert backbone_path(links, roles, 1, 3, alive={0, 1, 3, 4}) is None
    assert backbone_path(links, roles, 1, 1) == [1]
