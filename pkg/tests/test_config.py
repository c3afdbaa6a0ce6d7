import logging
import math

import pytest

from manetq.config import (ConfigParseError, InvalidValue, ScenarioConfig, UnknownKey,
                           dump_config, load_config, parse_config, queue_capacity, queue_shape,
                           validate)


def test_empty_file_gives_defaults():
    cfg = parse_config("")
    assert cfg == ScenarioConfig()
    assert (cfg.nodes, cfg.periods, cfg.protocol) == (30, 5, "dsr")


def test_zero_nodes_invalid():
    with pytest.raises(InvalidValue) as err:
        parse_config("nodes: 0")
    assert err.value.key == "nodes"


def test_typo_names_the_key():
    with pytest.raises(UnknownKey) as err:
        parse_config("# comment\nprotcol: dsr\n")
    assert err.value.key == "protcol"
    assert "line 2" in str(err.value)
    with pytest.raises(UnknownKey):
        parse_config("nfpqr.alfa: 1")
    with pytest.raises(UnknownKey):
        parse_config("traffic: 3")


def test_sections_and_types():
    cfg = parse_config("""
        protocol: nfpqr-clustered   # trailing comment
        nfpqr.alpha: 2
        dsr.cache_reply: off
        traffic.rate: 4.5
        traffic.stop: auto
        queue.kendall: [M/M/1]:{10/inf/FCFS}
    """)
    assert cfg.nfpqr.alpha == 2.0 and isinstance(cfg.nfpqr.alpha, float)
    assert cfg.dsr.cache_reply is False
    assert cfg.traffic.rate == 4.5 and cfg.traffic.stop is None
    assert queue_capacity(cfg) == 10 and queue_shape(cfg) == (1, "FIFO")


def test_malformed_lines():
    with pytest.raises(ConfigParseError) as err:
        parse_config("nodes 30")
    assert err.value.lineno == 1
    with pytest.raises(ConfigParseError, match="duplicate"):
        parse_config("nodes: 3\nnodes: 4")
    with pytest.raises(InvalidValue):
        parse_config("nodes: many")
    with pytest.raises(InvalidValue):
        parse_config("dsr.promiscuous: maybe")
    with pytest.raises(InvalidValue):
        parse_config("range: nan")


@pytest.mark.parametrize("text", [
    "protocol: aodv", "range: 600", "nfpqr.theta_q: 1.5", "behavior.selfish_fraction: 2",
    "energy.p_idle: 5", "queue.kendall: [G/M/1]:{inf/inf/FCFS}", "queue.kendall: [M/M/1]",
    "mobility.speed_min: 6", "traffic.start: 5\ntraffic.stop: 2", "queue.discipline: SJF",
    "nodes: 1", "seed: -1", "nfpqr.alpha: 0\nnfpqr.beta: 0",
])
def test_out_of_range(text):
    with pytest.raises(InvalidValue):
        parse_config(text)


def test_dsr_warns_about_nfpqr_keys(caplog):
    with caplog.at_level(logging.WARNING):
        parse_config("nfpqr.alpha: 2")
    assert "nfpqr.alpha" in caplog.text


def test_capacity_by_protocol():
    cfg = ScenarioConfig()
    assert queue_capacity(cfg) == cfg.queue.dsr_capacity
    assert queue_capacity(cfg.with_values(protocol="nfpqr")) == 10
    inf = cfg.with_values(protocol="nfpqr", queue__kendall="[M/M/2]:{inf/inf/LCFS}")
    assert math.isinf(queue_capacity(inf)) and queue_shape(inf) == (2, "LIFO")


def test_dump_and_load_round_trip(tmp_path):
    cfg = validate(ScenarioConfig(seed=9, protocol="nfpqr").with_values(traffic__rate=3.0))
    p = tmp_path / "c.cfg"
    p.write_text(dump_config(cfg))
    assert load_config(p) == cfg


def test_with_values_and_flat():
    cfg = ScenarioConfig().with_values(nodes=12, energy__initial=7)
    flat = cfg.flat()
    assert flat["nodes"] == 12 and flat["energy.initial"] == 7.0
    with pytest.raises(UnknownKey):
        ScenarioConfig().with_values(bogus=1)
    with pytest.raises(InvalidValue):
        ScenarioConfig().with_values(nodes="x")
