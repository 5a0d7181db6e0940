import math
from collections import Counter
from dataclasses import replace

import pytest

from manetsim import (EnergyParams, run_scenario,
                      trace_to_text, validate_config)
from manetsim.engine import EnergyState, debit


# -- energy accounting -----------------------------------------------------------

PARAMS = EnergyParams(initial=10.0, tx_per_byte=60e-6, rx_per_byte=30e-6,
                      idle_per_sec=1e-3)


def test_rx_debit_is_linear_in_bytes():
    state = debit(EnergyState(10.0), "rx", 100, PARAMS)
    assert state.remaining == pytest.approx(10.0 - 100 * 30e-6)
    assert state.alive


def test_tx_and_idle_debits():
    assert debit(EnergyState(10.0), "tx", 100, PARAMS).remaining == pytest.approx(10.0 - 0.006)
    assert debit(EnergyState(10.0), "idle", 2.0, PARAMS).remaining == pytest.approx(10.0 - 0.002)


def test_crossing_zero_clamps_and_kills():
    state = debit(EnergyState(0.001), "rx", 100, PARAMS)  # costs 0.003 J
    assert state.remaining == 0.0
    assert not state.alive


def test_debit_on_dead_node_is_noop():
    dead = EnergyState(0.0, alive=False)
    assert debit(dead, "rx", 1000, PARAMS) == dead


def test_debit_rejects_unknown_kind():
    with pytest.raises(ValueError):
        debit(EnergyState(1.0), "listen", 1, PARAMS)


def test_infinite_battery_never_depletes():
    state = debit(EnergyState(math.inf), "rx", 10**9, PARAMS)
    assert math.isinf(state.remaining) and state.alive


# -- whole-run behavior ------------------------------------------------------------

def test_quiescent_single_node_traces_only_hello_sends():
    cfg = validate_config({"nn": 1, "stop": 5, "flows": "none"})
    result = run_scenario(cfg)
    assert result.trace, "hello beacons expected"
    assert all(e.event == "s" and e.pkt_type == "HELLO" for e in result.trace)
    assert result.report.drops_by_reason == Counter()


def test_same_seed_runs_are_byte_identical():
    cfg = validate_config({"stop": 8, "seed": 21})
    a = trace_to_text(run_scenario(cfg).trace)
    b = trace_to_text(run_scenario(cfg).trace)
    assert a == b


def test_changing_seed_changes_the_trace():
    cfg = validate_config({"stop": 8, "seed": 21})
    a = trace_to_text(run_scenario(cfg).trace)
    c = trace_to_text(run_scenario(replace(cfg, rng_seed=22)).trace)
    assert a != c


def test_lossy_runs_stay_deterministic():
    cfg = validate_config({"stop": 6, "seed": 4, "loss_prob": 0.3})
    a = trace_to_text(run_scenario(cfg).trace)
    b = trace_to_text(run_scenario(cfg).trace)
    assert a == b
    lossless = trace_to_text(run_scenario(replace(cfg, loss_prob=0.0)).trace)
    assert a != lossless


def test_trace_times_are_non_decreasing():
    cfg = validate_config({"stop": 8, "seed": 3})
    times = [e.time for e in run_scenario(cfg).trace]
    assert all(a <= b for a, b in zip(times, times[1:]))


def test_created_uids_are_distinct():
    cfg = validate_config({"stop": 8, "seed": 3})
    trace = run_scenario(cfg).trace
    created = [e.pkt_id for e in trace if e.event == "s"]
    assert len(created) == len(set(created))


def test_data_conservation_per_packet():
    # For every DATA uid: transmissions >= receptions, and nothing is
    # received that was never sent.
    cfg = validate_config({"stop": 10, "seed": 6})
    trace = run_scenario(cfg).trace
    sent, received = Counter(), Counter()
    for e in trace:
        if e.pkt_type != "DATA":
            continue
        if e.event in ("s", "f"):
            sent[e.pkt_id] += 1
        elif e.event == "r":
            received[e.pkt_id] += 1
    for uid, count in received.items():
        assert sent[uid] >= count
    assert set(received) <= set(sent)


def _attack_config(rp="AODV", **over):
    raw = {
        "nn": 2, "x": 50, "y": 50, "stop": 50, "rp": rp, "seed": 7,
        "range_r": 15, "k": 2, "nodes": "10,10; 20,10", "flows": "1:0:4:100:1",
        "attacker.enabled": "true", "attacker.target": 0, "attacker.start": 10,
        "attacker.rate": 100, "attacker.payload": 400,
        "attacker.sophistication": "NAIVE_FIXED", "attacker.pos": "10,20",
    }
    raw.update(over)
    return validate_config(raw)


def test_attacker_emits_no_attack_traffic_before_start_time():
    # The attacker beacons like any node from t=0, but its discovery and
    # flood traffic only begin at the configured start time.
    cfg = _attack_config()
    trace = run_scenario(cfg).trace
    attack_events = [e for e in trace
                     if e.src_addr == 2 and e.event in ("s", "f")
                     and e.pkt_type != "HELLO"]
    assert attack_events
    assert min(e.time for e in attack_events) >= 10.0


def test_attacker_discovers_before_flooding():
    cfg = _attack_config()
    trace = run_scenario(cfg).trace
    rreq = [e for e in trace if e.src_addr == 2 and e.pkt_type == "RREQ" and e.event == "s"]
    data = [e for e in trace if e.src_addr == 2 and e.pkt_type == "DATA" and e.event == "s"]
    assert rreq and data
    assert min(e.time for e in rreq) < min(e.time for e in data)


def test_insider_attacker_is_never_dropped_by_verification():
    cfg = _attack_config(rp="SAODV", **{"attacker.sophistication": "INSIDER"})
    report = run_scenario(cfg).report
    assert report.victim_malicious_drops == 0
    assert report.victim_malicious_accepts > 0


def test_naive_random_attacker_near_half_acceptance_at_two_channels():
    # Large battery: accepted flood packets must not deplete the victim
    # mid-run, or the sample would be truncated.
    cfg = _attack_config(rp="SAODV", **{"attacker.sophistication": "NAIVE_RANDOM",
                                        "energy.initial": 1000})
    report = run_scenario(cfg).report
    seen = report.victim_malicious_accepts + report.victim_malicious_drops
    assert seen > 2000
    assert abs(report.victim_malicious_accepts / seen - 0.5) <= 0.05


def test_victim_energy_series_is_non_increasing():
    cfg = _attack_config(rp="SAODV")
    metrics = run_scenario(cfg).metrics
    energies = [row[3] for row in metrics.rows]
    assert all(a >= b for a, b in zip(energies, energies[1:]))


def test_physical_channel_gating_silences_mistagged_flood():
    # NAIVE_FIXED announces channel 2 while its tags imply channel 1: with
    # physically separated channels the flood never reaches the victim at all.
    cfg = _attack_config(rp="SAODV", physical_channels="true")
    report = run_scenario(cfg).report
    assert report.attacker_data_sent > 0
    assert report.victim_malicious_accepts == 0
    assert report.victim_malicious_drops == 0
    assert report.honest_data_delivered > 0  # honest traffic is unaffected


def test_victim_protection_holds_for_random_guessing_attacker():
    # Half the flood is accepted at full cost under verification, yet the
    # victim is still never worse off than the unverified baseline.
    saodv = run_scenario(_attack_config(rp="SAODV",
                                        **{"attacker.sophistication": "NAIVE_RANDOM"}))
    aodv = run_scenario(_attack_config(rp="AODV",
                                       **{"attacker.sophistication": "NAIVE_RANDOM"}))
    for row_s, row_a in zip(saodv.metrics.rows, aodv.metrics.rows):
        assert row_s[3] >= row_a[3]
    assert any(row_s[3] > row_a[3]
               for row_s, row_a in zip(saodv.metrics.rows, aodv.metrics.rows))


def test_dead_node_is_silent_afterwards():
    cfg = _attack_config(rp="AODV")
    result = run_scenario(cfg)
    died_at = result.report.depletion_times.get(0)
    assert died_at is not None and died_at < 50.0
    for e in result.trace:
        if e.source == 0 and e.event in ("s", "f"):
            assert e.time <= died_at


def test_depletion_time_matches_linear_model():
    # Victim alone with the attacker, HELLO traffic effectively disabled:
    # the battery drains at rate * payload * rx_per_byte + idle.
    cfg = validate_config({
        "nn": 1, "x": 50, "y": 50, "stop": 30, "rp": "AODV", "seed": 1,
        "range_r": 15, "hello_interval": 1000, "flows": "none",
        "nodes": "25,25", "attacker.pos": "30,25",
        "attacker.enabled": "true", "attacker.target": 0, "attacker.start": 1,
        "attacker.rate": 100, "attacker.payload": 200,
        "attacker.sophistication": "NAIVE_RANDOM",
    })
    result = run_scenario(cfg)
    drain = 100 * 200 * 30e-6 + 1e-3
    expected = 1.0 + 10.0 / drain
    died_at = result.report.depletion_times[0]
    assert died_at == pytest.approx(expected, abs=cfg.metrics_interval)
    zero_rows = [row for row in result.metrics.rows if row[3] == 0.0]
    assert zero_rows and zero_rows[0][0] >= died_at


def test_depleted_sender_drops_remaining_transmissions():
    # Three payloads buffered during discovery, battery sized so the flush
    # kills the sender mid-way: the leftover transmission is traced as a drop.
    cfg = validate_config({
        "nn": 2, "x": 50, "y": 50, "stop": 2, "rp": "AODV", "seed": 1,
        "range_r": 15, "nodes": "10,10; 20,10",
        "flows": "0:1:1:10000:0.5; 0:1:1:10000:0.5; 0:1:1:10000:0.5",
        "energy.initial": 1.0,  # each 10 kB transmission costs 0.6 J
    })
    result = run_scenario(cfg)
    assert result.report.drops_by_reason.get("DEAD_SENDER", 0) >= 1
    died_at = result.report.depletion_times[0]
    for e in result.trace:
        if e.source == 0 and e.event in ("s", "f"):
            assert e.time <= died_at


def test_metrics_csv_shape():
    cfg = validate_config({"stop": 5, "seed": 2})
    metrics = run_scenario(cfg).metrics
    text = metrics.to_csv_text()
    lines = text.strip().splitlines()
    assert lines[0] == "t,malicious_drops,malicious_accepts,victim_energy,cum_loss,ctrl_overhead,delivered"
    assert len(lines) == 1 + 5  # one row per whole second
    assert all(len(line.split(",")) == 7 for line in lines)


def test_kinematics_annex_enlarges_only_configured_kinds():
    cfg = validate_config({
        "nn": 3, "x": 50, "y": 50, "stop": 2, "rp": "AODV_MLET", "seed": 1,
        "range_r": 15, "nodes": "10,10; 20,10; 30,10", "flows": "0:2:5:100:0.5",
        "mlet_applies_to": "RREQ", "mlet_annex_bytes": 24,
    })
    trace = run_scenario(cfg).trace
    sizes = {kind: {e.pkt_size for e in trace if e.pkt_type == kind}
             for kind in ("RREQ", "RREP", "DATA")}
    assert sizes["RREQ"] == {24 + 24}
    assert sizes["RREP"] == {20}
    assert sizes["DATA"] == {100}


def test_report_summary_mentions_key_counters():
    cfg = _attack_config(rp="SAODV")
    report = run_scenario(cfg).report
    text = "\n".join(report.summary_lines())
    assert "protocol=SAODV" in text
    assert "malicious_drops" in text
    assert "DROP_MISMATCH" in text


def test_control_overhead_counter_counts_routing_packets():
    cfg = validate_config({"stop": 6, "seed": 9})
    result = run_scenario(cfg)
    from_trace = sum(1 for e in result.trace
                     if e.pkt_type in ("RREQ", "RREP", "RERR") and e.event in ("s", "f"))
    assert result.metrics.ctrl_overhead == from_trace
