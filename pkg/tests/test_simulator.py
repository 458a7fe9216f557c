from pathlib import Path

import pytest

from soa_hitlcps.datafiles import scenario_dir
from soa_hitlcps.errors import ParseError, UnknownNodeError, UnknownServiceError
from soa_hitlcps.kb import Pattern, iri
from soa_hitlcps.registry import COMPLETED
from soa_hitlcps.simulator import (
    NodeLoop,
    Rule,
    Scenario,
    SimEvent,
    Simulation,
    load_and_run,
    load_scenario,
    node_tick,
    run_scenario,
)


def _load(name):
    directory = Path(scenario_dir())
    return load_scenario((directory / name).read_text(encoding="utf-8"), directory)


def _empty_scenario():
    from soa_hitlcps.registry import ServiceRegistry

    return Scenario(registry=ServiceRegistry(), nodes={}, events=[], expectations=[])


# -- node_tick in isolation ---------------------------------------------------


def test_node_tick_with_empty_inbox_emits_nothing():
    sim = Simulation(_empty_scenario())
    loop = NodeLoop(node=iri("Nia"), kind="HUMAN")
    node_tick(sim, loop, 1)
    assert sim.trace.entries == []


def test_node_tick_without_matching_rule_logs_observation_only():
    sim = Simulation(_empty_scenario())
    loop = NodeLoop(node=iri("Nia"), kind="HUMAN")
    loop.inbox.append(SimEvent(1, 0, "signal", (("node", iri("Nia")), ("signal", "ping"))))
    node_tick(sim, loop, 1)
    phases = [(e.phase, e.action) for e in sim.trace.entries]
    assert phases == [("monitor", "observe"), ("analyze", "no-rule")]
    assert sim.trace.entries[0].detail == "signal=ping"


def test_node_tick_drains_the_inbox():
    sim = Simulation(_empty_scenario())
    loop = NodeLoop(node=iri("Nia"), kind="HUMAN")
    loop.inbox.append(SimEvent(1, 0, "signal", (("node", iri("Nia")), ("signal", "ping"))))
    node_tick(sim, loop, 1)
    assert loop.inbox == []
    node_tick(sim, loop, 2)
    assert len(sim.trace.entries) == 2


def test_first_matching_rule_wins():
    sim = Simulation(_empty_scenario())
    rules = (
        Rule((("event", "signal"), ("signal", "other")), "answer", ()),
        Rule((("event", "signal"),), "acquire-knowledge", ()),
        Rule((("event", "signal"),), "answer", ()),
    )
    loop = NodeLoop(node=iri("Nia"), kind="MACHINE", rules=rules)
    event = SimEvent(1, 0, "signal", (("node", iri("Nia")), ("signal", "ping")))
    assert sim.match_rule(loop, event) is rules[1]


# -- the chat scenario -------------------------------------------------------


@pytest.fixture(scope="module")
def chat_run():
    scenario = _load("scenario2_chat.scn")
    return scenario, run_scenario(scenario)


def test_chat_scenario_meets_all_expectations(chat_run):
    _, result = chat_run
    failures = [c.line() for c in result.checks if not c.ok]
    assert result.all_ok, failures


def test_chat_scenario_delegates_exactly_once(chat_run):
    _, result = chat_run
    discoveries = [e for e in result.trace.entries if e.phase == "execute" and e.action == "discover"]
    assert len(discoveries) == 1
    assert discoveries[0].time == 3
    assert discoveries[0].detail == "found=chatDoctor score=0.9042"


def test_chat_scenario_answers_locally_after_learning(chat_run):
    _, result = chat_run
    acquired = [e for e in result.trace.entries if e.action == "acquire-knowledge" and e.phase == "execute"]
    assert [e.time for e in acquired] == [4]
    late_answers = [e for e in result.trace.entries
                    if e.phase == "execute" and e.action == "answer" and e.time == 5]
    assert len(late_answers) == 1
    assert "topic=HeadDiscomfort" in late_answers[0].detail
    assert not any(e.action == "discover" and e.phase == "execute" and e.time > 3
                   for e in result.trace.entries)


def test_chat_scenario_applies_completion_effects(chat_run):
    scenario, _ = chat_run
    kb = scenario.registry.kb
    assert kb.match(Pattern(iri("Adam"), iri("advisedBy"), iri("David")))
    assert kb.match(Pattern(iri("Adam"), iri("consumes"), iri("chatbotService")))


def test_chat_scenario_records_ratings_for_both_services(chat_run):
    scenario, _ = chat_run
    registry = scenario.registry
    assert str(registry.reputation_of(iri("chatDoctor"))) == "5.00"
    assert str(registry.reputation_of(iri("chatbotService"))) == "5.00"
    raters = {(rec.service, rec.requester)
              for records in registry.experience.values() for rec in records}
    assert (iri("chatbotService"), iri("Adam")) in raters
    assert (iri("chatDoctor"), iri("Cathy")) in raters


def test_chat_scenario_shares_messages_with_open_sessions(chat_run):
    _, result = chat_run
    observers_at_5 = {e.node for e in result.trace.entries if e.time == 5 and e.phase == "monitor"}
    assert observers_at_5 == {"Cathy", "David"}


def test_chat_scenario_invocations_all_terminal(chat_run):
    scenario, _ = chat_run
    assert [inv.status for inv in scenario.registry.invocations] == [COMPLETED, COMPLETED]


# -- the monitoring scenario ----------------------------------------------------


@pytest.fixture(scope="module")
def ecg_run():
    scenario = _load("scenario1_ecg.scn")
    return scenario, run_scenario(scenario)


def test_ecg_scenario_meets_all_expectations(ecg_run):
    _, result = ecg_run
    failures = [c.line() for c in result.checks if not c.ok]
    assert result.all_ok, failures


def test_ecg_scenario_discovers_the_site_nurse(ecg_run):
    _, result = ecg_run
    found = [e for e in result.trace.entries if e.phase == "execute" and e.action == "discover"]
    assert [e.detail for e in found] == ["found=actuatingBySisy score=0.8458"]


def test_ecg_scenario_alerts_the_discovered_provider(ecg_run):
    _, result = ecg_run
    notify = [e for e in result.trace.entries if e.phase == "execute" and e.action == "notify"]
    assert len(notify) == 1
    assert "service=ecgAlert" in notify[0].detail
    assert "consumer=Sisy" in notify[0].detail


def test_ecg_scenario_rates_in_both_directions(ecg_run):
    scenario, _ = ecg_run
    raters = {(rec.service, rec.requester)
              for records in scenario.registry.experience.values() for rec in records}
    assert (iri("actuatingBySisy"), iri("EcgDev")) in raters
    assert (iri("ecgAlert"), iri("Sisy")) in raters


def test_ecg_scenario_applies_care_effect(ecg_run):
    scenario, _ = ecg_run
    kb = scenario.registry.kb
    assert kb.match(Pattern(iri("Andy"), iri("caredBy"), iri("Sisy")))


# -- determinism ---------------------------------------------------------------


@pytest.mark.parametrize("name", ["scenario1_ecg.scn", "scenario2_chat.scn"])
def test_traces_are_byte_identical_across_runs(name):
    first = run_scenario(_load(name)).trace.to_tsv()
    second = run_scenario(_load(name)).trace.to_tsv()
    assert first == second
    assert first.endswith("\n")
    for line in first.rstrip("\n").split("\n"):
        assert len(line.split("\t")) == 5


def test_load_and_run_helper_matches_manual_flow():
    directory = Path(scenario_dir())
    via_helper = load_and_run(directory / "scenario1_ecg.scn")
    manual = run_scenario(_load("scenario1_ecg.scn"))
    assert via_helper.trace.to_tsv() == manual.trace.to_tsv()
    assert via_helper.all_ok


# -- parsing and error handling ---------------------------------------------------


def test_rule_for_unknown_node_is_rejected(tmp_path):
    with pytest.raises(UnknownNodeError):
        load_scenario("RULE Ghost WHEN event=signal THEN answer\n", tmp_path)


def test_unknown_directive_is_a_parse_error(tmp_path):
    with pytest.raises(ParseError) as err:
        load_scenario("HELLO world\n", tmp_path)
    assert err.value.line == 1


def test_malformed_event_reports_its_line(tmp_path):
    with pytest.raises(ParseError) as err:
        load_scenario("\n\nAT 1 MESSAGE onlyone\n", tmp_path)
    assert err.value.line == 3


def test_request_for_unknown_service_fails_at_delivery(tmp_path):
    (tmp_path / "n.cap").write_text("PERFORMANCE Dependability 3\n", encoding="utf-8")
    scenario = load_scenario(
        "NODE Nia HUMAN n.cap\nAT 1 REQUEST Nia missingService\n", tmp_path
    )
    with pytest.raises(UnknownServiceError):
        run_scenario(scenario)


def test_tick_events_advance_time_without_trace_rows(tmp_path):
    (tmp_path / "n.cap").write_text("PERFORMANCE Dependability 3\n", encoding="utf-8")
    scenario = load_scenario(
        "NODE Nia HUMAN n.cap\nAT 1 TICK\nAT 2 SIGNAL Nia ping\nAT 9 TICK\n"
        "EXPECT NONE_AFTER 2 answer\n",
        tmp_path,
    )
    result = run_scenario(scenario)
    assert result.all_ok
    assert [e.time for e in result.trace.entries] == [2, 2]


def test_comments_and_blank_lines_are_ignored(tmp_path):
    scenario = load_scenario("# nothing here\n\n   # indented comment\n", tmp_path)
    assert scenario.nodes == {} and scenario.events == []
