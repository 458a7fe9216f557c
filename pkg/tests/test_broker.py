"""Discovery compilation, ranking, invocation lifecycle, and composition."""

from decimal import Decimal

import pytest

from test_query import DISCOVERY_QUERY

from soa_hitlcps.broker import (
    DiscoveryRequest,
    ScoringConfig,
    ServiceBroker,
    compile_request,
    parse_discovery_request,
)
from soa_hitlcps.errors import (
    EmptyCriteriaError,
    InputSignatureMismatchError,
    InvalidStateError,
    UnknownServiceError,
)
from soa_hitlcps.kb import Pattern, iri, string
from soa_hitlcps.query import And, Eq, InSet, QueryName, QueryPattern, Var, parse_query, query_equivalent
from soa_hitlcps.registry import COMPLETED, FAILED, REJECTED, RUNNING, ServiceRegistry
from soa_hitlcps.schema import parse_human_capability, parse_service_profile

DAVID_CAP = """\
SKILL Complex_Problem_Solving 6
KNOWLEDGE Medicine_and_Dentistry
CONTEXT siteB
"""

ERIN_CAP = """\
SKILL Monitoring 4
KNOWLEDGE Psychology
CONTEXT siteB
"""

CHAT_DOCTOR = """\
SERVICE chatDoctor
PROVIDER David
KIND processing
INPUT patient PhysicalThing
OUTPUT advice Output
PRECONDITION ?patient a PhysicalThing
EFFECT ADD ?patient advisedBy David
CONTEXT siteB
QOS reputation=4.5 cost=10 response_time=5
PARALLELISM 1
DECLARE advisedBy PhysicalThing PhysicalThing
"""

ERIN_WATCH = """\
SERVICE erinWatch
PROVIDER Erin
KIND sensing
OUTPUT reading Output
CONTEXT siteB
QOS reputation=4 cost=5 response_time=10
"""


def build_world():
    registry = ServiceRegistry()
    cap, contexts = parse_human_capability(DAVID_CAP)
    registry.register_human(iri("David"), cap, contexts)
    cap, contexts = parse_human_capability(ERIN_CAP)
    registry.register_human(iri("Erin"), cap, contexts)
    registry.register_human(iri("Adam"), parse_human_capability("")[0], (iri("siteQ"),))
    profile, provider = parse_service_profile(CHAT_DOCTOR)
    registry.publish_service(profile, provider)
    profile, provider = parse_service_profile(ERIN_WATCH)
    registry.publish_service(profile, provider)
    return registry, ServiceBroker(registry)


REFERENCE_REQUEST = DiscoveryRequest(
    required_skills=((iri("Complex_Problem_Solving"), None),),
    required_knowledge=(iri("Medicine_and_Dentistry"), iri("Therapy_and_Counseling")),
)


# -- request compilation ------------------------------------------------------------


def test_compile_matches_reference_query():
    compiled = compile_request(REFERENCE_REQUEST)
    assert query_equivalent(compiled, parse_query(DISCOVERY_QUERY))


def test_compile_context_variant():
    request = DiscoveryRequest(
        required_skills=((iri("Cardiac_output_CO_monitoring_units_or_accessories"), None),),
        context_constraints=(iri("siteA"),),
    )
    compiled = compile_request(request)
    predicates = [p.predicate for p in compiled.patterns]
    assert predicates == [
        QueryName("soa-hitlcps:presents"),
        QueryName("soa-hitlcps:hasProperty"),
        QueryName("soa-hitlcps:includeCapability"),
        QueryName("soa-hitlcps:includeContext"),
        QueryName("soa-hitlcps:hasHumanSkill"),
    ]
    assert compiled.patterns[3] == QueryPattern(
        Var("property"), QueryName("soa-hitlcps:includeContext"), Var("context")
    )
    assert compiled.filter == And((
        Eq("context", QueryName("soa-hitlcps:siteA")),
        Eq("skill", QueryName("soa-hitlcps:Cardiac_output_CO_monitoring_units_or_accessories")),
    ))


def test_compile_multi_skill_vars():
    request = DiscoveryRequest(
        required_skills=((iri("Monitoring"), None), (iri("Troubleshooting"), 3)),
    )
    compiled = compile_request(request)
    assert compiled.patterns[-2].object == Var("skill")
    assert compiled.patterns[-1].object == Var("skill2")
    assert compiled.filter == And((
        Eq("skill", QueryName("soa-hitlcps:Monitoring")),
        Eq("skill2", QueryName("soa-hitlcps:Troubleshooting")),
    ))


def test_parse_flat_request():
    request = parse_discovery_request(
        "DISCOVER skill=Complex_Problem_Solving:6 "
        "knowledge=Medicine_and_Dentistry,Therapy_and_Counseling "
        "context=siteA kind=processing qos.min_reputation=4"
    )
    assert request.required_skills == ((iri("Complex_Problem_Solving"), 6),)
    assert request.required_knowledge == (
        iri("Medicine_and_Dentistry"), iri("Therapy_and_Counseling"),
    )
    assert request.context_constraints == (iri("siteA"),)
    assert request.service_kind == "processing"
    assert request.qos_constraints == (("min_reputation", Decimal("4")),)


def test_parse_flat_request_rejects_junk():
    with pytest.raises(EmptyCriteriaError):
        parse_discovery_request("DISCOVER")
    with pytest.raises(EmptyCriteriaError):
        parse_discovery_request("DISCOVER banana")
    with pytest.raises(EmptyCriteriaError):
        parse_discovery_request("DISCOVER wavelength=3")
    with pytest.raises(EmptyCriteriaError):
        DiscoveryRequest()


# -- discovery and ranking -------------------------------------------------------------


def test_reference_discovery_finds_chat_doctor():
    _, broker = build_world()
    ranked = broker.discover(REFERENCE_REQUEST)
    assert [r.service for r in ranked] == [iri("chatDoctor")]
    assert ranked[0].provider == iri("David")
    assert ranked[0].score == Decimal("0.9042")


def test_score_oracle_values():
    scoring = ScoringConfig()
    assert scoring.score(Decimal("4.5"), Decimal("10"), Decimal("5")) == Decimal("0.9042")
    assert scoring.score(Decimal("5"), Decimal("0"), Decimal("0")) == Decimal("1.0000")
    assert scoring.score(Decimal("0"), Decimal("100"), Decimal("60")) == Decimal("0.0000")
    # saturation: beyond the caps the penalty stops growing
    assert scoring.score(Decimal("5"), Decimal("200"), Decimal("120")) == Decimal("0.5000")


def test_ranking_and_tiebreak():
    registry, broker = build_world()
    for name, reputation in (("aTwin", "4"), ("bTwin", "4"), ("cBest", "5")):
        profile, _ = parse_service_profile(
            f"SERVICE {name}\nKIND processing\nQOS reputation={reputation} cost=10 response_time=5\n"
        )
        registry.publish_service(profile, iri("David"))
    request = DiscoveryRequest(required_skills=((iri("Complex_Problem_Solving"), None),))
    ranked = broker.discover(request)
    names = [r.service for r in ranked]
    assert names.index(iri("cBest")) == 0
    assert names.index(iri("aTwin")) < names.index(iri("bTwin"))


def test_min_scale_filters_humans():
    _, broker = build_world()
    strict = DiscoveryRequest(required_skills=((iri("Complex_Problem_Solving"), 7),))
    assert broker.discover(strict) == []
    exact = DiscoveryRequest(required_skills=((iri("Complex_Problem_Solving"), 6),))
    assert [r.service for r in broker.discover(exact)] == [iri("chatDoctor")]


def test_kind_filter():
    _, broker = build_world()
    sensing = DiscoveryRequest(service_kind="sensing")
    assert [r.service for r in broker.discover(sensing)] == [iri("erinWatch")]
    processing = DiscoveryRequest(service_kind="processing")
    assert [r.service for r in broker.discover(processing)] == [iri("chatDoctor")]


def test_qos_constraint_filter():
    _, broker = build_world()
    request = DiscoveryRequest(
        required_skills=((iri("Complex_Problem_Solving"), None),),
        qos_constraints=(("min_reputation", Decimal("4.6")),),
    )
    assert broker.discover(request) == []
    request = DiscoveryRequest(
        required_skills=((iri("Complex_Problem_Solving"), None),),
        qos_constraints=(("max_cost", Decimal("5")),),
    )
    assert broker.discover(request) == []


def test_adding_criteria_never_grows_results():
    _, broker = build_world()
    loose = DiscoveryRequest(required_skills=((iri("Complex_Problem_Solving"), None),))
    tight = DiscoveryRequest(
        required_skills=((iri("Complex_Problem_Solving"), None),),
        required_knowledge=(iri("Therapy_and_Counseling"),),
    )
    loose_services = {r.service for r in broker.discover(loose)}
    tight_services = {r.service for r in broker.discover(tight)}
    assert tight_services <= loose_services


def test_time_window_limitation_in_discovery():
    registry, broker = build_world()
    profile, _ = parse_service_profile(
        "SERVICE nightShift\nKIND processing\nQOS reputation=4\nLIMITATION time_window 0 100\n"
    )
    registry.publish_service(profile, iri("David"))
    request = DiscoveryRequest(required_skills=((iri("Complex_Problem_Solving"), None),))
    found_any_time = {r.service for r in broker.discover(request)}
    assert iri("nightShift") in found_any_time  # no clock given, window not enforced
    found_late = {r.service for r in broker.discover(request, now=150)}
    assert iri("nightShift") not in found_late
    found_early = {r.service for r in broker.discover(request, now=50)}
    assert iri("nightShift") in found_early


def test_withdrawn_service_not_discovered():
    registry, broker = build_world()
    registry.withdraw_service(iri("chatDoctor"))
    assert broker.discover(REFERENCE_REQUEST) == []


# -- invocation -----------------------------------------------------------------------


def test_invoke_complete_applies_effects_and_rating():
    registry, broker = build_world()
    invocation = broker.invoke(iri("chatDoctor"), iri("Cathy"), {"patient": iri("Adam")})
    assert invocation.status == RUNNING
    fact = Pattern(iri("Adam"), iri("advisedBy"), iri("David"))
    assert not registry.kb.match(fact)
    broker.complete_invocation(invocation, rating=Decimal("5"))
    assert invocation.status == COMPLETED
    assert registry.kb.match(fact)
    assert registry.reputation_of(iri("chatDoctor")) == Decimal("5.00")


def test_invoke_failed_applies_no_effects():
    registry, broker = build_world()
    invocation = broker.invoke(iri("chatDoctor"), iri("Cathy"), {"patient": iri("Adam")})
    broker.complete_invocation(invocation, outcome=FAILED, rating=Decimal("1"))
    assert invocation.status == FAILED
    assert not registry.kb.match(Pattern(iri("Adam"), iri("advisedBy"), iri("David")))
    assert registry.reputation_of(iri("chatDoctor")) == Decimal("1.00")


def test_invoke_signature_checks():
    _, broker = build_world()
    with pytest.raises(UnknownServiceError):
        broker.invoke(iri("ghost"), iri("Cathy"), {})
    with pytest.raises(InputSignatureMismatchError):
        broker.invoke(iri("chatDoctor"), iri("Cathy"), {})
    with pytest.raises(InputSignatureMismatchError):
        broker.invoke(iri("chatDoctor"), iri("Cathy"),
                      {"patient": iri("Adam"), "extra": iri("Adam")})
    with pytest.raises(InputSignatureMismatchError):
        # a Context individual is not a PhysicalThing
        broker.invoke(iri("chatDoctor"), iri("Cathy"), {"patient": iri("siteQ")})


def test_invoke_capacity():
    _, broker = build_world()
    first = broker.invoke(iri("chatDoctor"), iri("Cathy"), {"patient": iri("Adam")})
    assert first.status == RUNNING
    second = broker.invoke(iri("chatDoctor"), iri("Erin"), {"patient": iri("Adam")})
    assert second.status == REJECTED
    assert second.reason == "at_capacity"
    broker.complete_invocation(first)
    third = broker.invoke(iri("chatDoctor"), iri("Erin"), {"patient": iri("Adam")})
    assert third.status == RUNNING


def test_invoke_location_limitation():
    registry, broker = build_world()
    profile, _ = parse_service_profile(
        "SERVICE localHelp\nKIND processing\nQOS reputation=4\nLIMITATION location siteB\n"
    )
    registry.publish_service(profile, iri("David"))
    rejected = broker.invoke(iri("localHelp"), iri("Adam"), {})  # Adam is at siteQ
    assert rejected.status == REJECTED
    assert rejected.reason == "limitation"
    accepted = broker.invoke(iri("localHelp"), iri("Erin"), {})  # Erin is at siteB
    assert accepted.status == RUNNING


def test_invoke_time_window_limitation():
    registry, broker = build_world()
    profile, _ = parse_service_profile(
        "SERVICE dayShift\nKIND processing\nQOS reputation=4\nLIMITATION time_window 10 20\n"
    )
    registry.publish_service(profile, iri("David"))
    rejected = broker.invoke(iri("dayShift"), iri("Erin"), {}, now=30)
    assert (rejected.status, rejected.reason) == (REJECTED, "limitation")
    accepted = broker.invoke(iri("dayShift"), iri("Erin"), {}, now=15)
    assert accepted.status == RUNNING


def test_invoke_precondition_rejection_and_binding_capture():
    registry, broker = build_world()
    profile, _ = parse_service_profile(
        "SERVICE follower\nKIND processing\n"
        "INPUT patient PhysicalThing\n"
        "PRECONDITION ?patient advisedBy ?advisor\n"
        "EFFECT ADD ?advisor performs followUp\n"
        "QOS reputation=4\n"
        "DECLARE advisedBy PhysicalThing PhysicalThing\n"
    )
    registry.publish_service(profile, iri("David"))
    rejected = broker.invoke(iri("follower"), iri("Erin"), {"patient": iri("Adam")})
    assert (rejected.status, rejected.reason) == (REJECTED, "precondition")
    registry.kb.add_statement(iri("Adam"), iri("advisedBy"), iri("David"))
    invocation = broker.invoke(iri("follower"), iri("Erin"), {"patient": iri("Adam")})
    assert invocation.status == RUNNING
    assert invocation.bindings == {"advisor": iri("David")}
    broker.complete_invocation(invocation)
    assert registry.kb.match(Pattern(iri("David"), iri("performs"), iri("followUp")))


def test_effect_removal():
    registry, broker = build_world()
    registry.kb.add_statement(iri("Adam"), iri("performs"), iri("waiting"))
    profile, _ = parse_service_profile(
        "SERVICE dequeue\nKIND processing\nINPUT patient PhysicalThing\n"
        "EFFECT DEL ?patient performs waiting\nQOS reputation=4\n"
    )
    registry.publish_service(profile, iri("David"))
    invocation = broker.invoke(iri("dequeue"), iri("Erin"), {"patient": iri("Adam")})
    broker.complete_invocation(invocation)
    assert not registry.kb.match(Pattern(iri("Adam"), iri("performs"), iri("waiting")))


def test_complete_requires_running():
    _, broker = build_world()
    invocation = broker.invoke(iri("chatDoctor"), iri("Cathy"), {"patient": iri("Adam")})
    broker.complete_invocation(invocation)
    with pytest.raises(InvalidStateError):
        broker.complete_invocation(invocation)
    with pytest.raises(InvalidStateError):
        broker.complete_invocation(invocation, outcome="teleported")


def test_invocation_ledger_is_conserved():
    registry, broker = build_world()
    outcomes = []
    for index in range(6):
        invocation = broker.invoke(iri("chatDoctor"), iri("Cathy"), {"patient": iri("Adam")})
        outcomes.append(invocation)
        if invocation.status == RUNNING and index % 2 == 0:
            broker.complete_invocation(invocation)
    ids = [inv.id for inv in registry.invocations]
    assert ids == sorted(ids) and len(set(ids)) == len(ids)
    by_status = {}
    for invocation in registry.invocations:
        by_status[invocation.status] = by_status.get(invocation.status, 0) + 1
    assert sum(by_status.values()) == len(registry.invocations) == 6


# -- composition -------------------------------------------------------------------------


def test_compose_chains_io_types():
    registry, broker = build_world()
    steps = (
        ("stepSense", "", "raw Reading"),
        ("stepClean", "raw Reading", "clean Reading2"),
        ("stepJudge", "clean Reading2", "verdict Verdict"),
    )
    for name, inp, outp in steps:
        lines = [f"SERVICE {name}", "KIND processing", "QOS reputation=4"]
        if inp:
            lines.append(f"INPUT {inp}")
        lines.append(f"OUTPUT {outp}")
        profile, _ = parse_service_profile("\n".join(lines) + "\n")
        registry.publish_service(profile, iri("David"))
    plan = broker.compose((), (iri("Verdict"),))
    assert plan == [iri("stepSense"), iri("stepClean"), iri("stepJudge")]


def test_compose_unreachable_returns_none():
    _, broker = build_world()
    assert broker.compose((), (iri("Unobtainium"),)) is None


def test_compose_prefers_ascending_names_on_ties():
    registry, broker = build_world()
    for name in ("bMaker", "aMaker"):
        profile, _ = parse_service_profile(
            f"SERVICE {name}\nKIND processing\nOUTPUT thing Widget\nQOS reputation=4\n"
        )
        registry.publish_service(profile, iri("David"))
    assert broker.compose((), (iri("Widget"),)) == [iri("aMaker")]
