"""Forward-chaining materialization, consistency and OntoClean checking.

Materialization computes the least fixpoint of three rules:

* type inheritance: ``x TYPE C`` and ``C SUBCLASSOF D`` imply ``x TYPE D``;
* subclass transitivity;
* axiom application: an individual satisfying an axiom body (all conjuncts
  for a conjunction; some asserted-or-inferred fact ``x p y`` with
  ``y TYPE C`` for an existential) gains the head type.

The input kb is never mutated; rules only add, so the result is idempotent
and monotone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import UnannotatedClassError
from .kb import (
    ClassAxiom,
    ClassExpr,
    Conjunction,
    Iri,
    KnowledgeBase,
    MetaAnnotation,
    NamedClass,
    SomeValues,
    term_sort_key,
)


def _satisfies(kb: KnowledgeBase, individual: Iri, expr: ClassExpr) -> bool:
    if isinstance(expr, NamedClass):
        return (individual, expr.iri) in kb.type_assertions
    if isinstance(expr, SomeValues):
        for stmt in kb.statements:
            if (
                stmt.subject == individual
                and stmt.predicate == expr.prop
                and isinstance(stmt.object, Iri)
                and (stmt.object, expr.filler) in kb.type_assertions
            ):
                return True
        return False
    return all(_satisfies(kb, individual, part) for part in expr.parts)


def materialize(kb: KnowledgeBase) -> KnowledgeBase:
    """Return a copy of ``kb`` extended to the least inference fixpoint."""
    out = kb.copy()
    changed = True
    while changed:
        changed = False
        # subclass transitivity
        for child, parent in list(out.subclass_links):
            for child2, parent2 in list(out.subclass_links):
                if parent == child2 and (child, parent2) not in out.subclass_links:
                    out.subclass_links.add((child, parent2))
                    changed = True
        # type inheritance
        for individual, cls in list(out.type_assertions):
            for child, parent in out.subclass_links:
                if child == cls and (individual, parent) not in out.type_assertions:
                    out.type_assertions.add((individual, parent))
                    changed = True
        # axiom application
        candidates = sorted(out.individuals(), key=term_sort_key)
        for axiom in out.axioms:
            for individual in candidates:
                if (individual, axiom.head) in out.type_assertions:
                    continue
                if _satisfies(out, individual, axiom.body):
                    out.type_assertions.add((individual, axiom.head))
                    changed = True
    return out


# --------------------------------------------------------------------------
# Consistency


@dataclass(frozen=True)
class DisjointnessViolation:
    individual: Iri
    first: Iri
    second: Iri


@dataclass(frozen=True)
class OntocleanViolation:
    child: Iri
    parent: Iri
    flag: str


@dataclass
class ConsistencyReport:
    """Findings; all three lists empty means the kb is consistent."""

    disjointness_violations: list = field(default_factory=list)
    unsatisfiable_classes: list = field(default_factory=list)
    ontoclean_violations: list = field(default_factory=list)

    @property
    def is_consistent(self) -> bool:
        return not (
            self.disjointness_violations
            or self.unsatisfiable_classes
            or self.ontoclean_violations
        )


def _canonical_disjoint_pairs(kb: KnowledgeBase) -> list:
    pairs = {tuple(sorted(p, key=term_sort_key)) for p in kb.disjoint_pairs}
    return sorted(pairs, key=lambda p: (term_sort_key(p[0]), term_sort_key(p[1])))


def _conjunction_named_parts(axiom: ClassAxiom):
    """Named conjunct Iris if the body is a pure conjunction of named classes."""
    body = axiom.body
    if isinstance(body, NamedClass):
        return (body.iri,)
    if isinstance(body, Conjunction) and all(isinstance(p, NamedClass) for p in body.parts):
        return tuple(p.iri for p in body.parts)
    return None


def check_consistency(kb: KnowledgeBase) -> ConsistencyReport:
    """Disjointness violations and unsatisfiable classes over the materialized kb."""
    m = materialize(kb)
    report = ConsistencyReport()
    pairs = _canonical_disjoint_pairs(m)
    for individual in sorted(m.individuals(), key=term_sort_key):
        types = m.types_of(individual)
        for a, b in pairs:
            if a in types and b in types:
                report.disjointness_violations.append(DisjointnessViolation(individual, a, b))
    for cls in sorted(m.class_decls, key=term_sort_key):
        supers = m.superclasses(cls) | {cls}
        grown = True
        while grown:
            grown = False
            for axiom in m.axioms:
                named = _conjunction_named_parts(axiom)
                if named and set(named) <= supers and axiom.head not in supers:
                    supers.add(axiom.head)
                    grown = True
        for a, b in pairs:
            if a in supers and b in supers:
                report.unsatisfiable_classes.append(cls)
                break
    return report


# --------------------------------------------------------------------------
# OntoClean

# parent flag -> the flag the child must then carry (same flag in every case)
_PROPAGATED_FLAGS = ("~R", "~U", "+I", "+U")


def annotations_from_kb(kb: KnowledgeBase) -> list[MetaAnnotation]:
    return [kb.annotations[cls] for cls in sorted(kb.annotations, key=term_sort_key)]


def check_ontoclean(kb: KnowledgeBase, annotations=None) -> list:
    """Metaproperty violations over the kb's direct subclass links.

    For each link ``p SUBCLASSOF q``: if q carries ~R, ~U, +I or +U then p
    must carry the same flag; each missing flag is one violation
    ``(child, parent, flag)``.  Every class appearing in a link must have an
    annotation record (possibly with all dimensions unset), otherwise
    :class:`UnannotatedClassError` is raised.
    """
    if annotations is None:
        annotations = annotations_from_kb(kb)
    by_class = {ann.cls: ann for ann in annotations}
    links = sorted(kb.subclass_links, key=lambda l: (term_sort_key(l[0]), term_sort_key(l[1])))
    for child, parent in links:
        for cls in (child, parent):
            if cls not in by_class:
                raise UnannotatedClassError(cls)
    violations = []
    for child, parent in links:
        child_ann = by_class[child]
        parent_ann = by_class[parent]
        child_flags = set(child_ann.flags())
        for flag in _PROPAGATED_FLAGS:
            if flag in parent_ann.flags() and flag not in child_flags:
                violations.append(OntocleanViolation(child, parent, flag))
    return violations


# --------------------------------------------------------------------------
# Rendering and axiom self-checks


def render_report(report: ConsistencyReport) -> str:
    """One ``VIOLATION <kind> <subject> [<detail>...]`` line per finding."""
    lines = []
    for v in report.disjointness_violations:
        lines.append(f"VIOLATION disjointness {v.individual} {v.first} {v.second}")
    for cls in report.unsatisfiable_classes:
        lines.append(f"VIOLATION unsatisfiable {cls}")
    for v in report.ontoclean_violations:
        lines.append(f"VIOLATION ontoclean {v.child} {v.parent} {v.flag}")
    if not lines:
        return "clean\n"
    return "\n".join(lines) + "\n"


def axiom_inference_check(kb: KnowledgeBase, axiom: ClassAxiom) -> bool:
    """True when a fresh witness satisfying the body is inferred the head type.

    Builds a scratch copy of ``kb``, adds a synthetic individual typed per
    the body's named conjuncts with synthetic fillers for existentials, and
    checks materialization assigns the head with no direct head typing.
    """
    scratch = kb.copy()
    witness = Iri("soa-hitlcps", "axiom_check_witness")

    def assert_body(expr: ClassExpr, subject: Iri, counter=[0]) -> None:
        if isinstance(expr, NamedClass):
            scratch.add_type(subject, expr.iri)
        elif isinstance(expr, SomeValues):
            counter[0] += 1
            filler = Iri("soa-hitlcps", f"axiom_check_filler_{counter[0]}")
            scratch.add_type(filler, expr.filler)
            scratch.add_statement(subject, expr.prop, filler)
        else:
            for part in expr.parts:
                assert_body(part, subject)

    assert_body(axiom.body, witness)
    if (witness, axiom.head) in scratch.type_assertions:
        return False  # head held before inference: not a test of the axiom
    return (witness, axiom.head) in materialize(scratch).type_assertions
