"""Record types for the entity-state-flow knowledgebase.

Entities come in three flavors: classes (kinds of things), instances
(specific participants), and systems (composites allowed to stay
underspecified). Flows are process statements over entities; conceptual
models are class-only flows. Everything serializes to plain dicts with a
fixed key order so stores are byte-stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from paperstruct.model import Span

FLOW_METHOD = "method_flow"
FLOW_CONCEPTUAL = "conceptual_model"

ROLES = ("cause", "affected", "consumed", "produced", "researcher_action", "measured")

TRIGGER_STATE = "state_predicate"
TRIGGER_PROXIMITY = "proximity"
TRIGGER_RESEARCHER = "researcher"

RQ_ASPECT = "aspect_value"
RQ_COMPARISON = "comparison"

HYPOTHESIS_STATUSES = ("proposed", "confirmed", "rejected")
CONFIDENCE_LEVELS = ("asserted", "inferred", "unknown")
DISCOURSE_TYPES = ("design_rationale", "justification", "background", "other")
BLOCK_SUBTYPES = ("standard", "technique_development")


@dataclass
class PropertyValue:
    """A defining, fixed value of an entity, e.g. an atomic number."""

    name: str
    value: object
    unit: str | None = None

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "unit": self.unit}

    @classmethod
    def from_dict(cls, d: dict) -> "PropertyValue":
        return cls(name=d["name"], value=d["value"], unit=d.get("unit"))


@dataclass
class Dimension:
    """A named attribute space with the qualitative states it admits."""

    name: str
    states: list[str]
    context_note: str | None = None

    def to_dict(self) -> dict:
        return {"name": self.name, "states": list(self.states),
                "context_note": self.context_note}

    @classmethod
    def from_dict(cls, d: dict) -> "Dimension":
        return cls(name=d["name"], states=list(d["states"]),
                   context_note=d.get("context_note"))


@dataclass
class EntityClass:
    id: str
    name: str
    parent_class_ids: list[str] = field(default_factory=list)
    part_of_ids: list[str] = field(default_factory=list)
    collection_of: str | None = None
    properties: list[PropertyValue] = field(default_factory=list)
    dimensions: list[Dimension] = field(default_factory=list)
    # how an ambiguous phenomenon was editorially modeled
    modeled_as: str = "entity"
    situational: bool = False
    external_code: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "parent_class_ids": list(self.parent_class_ids),
            "part_of_ids": list(self.part_of_ids),
            "collection_of": self.collection_of,
            "properties": [p.to_dict() for p in self.properties],
            "dimensions": [d.to_dict() for d in self.dimensions],
            "modeled_as": self.modeled_as,
            "situational": self.situational,
            "external_code": self.external_code,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EntityClass":
        return cls(
            id=d["id"],
            name=d["name"],
            parent_class_ids=list(d.get("parent_class_ids", [])),
            part_of_ids=list(d.get("part_of_ids", [])),
            collection_of=d.get("collection_of"),
            properties=[PropertyValue.from_dict(p) for p in d.get("properties", [])],
            dimensions=[Dimension.from_dict(x) for x in d.get("dimensions", [])],
            modeled_as=d.get("modeled_as", "entity"),
            situational=d.get("situational", False),
            external_code=d.get("external_code"),
        )


@dataclass
class EntityInstance:
    id: str
    class_id: str
    property_overrides: list[PropertyValue] = field(default_factory=list)
    state_assignments: dict[str, str] = field(default_factory=dict)
    confidence: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "class_id": self.class_id,
            "property_overrides": [p.to_dict() for p in self.property_overrides],
            "state_assignments": dict(self.state_assignments),
            "confidence": dict(self.confidence),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EntityInstance":
        return cls(
            id=d["id"],
            class_id=d["class_id"],
            property_overrides=[PropertyValue.from_dict(p)
                                for p in d.get("property_overrides", [])],
            state_assignments=dict(d.get("state_assignments", {})),
            confidence=dict(d.get("confidence", {})),
        )


@dataclass
class SystemEntity:
    """A higher-level composite, e.g. an organism; may stay underspecified."""

    id: str
    name: str
    component_entity_ids: list[str] = field(default_factory=list)
    underspecified: bool = False
    notes: str = ""

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "component_entity_ids": list(self.component_entity_ids),
            "underspecified": self.underspecified,
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SystemEntity":
        return cls(
            id=d["id"],
            name=d["name"],
            component_entity_ids=list(d.get("component_entity_ids", [])),
            underspecified=d.get("underspecified", False),
            notes=d.get("notes", ""),
        )


@dataclass
class Participant:
    entity_id: str
    role: str

    def to_dict(self) -> dict:
        return {"entity_id": self.entity_id, "role": self.role}

    @classmethod
    def from_dict(cls, d: dict) -> "Participant":
        return cls(entity_id=d["entity_id"], role=d["role"])


@dataclass
class TriggerCondition:
    kind: str
    subject: str | None = None
    dimension: str | None = None
    state: str | None = None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "subject": self.subject,
                "dimension": self.dimension, "state": self.state}

    @classmethod
    def from_dict(cls, d: dict) -> "TriggerCondition":
        return cls(kind=d["kind"], subject=d.get("subject"),
                   dimension=d.get("dimension"), state=d.get("state"))


@dataclass
class StateChange:
    entity_id: str
    dimension: str
    to_state: str
    from_state: str | None = None

    def to_dict(self) -> dict:
        return {"kind": "state_change", "entity_id": self.entity_id,
                "dimension": self.dimension, "to_state": self.to_state,
                "from_state": self.from_state}


@dataclass
class EntityCreation:
    class_id: str
    note: str = ""

    def to_dict(self) -> dict:
        return {"kind": "entity_creation", "class_id": self.class_id,
                "note": self.note}


def effect_from_dict(d: dict):
    if d.get("kind") == "entity_creation":
        return EntityCreation(class_id=d["class_id"], note=d.get("note", ""))
    return StateChange(entity_id=d["entity_id"], dimension=d["dimension"],
                       to_state=d["to_state"], from_state=d.get("from_state"))


@dataclass
class Flow:
    id: str
    kind: str
    name: str
    abstraction_level: int = 1
    participants: list[Participant] = field(default_factory=list)
    triggers: list[TriggerCondition] = field(default_factory=list)
    effects: list = field(default_factory=list)
    is_measurement: bool = False
    dataset_id: str | None = None
    refines: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "name": self.name,
            "abstraction_level": self.abstraction_level,
            "participants": [p.to_dict() for p in self.participants],
            "triggers": [t.to_dict() for t in self.triggers],
            "effects": [e.to_dict() for e in self.effects],
            "is_measurement": self.is_measurement,
            "dataset_id": self.dataset_id,
            "refines": self.refines,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Flow":
        return cls(
            id=d["id"],
            kind=d["kind"],
            name=d["name"],
            abstraction_level=d.get("abstraction_level", 1),
            participants=[Participant.from_dict(p) for p in d.get("participants", [])],
            triggers=[TriggerCondition.from_dict(t) for t in d.get("triggers", [])],
            effects=[effect_from_dict(e) for e in d.get("effects", [])],
            is_measurement=d.get("is_measurement", False),
            dataset_id=d.get("dataset_id"),
            refines=d.get("refines"),
        )


@dataclass
class FlowInstance:
    """An executable realization of a method flow."""

    id: str
    flow_id: str
    executed_at: str | None = None
    dataset_id: str | None = None

    def to_dict(self) -> dict:
        return {"id": self.id, "flow_id": self.flow_id,
                "executed_at": self.executed_at, "dataset_id": self.dataset_id}

    @classmethod
    def from_dict(cls, d: dict) -> "FlowInstance":
        return cls(id=d["id"], flow_id=d["flow_id"],
                   executed_at=d.get("executed_at"), dataset_id=d.get("dataset_id"))


@dataclass
class MeshEdge:
    producer: str
    consumer: str
    via: str = ""

    def to_dict(self) -> dict:
        return {"producer": self.producer, "consumer": self.consumer, "via": self.via}

    @classmethod
    def from_dict(cls, d: dict) -> "MeshEdge":
        return cls(producer=d["producer"], consumer=d["consumer"], via=d.get("via", ""))


@dataclass
class Mesh:
    id: str
    flow_ids: list[str]
    edges: list[MeshEdge]
    knot_edges: list[int] = field(default_factory=list)  # indices into edges

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "flow_ids": list(self.flow_ids),
            "edges": [e.to_dict() for e in self.edges],
            "knot_edges": list(self.knot_edges),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Mesh":
        return cls(
            id=d["id"],
            flow_ids=list(d["flow_ids"]),
            edges=[MeshEdge.from_dict(e) for e in d.get("edges", [])],
            knot_edges=list(d.get("knot_edges", [])),
        )


@dataclass
class ResearchQuestion:
    id: str
    kind: str
    model_ids: list[str]
    parent_rq: str | None = None
    target: dict | None = None  # {"entity_id", "dimension"} for aspect_value
    answer: dict | None = None  # {"text", "rq_block_id"}

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "model_ids": list(self.model_ids),
            "parent_rq": self.parent_rq,
            "target": dict(self.target) if self.target else None,
            "answer": dict(self.answer) if self.answer else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ResearchQuestion":
        return cls(
            id=d["id"],
            kind=d["kind"],
            model_ids=list(d["model_ids"]),
            parent_rq=d.get("parent_rq"),
            target=dict(d["target"]) if d.get("target") else None,
            answer=dict(d["answer"]) if d.get("answer") else None,
        )


@dataclass
class Hypothesis:
    id: str
    model_id: str
    explains: StateChange
    status: str = "proposed"
    preferred: bool = False

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "model_id": self.model_id,
            "explains": self.explains.to_dict(),
            "status": self.status,
            "preferred": self.preferred,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Hypothesis":
        return cls(
            id=d["id"],
            model_id=d["model_id"],
            explains=effect_from_dict(d["explains"]),
            status=d.get("status", "proposed"),
            preferred=d.get("preferred", False),
        )


@dataclass
class DataPoint:
    id: str
    values: dict
    recorded_by: str

    def to_dict(self) -> dict:
        return {"id": self.id, "values": dict(self.values),
                "recorded_by": self.recorded_by}

    @classmethod
    def from_dict(cls, d: dict) -> "DataPoint":
        return cls(id=d["id"], values=dict(d["values"]), recorded_by=d["recorded_by"])


@dataclass
class DataSet:
    id: str
    instrument_ids: list[str]
    datapoints: list[DataPoint] = field(default_factory=list)
    reliability_note: str = ""
    validity_note: str = ""
    source_flow_id: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "instrument_ids": list(self.instrument_ids),
            "datapoints": [p.to_dict() for p in self.datapoints],
            "reliability_note": self.reliability_note,
            "validity_note": self.validity_note,
            "source_flow_id": self.source_flow_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DataSet":
        return cls(
            id=d["id"],
            instrument_ids=list(d["instrument_ids"]),
            datapoints=[DataPoint.from_dict(p) for p in d.get("datapoints", [])],
            reliability_note=d.get("reliability_note", ""),
            validity_note=d.get("validity_note", ""),
            source_flow_id=d.get("source_flow_id"),
        )


@dataclass
class Instrument:
    id: str
    name: str
    description: str = ""

    def to_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "description": self.description}

    @classmethod
    def from_dict(cls, d: dict) -> "Instrument":
        return cls(id=d["id"], name=d["name"], description=d.get("description", ""))


@dataclass
class Comment:
    id: str
    target: dict  # {"kind": "span", ...Span fields} or {"kind": "element", "element_id"}
    discourse_type: str
    text: str

    def to_dict(self) -> dict:
        return {"id": self.id, "target": dict(self.target),
                "discourse_type": self.discourse_type, "text": self.text}

    @classmethod
    def from_dict(cls, d: dict) -> "Comment":
        return cls(id=d["id"], target=dict(d["target"]),
                   discourse_type=d["discourse_type"], text=d["text"])


@dataclass
class ActivityBlock:
    """Goal-method-result overlay; spans may sit in different sections."""

    id: str
    goal_label: str
    goal_span: Span
    method_flow_ids: list[str] = field(default_factory=list)
    result_spans: list[Span] = field(default_factory=list)
    subtype: str = "standard"

    def spans(self) -> list[Span]:
        return [self.goal_span, *self.result_spans]

    def is_rq_block(self) -> bool:
        return False

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "goal_label": self.goal_label,
            "goal_span": self.goal_span.to_dict(),
            "method_flow_ids": list(self.method_flow_ids),
            "result_spans": [s.to_dict() for s in self.result_spans],
            "subtype": self.subtype,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ActivityBlock":
        return cls(
            id=d["id"],
            goal_label=d["goal_label"],
            goal_span=Span.from_dict(d["goal_span"]),
            method_flow_ids=list(d.get("method_flow_ids", [])),
            result_spans=[Span.from_dict(s) for s in d.get("result_spans", [])],
            subtype=d.get("subtype", "standard"),
        )


@dataclass
class RQBlock:
    """An activity block pivoting on a research question, with its answer."""

    id: str
    activity_block: ActivityBlock
    rq_id: str
    answer_span: Span | None = None
    answer_summary: str = ""
    literature_refs: list[str] = field(default_factory=list)

    @property
    def goal_label(self) -> str:
        return self.activity_block.goal_label

    @property
    def goal_span(self) -> Span:
        return self.activity_block.goal_span

    def spans(self) -> list[Span]:
        out = self.activity_block.spans()
        if self.answer_span is not None:
            out.append(self.answer_span)
        return out

    def is_rq_block(self) -> bool:
        return True

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "activity_block": self.activity_block.to_dict(),
            "rq_id": self.rq_id,
            "answer_span": self.answer_span.to_dict() if self.answer_span else None,
            "answer_summary": self.answer_summary,
            "literature_refs": list(self.literature_refs),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RQBlock":
        return cls(
            id=d["id"],
            activity_block=ActivityBlock.from_dict(d["activity_block"]),
            rq_id=d["rq_id"],
            answer_span=Span.from_dict(d["answer_span"]) if d.get("answer_span") else None,
            answer_summary=d.get("answer_summary", ""),
            literature_refs=list(d.get("literature_refs", [])),
        )
