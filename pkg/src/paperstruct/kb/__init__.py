"""Qualitative entity-state-flow knowledgebase for a single article."""

from paperstruct.kb.records import (
    BLOCK_SUBTYPES,
    CONFIDENCE_LEVELS,
    DISCOURSE_TYPES,
    FLOW_CONCEPTUAL,
    FLOW_METHOD,
    HYPOTHESIS_STATUSES,
    ROLES,
    RQ_ASPECT,
    RQ_COMPARISON,
    TRIGGER_PROXIMITY,
    TRIGGER_RESEARCHER,
    TRIGGER_STATE,
    ActivityBlock,
    Comment,
    DataPoint,
    DataSet,
    Dimension,
    EntityClass,
    EntityCreation,
    EntityInstance,
    Flow,
    FlowInstance,
    Hypothesis,
    Instrument,
    Mesh,
    MeshEdge,
    Participant,
    PropertyValue,
    ResearchQuestion,
    RQBlock,
    StateChange,
    SystemEntity,
    TriggerCondition,
)
from paperstruct.kb.store import KnowledgeBase, natural_key

__all__ = [
    "ActivityBlock",
    "BLOCK_SUBTYPES",
    "CONFIDENCE_LEVELS",
    "Comment",
    "DISCOURSE_TYPES",
    "DataPoint",
    "DataSet",
    "Dimension",
    "EntityClass",
    "EntityCreation",
    "EntityInstance",
    "FLOW_CONCEPTUAL",
    "FLOW_METHOD",
    "Flow",
    "FlowInstance",
    "HYPOTHESIS_STATUSES",
    "Hypothesis",
    "Instrument",
    "KnowledgeBase",
    "Mesh",
    "MeshEdge",
    "Participant",
    "PropertyValue",
    "ROLES",
    "RQBlock",
    "RQ_ASPECT",
    "RQ_COMPARISON",
    "ResearchQuestion",
    "StateChange",
    "SystemEntity",
    "TRIGGER_PROXIMITY",
    "TRIGGER_RESEARCHER",
    "TRIGGER_STATE",
    "TriggerCondition",
    "natural_key",
]
