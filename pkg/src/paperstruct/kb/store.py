"""Article-scoped knowledgebase store with a serialized command path.

Every mutation is a JSON-serializable command applied through ``apply``,
which validates fully before touching any table and appends the normalized
command (ids assigned) to an append-only log. Replaying the log on an
empty store reproduces the exact same state, byte for byte.
"""

from __future__ import annotations

import logging
import re

from paperstruct.errors import (
    ConceptualModelNotInstantiable,
    CycleError,
    DuplicateId,
    EmptyBlock,
    InstanceInConceptualModel,
    InvalidState,
    MeasurementRequiresDataset,
    MethodFlowNotQuestionable,
    NotConceptualModel,
    NotMeasurementFlow,
    NotMethodFlow,
    OutOfRange,
    UnknownBlock,
    UnknownClass,
    UnknownCommand,
    UnknownDimension,
    UnknownEntity,
    UnknownFlow,
    UnknownInstrument,
    UnknownModel,
    UnknownReference,
    UnknownRQ,
    UnknownRole,
    UnknownSpan,
    UnknownState,
    UnknownTarget,
    UnresolvedParticipant,
)
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
    effect_from_dict,
)
from paperstruct.model import Article, Span, block_positions, reference_map, resolve_span

log = logging.getLogger(__name__)

_ID_SUFFIX = re.compile(r"(\d+)$")


def _slug(name: str) -> str:
    s = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")
    return s or "class"


def natural_key(identifier: str) -> tuple:
    m = _ID_SUFFIX.search(identifier)
    if m:
        return (identifier[:m.start()], int(m.group(1)))
    return (identifier, -1)


def _has_cycle(graph: dict[str, list[str]]) -> bool:
    """Iterative three-color DFS over the whole graph."""
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {n: WHITE for n in graph}
    for root in graph:
        if color[root] != WHITE:
            continue
        stack = [(root, iter(graph.get(root, ())))]
        color[root] = GRAY
        while stack:
            node, successors = stack[-1]
            advanced = False
            for succ in successors:
                if succ not in color:
                    continue
                if color[succ] == GRAY:
                    return True
                if color[succ] == WHITE:
                    color[succ] = GRAY
                    stack.append((succ, iter(graph.get(succ, ()))))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                stack.pop()
    return False


class KnowledgeBase:
    """One article's entity-state-flow model plus its discourse blocks."""

    def __init__(self, article: Article | None = None, article_id: str | None = None):
        self.article = article
        self.article_id = article_id or (article.id if article else None)
        self.classes: dict[str, EntityClass] = {}
        self.instances: dict[str, EntityInstance] = {}
        self.systems: dict[str, SystemEntity] = {}
        self.flows: dict[str, Flow] = {}
        self.flow_instances: dict[str, FlowInstance] = {}
        self.meshes: dict[str, Mesh] = {}
        self.research_questions: dict[str, ResearchQuestion] = {}
        self.hypotheses: dict[str, Hypothesis] = {}
        self.datasets: dict[str, DataSet] = {}
        self.instruments: dict[str, Instrument] = {}
        self.comments: dict[str, Comment] = {}
        self.activity_blocks: dict[str, ActivityBlock] = {}
        self.rq_blocks: dict[str, RQBlock] = {}
        self.log: list[dict] = []
        # ids auto-created as relatives of another class, awaiting definition
        self._placeholders: set[str] = set()

    # -- id and reference plumbing ----------------------------------------

    def _next_id(self, prefix: str, existing) -> str:
        best = 0
        for eid in existing:
            if eid.startswith(prefix) and eid[len(prefix):].isdigit():
                best = max(best, int(eid[len(prefix):]))
        return f"{prefix}{best + 1}"

    def _all_block_ids(self):
        ids = set(self.activity_blocks)
        ids.update(rqb.activity_block.id for rqb in self.rq_blocks.values())
        ids.update(self.rq_blocks)
        return ids

    def _entity_kind(self, entity_id: str) -> str | None:
        if entity_id in self.classes:
            return "class"
        if entity_id in self.instances:
            return "instance"
        if entity_id in self.systems:
            return "system"
        return None

    def _require_entity(self, entity_id: str) -> str:
        kind = self._entity_kind(entity_id)
        if kind is None:
            raise UnknownEntity(f"no entity {entity_id!r}")
        return kind

    def class_ancestors(self, class_id: str) -> list[str]:
        """Type-of ancestors in breadth-first order, excluding the class."""
        seen: list[str] = []
        queue = list(self.classes[class_id].parent_class_ids)
        while queue:
            current = queue.pop(0)
            if current in seen or current not in self.classes:
                continue
            seen.append(current)
            queue.extend(self.classes[current].parent_class_ids)
        return seen

    def effective_dimensions(self, class_id: str) -> dict[str, Dimension]:
        """Dimensions declared on the class or inherited down type-of edges.
        A subclass redeclaring a dimension unions its states with the
        inherited ones; nothing is ever removed."""
        if class_id not in self.classes:
            raise UnknownClass(f"no class {class_id!r}")
        merged: dict[str, Dimension] = {}
        chain = list(reversed(self.class_ancestors(class_id))) + [class_id]
        for cid in chain:
            for dim in self.classes[cid].dimensions:
                if dim.name not in merged:
                    merged[dim.name] = Dimension(name=dim.name,
                                                 states=list(dim.states),
                                                 context_note=dim.context_note)
                else:
                    base = merged[dim.name]
                    for state in dim.states:
                        if state not in base.states:
                            base.states.append(state)
                    if dim.context_note:
                        base.context_note = dim.context_note
        return merged

    def _dimensions_for(self, entity_id: str) -> dict[str, Dimension]:
        kind = self._require_entity(entity_id)
        if kind == "class":
            return self.effective_dimensions(entity_id)
        if kind == "instance":
            return self.effective_dimensions(self.instances[entity_id].class_id)
        return {}

    def _check_state(self, entity_id: str, dimension: str, state: str | None,
                     context: str) -> None:
        dims = self._dimensions_for(entity_id)
        if dimension not in dims:
            raise InvalidState(
                f"{context}: dimension {dimension!r} not declared for {entity_id!r}")
        if state is not None and state not in dims[dimension].states:
            raise InvalidState(
                f"{context}: state {state!r} not declared on "
                f"{entity_id!r}.{dimension!r}")

    def _resolve_article_span(self, span: Span, context: str) -> None:
        if self.article is None:
            return
        try:
            resolve_span(self.article, span)
        except (UnknownBlock, OutOfRange) as exc:
            raise UnknownSpan(f"{context}: {exc}") from exc

    # -- command dispatch --------------------------------------------------

    def apply(self, command: dict):
        """Validate and execute one mutation command; append it (with any
        assigned ids filled in) to the log. Raises without mutating when
        validation fails."""
        op = command.get("op")
        handler = getattr(self, f"_op_{op}", None) if isinstance(op, str) else None
        if handler is None:
            raise UnknownCommand(f"no such operation {op!r}")
        normalized = {k: v for k, v in command.items()}
        result = handler(normalized)
        self.log.append(normalized)
        return result

    @classmethod
    def replay(cls, commands: list[dict], article: Article | None = None,
               article_id: str | None = None) -> "KnowledgeBase":
        kb = cls(article=article, article_id=article_id)
        for command in commands:
            kb.apply(dict(command))
        return kb

    # -- classes and entities ----------------------------------------------

    def add_class(self, name: str, parents=(), parts=(), dimensions=(),
                  properties=(), collection_of: str | None = None,
                  modeled_as: str = "entity", situational: bool = False,
                  external_code: str | None = None,
                  class_id: str | None = None) -> EntityClass:
        cmd = {"op": "add_class", "name": name, "parents": list(parents),
               "parts": list(parts),
               "dimensions": [d.to_dict() if isinstance(d, Dimension) else dict(d)
                              for d in dimensions],
               "properties": [p.to_dict() if isinstance(p, PropertyValue) else dict(p)
                              for p in properties],
               "collection_of": collection_of, "modeled_as": modeled_as,
               "situational": situational, "external_code": external_code}
        if class_id:
            cmd["id"] = class_id
        return self.apply(cmd)

    def _class_ref(self, ref: str) -> str:
        """A relative reference names a class by id, or by name via its slug."""
        return ref if ref in self.classes else _slug(ref)

    def _require_fresh_entity_id(self, entity_id: str, table_kind: str) -> None:
        kind = self._entity_kind(entity_id)
        if kind is not None and kind != table_kind:
            raise DuplicateId(f"{entity_id!r} already names a {kind}")

    def _op_add_class(self, cmd: dict) -> EntityClass:
        name = cmd["name"]
        cid = cmd.get("id") or _slug(name)
        cmd["id"] = cid
        self._require_fresh_entity_id(cid, "class")
        raw_refs = {}
        parents = []
        for ref in cmd.get("parents", []):
            rid = self._class_ref(ref)
            raw_refs.setdefault(rid, ref)
            parents.append(rid)
        parts = []
        for ref in cmd.get("parts", []):
            rid = self._class_ref(ref)
            raw_refs.setdefault(rid, ref)
            parts.append(rid)
        dimensions = [Dimension.from_dict(d) for d in cmd.get("dimensions", [])]
        properties = [PropertyValue.from_dict(p) for p in cmd.get("properties", [])]
        collection_of = cmd.get("collection_of")
        if collection_of:
            collection_of = self._class_ref(collection_of)
            raw_refs.setdefault(collection_of, cmd["collection_of"])

        for dim in dimensions:
            if not dim.states:
                raise InvalidState(f"dimension {dim.name!r} declares no states")
            if len(set(dim.states)) != len(dim.states):
                raise InvalidState(f"dimension {dim.name!r} repeats a state label")
        prop_names = [p.name for p in properties]
        if len(set(prop_names)) != len(prop_names):
            raise InvalidState(f"class {name!r} repeats a property name")

        existing = self.classes.get(cid)
        # placeholders let a class name its relatives before they are defined
        placeholders = [pid for pid in [*parents, *parts,
                                        *( [collection_of] if collection_of else [])]
                        if pid not in self.classes and pid != cid]

        type_graph = {k: list(v.parent_class_ids) for k, v in self.classes.items()}
        part_graph = {k: list(v.part_of_ids) for k, v in self.classes.items()}
        for pid in placeholders:
            type_graph.setdefault(pid, [])
            part_graph.setdefault(pid, [])
        merged_parents = list(existing.parent_class_ids) if existing else []
        merged_parts = list(existing.part_of_ids) if existing else []
        for pid in parents:
            if pid not in merged_parents:
                merged_parents.append(pid)
        for pid in parts:
            if pid not in merged_parts:
                merged_parts.append(pid)
        type_graph[cid] = merged_parents
        part_graph[cid] = merged_parts
        if _has_cycle(type_graph):
            raise CycleError(f"type-of cycle through {cid!r}")
        if _has_cycle(part_graph):
            raise CycleError(f"part-of cycle through {cid!r}")
        for pid in placeholders:
            self._require_fresh_entity_id(pid, "class")

        seen_placeholder = set()
        for pid in placeholders:
            if pid in seen_placeholder:
                continue
            seen_placeholder.add(pid)
            self.classes[pid] = EntityClass(id=pid, name=raw_refs.get(pid, pid))
            self._placeholders.add(pid)
        if existing is not None and cid not in self._placeholders:
            log.warning("DuplicateName: class %r already defined; merging", name)
        self._placeholders.discard(cid)
        if existing is None:
            record = EntityClass(
                id=cid, name=name, parent_class_ids=merged_parents,
                part_of_ids=merged_parts, collection_of=collection_of,
                properties=properties, dimensions=dimensions,
                modeled_as=cmd.get("modeled_as", "entity"),
                situational=cmd.get("situational", False),
                external_code=cmd.get("external_code"))
            self.classes[cid] = record
        else:
            existing.parent_class_ids = merged_parents
            existing.part_of_ids = merged_parts
            existing.name = name
            if collection_of:
                existing.collection_of = collection_of
            names = {p.name for p in existing.properties}
            existing.properties.extend(p for p in properties if p.name not in names)
            have = {d.name: d for d in existing.dimensions}
            for dim in dimensions:
                if dim.name in have:
                    for state in dim.states:
                        if state not in have[dim.name].states:
                            have[dim.name].states.append(state)
                else:
                    existing.dimensions.append(dim)
            record = existing
        return record

    def instantiate(self, class_id: str, state_assignments=None,
                    property_overrides=(), confidence=None,
                    instance_id: str | None = None) -> EntityInstance:
        cmd = {"op": "instantiate", "class_id": class_id,
               "state_assignments": dict(state_assignments or {}),
               "property_overrides": [p.to_dict() if isinstance(p, PropertyValue)
                                      else dict(p) for p in property_overrides],
               "confidence": dict(confidence or {})}
        if instance_id:
            cmd["id"] = instance_id
        return self.apply(cmd)

    def _op_instantiate(self, cmd: dict) -> EntityInstance:
        class_id = cmd["class_id"]
        if class_id not in self.classes:
            raise UnknownClass(f"no class {class_id!r}")
        assignments = dict(cmd.get("state_assignments", {}))
        dims = self.effective_dimensions(class_id)
        for dimension, state in assignments.items():
            if dimension not in dims:
                raise UnknownDimension(
                    f"class {class_id!r} declares no dimension {dimension!r}")
            if state not in dims[dimension].states:
                raise UnknownState(
                    f"{state!r} not a state of {class_id!r}.{dimension!r}")
        confidence = dict(cmd.get("confidence", {}))
        for dimension, level in confidence.items():
            if dimension not in dims:
                raise UnknownDimension(
                    f"confidence names undeclared dimension {dimension!r}")
            if level not in CONFIDENCE_LEVELS:
                raise InvalidState(f"no confidence level {level!r}")
        for dimension in assignments:
            confidence.setdefault(dimension, "asserted")
        iid = cmd.get("id") or self._next_id("i", self.instances)
        if iid in self.instances:
            raise DuplicateId(f"instance {iid!r} already exists")
        self._require_fresh_entity_id(iid, "instance")
        cmd["id"] = iid
        cmd["confidence"] = confidence
        record = EntityInstance(
            id=iid, class_id=class_id,
            property_overrides=[PropertyValue.from_dict(p)
                                for p in cmd.get("property_overrides", [])],
            state_assignments=assignments, confidence=confidence)
        self.instances[iid] = record
        return record

    def add_system(self, name: str, components=(), underspecified: bool = False,
                   notes: str = "", system_id: str | None = None) -> SystemEntity:
        cmd = {"op": "add_system", "name": name, "components": list(components),
               "underspecified": underspecified, "notes": notes}
        if system_id:
            cmd["id"] = system_id
        return self.apply(cmd)

    def _op_add_system(self, cmd: dict) -> SystemEntity:
        components = list(cmd.get("components", []))
        for entity_id in components:
            self._require_entity(entity_id)
        sid = cmd.get("id") or self._next_id("sys", self.systems)
        if sid in self.systems:
            raise DuplicateId(f"system {sid!r} already exists")
        self._require_fresh_entity_id(sid, "system")
        cmd["id"] = sid
        record = SystemEntity(id=sid, name=cmd["name"],
                              component_entity_ids=components,
                              underspecified=cmd.get("underspecified", False),
                              notes=cmd.get("notes", ""))
        self.systems[sid] = record
        return record

    # -- flows -------------------------------------------------------------

    def define_flow(self, kind: str, name: str, participants=(), triggers=(),
                    effects=(), abstraction_level: int = 1,
                    is_measurement: bool = False, refines: str | None = None,
                    flow_id: str | None = None) -> Flow:
        cmd = {"op": "define_flow", "kind": kind, "name": name,
               "abstraction_level": abstraction_level,
               "participants": [p.to_dict() if isinstance(p, Participant)
                                else dict(p) for p in participants],
               "triggers": [t.to_dict() if isinstance(t, TriggerCondition)
                            else dict(t) for t in triggers],
               "effects": [e.to_dict() if isinstance(e, (StateChange, EntityCreation))
                           else dict(e) for e in effects],
               "is_measurement": is_measurement, "refines": refines}
        if flow_id:
            cmd["id"] = flow_id
        return self.apply(cmd)

    def _op_define_flow(self, cmd: dict) -> Flow:
        kind = cmd["kind"]
        if kind not in (FLOW_METHOD, FLOW_CONCEPTUAL):
            raise UnknownCommand(f"no flow kind {kind!r}")
        participants = [Participant.from_dict(p) for p in cmd.get("participants", [])]
        triggers = [TriggerCondition.from_dict(t) for t in cmd.get("triggers", [])]
        effects = [effect_from_dict(e) for e in cmd.get("effects", [])]
        if cmd.get("is_measurement") and kind != FLOW_METHOD:
            raise NotMethodFlow("only method flows can be measurements")

        def forbid_instance(entity_id: str, where: str):
            if kind == FLOW_CONCEPTUAL and self._entity_kind(entity_id) == "instance":
                raise InstanceInConceptualModel(
                    f"conceptual models are class-only; {where} names "
                    f"instance {entity_id!r}")

        for participant in participants:
            if participant.role not in ROLES:
                raise UnknownRole(f"no participant role {participant.role!r}")
            if self._entity_kind(participant.entity_id) is None:
                raise UnresolvedParticipant(
                    f"participant {participant.entity_id!r} does not resolve")
            forbid_instance(participant.entity_id, "participant")
        for trigger in triggers:
            if trigger.kind not in (TRIGGER_STATE, TRIGGER_PROXIMITY,
                                    TRIGGER_RESEARCHER):
                raise UnknownCommand(f"no trigger kind {trigger.kind!r}")
            if trigger.kind == TRIGGER_RESEARCHER:
                continue
            if trigger.subject is None or self._entity_kind(trigger.subject) is None:
                raise UnresolvedParticipant(
                    f"trigger subject {trigger.subject!r} does not resolve")
            forbid_instance(trigger.subject, "trigger")
            if trigger.kind == TRIGGER_STATE:
                if trigger.dimension is None or trigger.state is None:
                    raise InvalidState("state_predicate requires dimension and state")
                self._check_state(trigger.subject, trigger.dimension,
                                  trigger.state, "trigger")
        for effect in effects:
            if isinstance(effect, EntityCreation):
                if effect.class_id not in self.classes:
                    raise UnknownClass(
                        f"entity_creation names no class {effect.class_id!r}")
                continue
            if self._entity_kind(effect.entity_id) is None:
                raise UnresolvedParticipant(
                    f"effect entity {effect.entity_id!r} does not resolve")
            forbid_instance(effect.entity_id, "effect")
            self._check_state(effect.entity_id, effect.dimension,
                              effect.to_state, "effect")
            if effect.from_state is not None:
                self._check_state(effect.entity_id, effect.dimension,
                                  effect.from_state, "effect")
        refines = cmd.get("refines")
        fid = cmd.get("id") or self._next_id("f", self.flows)
        if refines is not None:
            if refines not in self.flows:
                raise UnknownFlow(f"refines names no flow {refines!r}")
            graph = {k: [v.refines] if v.refines else [] for k, v in self.flows.items()}
            graph[fid] = [refines]
            if _has_cycle(graph):
                raise CycleError(f"refinement cycle through {fid!r}")
        cmd["id"] = fid
        record = Flow(id=fid, kind=kind, name=cmd["name"],
                      abstraction_level=cmd.get("abstraction_level", 1),
                      participants=participants, triggers=triggers, effects=effects,
                      is_measurement=cmd.get("is_measurement", False),
                      refines=refines)
        self.flows[fid] = record
        return record

    def instantiate_flow(self, flow_id: str, at: str | None = None,
                         instance_id: str | None = None) -> FlowInstance:
        cmd = {"op": "instantiate_flow", "flow_id": flow_id, "at": at}
        if instance_id:
            cmd["id"] = instance_id
        return self.apply(cmd)

    def _op_instantiate_flow(self, cmd: dict) -> FlowInstance:
        flow = self.flows.get(cmd["flow_id"])
        if flow is None:
            raise UnknownFlow(f"no flow {cmd['flow_id']!r}")
        if flow.kind == FLOW_CONCEPTUAL:
            raise ConceptualModelNotInstantiable(
                f"{flow.id!r} is a conceptual model; it has no instances")
        at = cmd.get("at")
        if at is not None and flow.is_measurement and flow.dataset_id is None:
            raise MeasurementRequiresDataset(
                f"measurement flow {flow.id!r} executed without a dataset")
        fid = cmd.get("id") or self._next_id("fi", self.flow_instances)
        cmd["id"] = fid
        record = FlowInstance(id=fid, flow_id=flow.id, executed_at=at,
                              dataset_id=flow.dataset_id if at is not None else None)
        self.flow_instances[fid] = record
        return record

    def record_execution(self, instance_id: str, at: str) -> FlowInstance:
        return self.apply({"op": "record_execution", "instance_id": instance_id,
                           "at": at})

    def _op_record_execution(self, cmd: dict) -> FlowInstance:
        instance = self.flow_instances.get(cmd["instance_id"])
        if instance is None:
            raise UnknownFlow(f"no flow instance {cmd['instance_id']!r}")
        flow = self.flows[instance.flow_id]
        if flow.is_measurement and flow.dataset_id is None:
            raise MeasurementRequiresDataset(
                f"measurement flow {flow.id!r} executed without a dataset")
        instance.executed_at = cmd["at"]
        instance.dataset_id = flow.dataset_id
        return instance

    def build_mesh(self, flow_ids, edges, mesh_id: str | None = None) -> Mesh:
        cmd = {"op": "build_mesh", "flow_ids": list(flow_ids),
               "edges": [e.to_dict() if isinstance(e, MeshEdge) else dict(e)
                         for e in edges]}
        if mesh_id:
            cmd["id"] = mesh_id
        return self.apply(cmd)

    def _op_build_mesh(self, cmd: dict) -> Mesh:
        flow_ids = list(cmd["flow_ids"])
        for fid in flow_ids:
            if fid not in self.flows:
                raise UnknownFlow(f"no flow {fid!r}")
        edges = [MeshEdge.from_dict(e) for e in cmd.get("edges", [])]
        declared = set(flow_ids)
        for edge in edges:
            if edge.producer not in declared or edge.consumer not in declared:
                raise UnknownFlow(
                    f"edge {edge.producer!r}->{edge.consumer!r} leaves the mesh")
        # greedy pass: an edge that would close a cycle is a knot, kept but flagged
        accepted: dict[str, list[str]] = {fid: [] for fid in flow_ids}
        knots: list[int] = []

        def reaches(src: str, dst: str) -> bool:
            stack = [src]
            seen = set()
            while stack:
                node = stack.pop()
                if node == dst:
                    return True
                if node in seen:
                    continue
                seen.add(node)
                stack.extend(accepted[node])
            return False

        for i, edge in enumerate(edges):
            if edge.producer == edge.consumer or reaches(edge.consumer, edge.producer):
                knots.append(i)
            else:
                accepted[edge.producer].append(edge.consumer)
        mid = cmd.get("id") or self._next_id("m", self.meshes)
        cmd["id"] = mid
        record = Mesh(id=mid, flow_ids=flow_ids, edges=edges, knot_edges=knots)
        self.meshes[mid] = record
        return record

    # -- questions, hypotheses, data ----------------------------------------

    def define_rq(self, kind: str, model_ids, target: dict | None = None,
                  parent: str | None = None, rq_id: str | None = None) -> ResearchQuestion:
        cmd = {"op": "define_rq", "kind": kind, "model_ids": list(model_ids),
               "target": dict(target) if target else None, "parent": parent}
        if rq_id:
            cmd["id"] = rq_id
        return self.apply(cmd)

    def _op_define_rq(self, cmd: dict) -> ResearchQuestion:
        kind = cmd["kind"]
        if kind not in (RQ_ASPECT, RQ_COMPARISON):
            raise UnknownCommand(f"no research question kind {kind!r}")
        model_ids = list(cmd["model_ids"])
        if not model_ids:
            raise UnknownModel("a research question wraps at least one model")
        for mid in model_ids:
            flow = self.flows.get(mid)
            if flow is None:
                raise UnknownModel(f"no conceptual model {mid!r}")
            if flow.kind != FLOW_CONCEPTUAL:
                raise MethodFlowNotQuestionable(
                    f"{mid!r} is a method flow; questions wrap conceptual models")
        parent = cmd.get("parent")
        if parent is not None and parent not in self.research_questions:
            raise UnknownRQ(f"no parent research question {parent!r}")
        target = cmd.get("target")
        if kind == RQ_ASPECT:
            if not target or "entity_id" not in target or "dimension" not in target:
                raise InvalidState("aspect_value questions name (entity, dimension)")
            self._require_entity(target["entity_id"])
            self._check_state(target["entity_id"], target["dimension"], None, "rq target")
        rid = cmd.get("id") or self._next_id("rq", self.research_questions)
        cmd["id"] = rid
        record = ResearchQuestion(id=rid, kind=kind, model_ids=model_ids,
                                  parent_rq=parent,
                                  target=dict(target) if target else None)
        self.research_questions[rid] = record
        return record

    def add_hypothesis(self, model_id: str, explains: dict,
                       status: str = "proposed", preferred: bool = False,
                       hypothesis_id: str | None = None) -> Hypothesis:
        cmd = {"op": "add_hypothesis", "model_id": model_id,
               "explains": explains.to_dict() if isinstance(explains, StateChange)
               else dict(explains),
               "status": status, "preferred": preferred}
        if hypothesis_id:
            cmd["id"] = hypothesis_id
        return self.apply(cmd)

    def _op_add_hypothesis(self, cmd: dict) -> Hypothesis:
        model_id = cmd["model_id"]
        flow = self.flows.get(model_id)
        if flow is None:
            raise UnknownModel(f"no conceptual model {model_id!r}")
        if flow.kind != FLOW_CONCEPTUAL:
            raise NotConceptualModel(f"{model_id!r} is not a conceptual model")
        if cmd.get("status", "proposed") not in HYPOTHESIS_STATUSES:
            raise InvalidState(f"no hypothesis status {cmd['status']!r}")
        explains = effect_from_dict(cmd["explains"])
        if not isinstance(explains, StateChange):
            raise InvalidState("a hypothesis explains a state change")
        self._require_entity(explains.entity_id)
        self._check_state(explains.entity_id, explains.dimension,
                          explains.to_state, "hypothesis")
        hid = cmd.get("id") or self._next_id("h", self.hypotheses)
        cmd["id"] = hid
        record = Hypothesis(id=hid, model_id=model_id, explains=explains,
                            status=cmd.get("status", "proposed"),
                            preferred=cmd.get("preferred", False))
        self.hypotheses[hid] = record
        return record

    def add_instrument(self, name: str, description: str = "",
                       instrument_id: str | None = None) -> Instrument:
        cmd = {"op": "add_instrument", "name": name, "description": description}
        if instrument_id:
            cmd["id"] = instrument_id
        return self.apply(cmd)

    def _op_add_instrument(self, cmd: dict) -> Instrument:
        iid = cmd.get("id") or self._next_id("inst", self.instruments)
        cmd["id"] = iid
        record = Instrument(id=iid, name=cmd["name"],
                            description=cmd.get("description", ""))
        self.instruments[iid] = record
        return record

    def attach_dataset(self, flow_id: str, instruments=(), datapoints=(),
                       reliability_note: str = "", validity_note: str = "",
                       dataset_id: str | None = None) -> DataSet:
        cmd = {"op": "attach_dataset", "flow_id": flow_id,
               "instruments": list(instruments),
               "datapoints": [dict(p) for p in datapoints],
               "reliability_note": reliability_note,
               "validity_note": validity_note}
        if dataset_id:
            cmd["id"] = dataset_id
        return self.apply(cmd)

    def _op_attach_dataset(self, cmd: dict) -> DataSet:
        flow = self.flows.get(cmd["flow_id"])
        if flow is None:
            raise UnknownFlow(f"no flow {cmd['flow_id']!r}")
        if flow.kind != FLOW_METHOD or not flow.is_measurement:
            raise NotMeasurementFlow(
                f"{flow.id!r} is not a measurement method flow")
        instrument_ids = list(cmd.get("instruments", []))
        for iid in instrument_ids:
            if iid not in self.instruments:
                raise UnknownInstrument(f"no instrument {iid!r}")
        did = cmd.get("id") or self._next_id("ds", self.datasets)
        points = []
        for i, spec in enumerate(cmd.get("datapoints", [])):
            recorded_by = spec.get("recorded_by")
            if recorded_by not in instrument_ids:
                raise UnknownInstrument(
                    f"datapoint recorded by {recorded_by!r}, not an attached instrument")
            points.append(DataPoint(id=spec.get("id") or f"{did}/dp{i}",
                                    values=dict(spec.get("values", {})),
                                    recorded_by=recorded_by))
        cmd["id"] = did
        record = DataSet(id=did, instrument_ids=instrument_ids, datapoints=points,
                         reliability_note=cmd.get("reliability_note", ""),
                         validity_note=cmd.get("validity_note", ""),
                         source_flow_id=flow.id)
        self.datasets[did] = record
        flow.dataset_id = did
        return record

    def add_comment(self, target: dict, discourse_type: str, text: str,
                    comment_id: str | None = None) -> Comment:
        cmd = {"op": "add_comment", "target": dict(target),
               "discourse_type": discourse_type, "text": text}
        if comment_id:
            cmd["id"] = comment_id
        return self.apply(cmd)

    def element_ids(self) -> set[str]:
        ids: set[str] = set()
        for table in (self.classes, self.instances, self.systems, self.flows,
                      self.flow_instances, self.meshes, self.research_questions,
                      self.hypotheses, self.datasets, self.instruments,
                      self.comments, self.rq_blocks):
            ids.update(table)
        ids.update(self._all_block_ids())
        return ids

    def _op_add_comment(self, cmd: dict) -> Comment:
        target = dict(cmd["target"])
        if target.get("kind") == "span":
            self._resolve_article_span(Span.from_dict(target), "comment target")
        elif target.get("kind") == "element":
            if target.get("element_id") not in self.element_ids():
                raise UnknownTarget(
                    f"comment targets no element {target.get('element_id')!r}")
        else:
            raise UnknownTarget(f"no comment target kind {target.get('kind')!r}")
        if cmd["discourse_type"] not in DISCOURSE_TYPES:
            raise InvalidState(f"no discourse type {cmd['discourse_type']!r}")
        mid = cmd.get("id") or self._next_id("cm", self.comments)
        cmd["id"] = mid
        record = Comment(id=mid, target=target,
                         discourse_type=cmd["discourse_type"], text=cmd["text"])
        self.comments[mid] = record
        return record

    # -- discourse blocks ----------------------------------------------------

    def define_activity_block(self, goal_span, goal_label: str, flows=(),
                              result_spans=(), subtype: str = "standard",
                              block_id: str | None = None) -> ActivityBlock:
        cmd = {"op": "define_activity_block",
               "goal_span": goal_span.to_dict() if isinstance(goal_span, Span)
               else dict(goal_span),
               "goal_label": goal_label, "flows": list(flows),
               "result_spans": [s.to_dict() if isinstance(s, Span) else dict(s)
                                for s in result_spans],
               "subtype": subtype}
        if block_id:
            cmd["id"] = block_id
        return self.apply(cmd)

    def _validate_activity_block(self, cmd: dict) -> ActivityBlock:
        goal_span = Span.from_dict(cmd["goal_span"])
        result_spans = [Span.from_dict(s) for s in cmd.get("result_spans", [])]
        flows = list(cmd.get("flows", []))
        subtype = cmd.get("subtype", "standard")
        if subtype not in BLOCK_SUBTYPES:
            raise InvalidState(f"no block subtype {subtype!r}")
        if not flows and not result_spans:
            raise EmptyBlock("a block needs method flows or result spans")
        self._resolve_article_span(goal_span, "goal span")
        for span in result_spans:
            self._resolve_article_span(span, "result span")
        for fid in flows:
            flow = self.flows.get(fid)
            if flow is None:
                raise UnknownFlow(f"no flow {fid!r}")
            if flow.kind != FLOW_METHOD:
                raise NotMethodFlow(
                    f"{fid!r} is a conceptual model, not a method flow")
        bid = cmd.get("id") or self._next_id("ab", self._all_block_ids())
        cmd["id"] = bid
        return ActivityBlock(id=bid, goal_label=cmd["goal_label"],
                             goal_span=goal_span, method_flow_ids=flows,
                             result_spans=result_spans, subtype=subtype)

    def _op_define_activity_block(self, cmd: dict) -> ActivityBlock:
        record = self._validate_activity_block(cmd)
        self.activity_blocks[record.id] = record
        return record

    def define_rq_block(self, activity_block, rq_id: str,
                        answer_span=None, answer_summary: str = "",
                        literature_refs=(), block_id: str | None = None) -> RQBlock:
        cmd = {"op": "define_rq_block", "rq_id": rq_id,
               "answer_span": answer_span.to_dict()
               if isinstance(answer_span, Span)
               else (dict(answer_span) if answer_span else None),
               "answer_summary": answer_summary,
               "literature_refs": list(literature_refs)}
        if isinstance(activity_block, str):
            cmd["activity_block_id"] = activity_block
        elif isinstance(activity_block, ActivityBlock):
            cmd["activity_block"] = activity_block.to_dict()
        else:
            cmd["activity_block"] = dict(activity_block)
        if block_id:
            cmd["id"] = block_id
        return self.apply(cmd)

    def _op_define_rq_block(self, cmd: dict) -> RQBlock:
        rq_id = cmd["rq_id"]
        if rq_id not in self.research_questions:
            raise UnknownRQ(f"no research question {rq_id!r}")
        answer_span = (Span.from_dict(cmd["answer_span"])
                       if cmd.get("answer_span") else None)
        if answer_span is not None:
            self._resolve_article_span(answer_span, "answer span")
        refs = list(cmd.get("literature_refs", []))
        if self.article is not None:
            known = reference_map(self.article)
            for rid in refs:
                if rid not in known:
                    raise UnknownReference(f"no reference {rid!r} in the article")
        ab_id = cmd.get("activity_block_id")
        if ab_id is not None:
            embedded = self.activity_blocks.get(ab_id)
            if embedded is None:
                raise UnknownBlock(f"no activity block {ab_id!r}")
        else:
            ab_cmd = {"goal_span": cmd["activity_block"]["goal_span"],
                      "goal_label": cmd["activity_block"]["goal_label"],
                      "flows": cmd["activity_block"].get("method_flow_ids",
                                                         cmd["activity_block"].get("flows", [])),
                      "result_spans": cmd["activity_block"].get("result_spans", []),
                      "subtype": cmd["activity_block"].get("subtype", "standard")}
            if cmd["activity_block"].get("id"):
                ab_cmd["id"] = cmd["activity_block"]["id"]
            embedded = self._validate_activity_block(ab_cmd)
            cmd["activity_block"] = embedded.to_dict()
        bid = cmd.get("id") or self._next_id("rqb", self.rq_blocks)
        cmd["id"] = bid
        record = RQBlock(id=bid, activity_block=embedded, rq_id=rq_id,
                         answer_span=answer_span,
                         answer_summary=cmd.get("answer_summary", ""),
                         literature_refs=refs)
        if ab_id is not None:
            del self.activity_blocks[ab_id]
        self.rq_blocks[bid] = record
        rq = self.research_questions[rq_id]
        rq.answer = {"text": record.answer_summary, "rq_block_id": bid}
        return record

    def list_blocks(self) -> list:
        """Standalone activity blocks and RQ blocks, ordered by goal span
        document position."""
        blocks = list(self.activity_blocks.values()) + list(self.rq_blocks.values())
        if self.article is not None:
            positions = block_positions(self.article)
        else:
            positions = {}

        def key(block):
            span = block.goal_span
            ordinal = positions.get(span.block_id)
            return (0 if ordinal is not None else 1,
                    ordinal if ordinal is not None else span.block_id,
                    span.start, block.id)

        return sorted(blocks, key=key)

    # -- queries -------------------------------------------------------------

    def query_determinants(self, entity_id: str, dimension: str) -> list[tuple]:
        """(flow_id, cause participant entity id) for every flow whose
        effects change the given entity dimension; flows with no cause
        participant contribute (flow_id, None)."""
        self._require_entity(entity_id)
        out: list[tuple] = []
        for fid in sorted(self.flows, key=natural_key):
            flow = self.flows[fid]
            hits = [e for e in flow.effects
                    if isinstance(e, StateChange)
                    and e.entity_id == entity_id and e.dimension == dimension]
            if not hits:
                continue
            causes = [p.entity_id for p in flow.participants if p.role == "cause"]
            if causes:
                out.extend((fid, cause) for cause in causes)
            else:
                out.append((fid, None))
        return out

    def closure(self, relation: str, class_id: str) -> set[str]:
        """Transitive closure over type_of or part_of, excluding the class."""
        if relation not in ("type_of", "part_of"):
            raise UnknownCommand(f"no relation {relation!r}")
        if class_id not in self.classes:
            raise UnknownClass(f"no class {class_id!r}")
        attr = "parent_class_ids" if relation == "type_of" else "part_of_ids"
        seen: set[str] = set()
        queue = list(getattr(self.classes[class_id], attr))
        while queue:
            current = queue.pop(0)
            if current in seen or current not in self.classes:
                continue
            seen.add(current)
            queue.extend(getattr(self.classes[current], attr))
        return seen

    def type_of_graph(self) -> dict[str, list[str]]:
        return {cid: list(c.parent_class_ids) for cid, c in self.classes.items()}

    def part_of_graph(self) -> dict[str, list[str]]:
        return {cid: list(c.part_of_ids) for cid, c in self.classes.items()}

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "article_id": self.article_id,
            "classes": [c.to_dict() for c in self.classes.values()],
            "instances": [i.to_dict() for i in self.instances.values()],
            "systems": [s.to_dict() for s in self.systems.values()],
            "flows": [f.to_dict() for f in self.flows.values()],
            "flow_instances": [f.to_dict() for f in self.flow_instances.values()],
            "meshes": [m.to_dict() for m in self.meshes.values()],
            "research_questions": [r.to_dict()
                                   for r in self.research_questions.values()],
            "hypotheses": [h.to_dict() for h in self.hypotheses.values()],
            "datasets": [d.to_dict() for d in self.datasets.values()],
            "instruments": [i.to_dict() for i in self.instruments.values()],
            "comments": [c.to_dict() for c in self.comments.values()],
            "activity_blocks": [b.to_dict() for b in self.activity_blocks.values()],
            "rq_blocks": [b.to_dict() for b in self.rq_blocks.values()],
        }

    @classmethod
    def from_dict(cls, d: dict, article: Article | None = None) -> "KnowledgeBase":
        kb = cls(article=article, article_id=d.get("article_id"))
        for c in d.get("classes", []):
            kb.classes[c["id"]] = EntityClass.from_dict(c)
        for i in d.get("instances", []):
            kb.instances[i["id"]] = EntityInstance.from_dict(i)
        for s in d.get("systems", []):
            kb.systems[s["id"]] = SystemEntity.from_dict(s)
        for f in d.get("flows", []):
            kb.flows[f["id"]] = Flow.from_dict(f)
        for f in d.get("flow_instances", []):
            kb.flow_instances[f["id"]] = FlowInstance.from_dict(f)
        for m in d.get("meshes", []):
            kb.meshes[m["id"]] = Mesh.from_dict(m)
        for r in d.get("research_questions", []):
            kb.research_questions[r["id"]] = ResearchQuestion.from_dict(r)
        for h in d.get("hypotheses", []):
            kb.hypotheses[h["id"]] = Hypothesis.from_dict(h)
        for ds in d.get("datasets", []):
            kb.datasets[ds["id"]] = DataSet.from_dict(ds)
        for i in d.get("instruments", []):
            kb.instruments[i["id"]] = Instrument.from_dict(i)
        for c in d.get("comments", []):
            kb.comments[c["id"]] = Comment.from_dict(c)
        for b in d.get("activity_blocks", []):
            kb.activity_blocks[b["id"]] = ActivityBlock.from_dict(b)
        for b in d.get("rq_blocks", []):
            kb.rq_blocks[b["id"]] = RQBlock.from_dict(b)
        return kb
