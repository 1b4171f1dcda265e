"""Exception types shared across the package."""


class PaperstructError(Exception):
    """Base class for all package-specific errors."""


# --- ingest ---------------------------------------------------------------

class MalformedXml(PaperstructError):
    pass


class UnrecognizedSchema(PaperstructError):
    pass


# --- article model --------------------------------------------------------

class UnknownBlock(PaperstructError):
    pass


class OutOfRange(PaperstructError):
    pass


class UnknownSection(PaperstructError):
    pass


class UnknownSpan(PaperstructError):
    pass


class UnknownReference(PaperstructError):
    pass


# --- references -----------------------------------------------------------

class IncompleteOrder(PaperstructError):
    pass


# --- knowledgebase --------------------------------------------------------

class CycleError(PaperstructError):
    pass


class DuplicateId(PaperstructError):
    pass


class UnknownClass(PaperstructError):
    pass


class UnknownEntity(PaperstructError):
    pass


class UnknownDimension(PaperstructError):
    pass


class UnknownState(PaperstructError):
    pass


class UnresolvedParticipant(PaperstructError):
    pass


class InvalidState(PaperstructError):
    pass


class UnknownFlow(PaperstructError):
    pass


class NotMethodFlow(PaperstructError):
    pass


class NotConceptualModel(PaperstructError):
    pass


class InstanceInConceptualModel(PaperstructError):
    pass


class ConceptualModelNotInstantiable(PaperstructError):
    pass


class MethodFlowNotQuestionable(PaperstructError):
    pass


class UnknownModel(PaperstructError):
    pass


class NotMeasurementFlow(PaperstructError):
    pass


class MeasurementRequiresDataset(PaperstructError):
    pass


class UnknownInstrument(PaperstructError):
    pass


class UnknownRQ(PaperstructError):
    pass


class EmptyBlock(PaperstructError):
    pass


class UnknownCommand(PaperstructError):
    pass


# --- anchors --------------------------------------------------------------

class UnknownTarget(PaperstructError):
    pass


class UnknownMark(PaperstructError):
    pass


class UnknownAnchor(PaperstructError):
    pass


class UnknownRole(PaperstructError):
    pass


# --- library --------------------------------------------------------------

class UnknownArticle(PaperstructError):
    pass


class CorruptStore(PaperstructError):
    pass
