"""Exception hierarchy shared by all engine modules."""


class NeuronError(Exception):
    """Base class for every error raised by this package."""


# --- datatree ---

class EmptyTree(NeuronError):
    pass


class ShapeMismatch(NeuronError):
    pass


class BranchNotFound(NeuronError):
    pass


# --- wire ---

class ParseError(NeuronError):
    pass


class UnknownKind(NeuronError):
    pass


class DatagramTooLarge(NeuronError):
    pass


class IoError(NeuronError):
    pass


# --- dsp ---

class BadWindowLength(NeuronError):
    pass


class BandOutOfRange(NeuronError):
    pass


# --- metrics ---

class UnknownChannel(NeuronError):
    pass


class UnknownBand(NeuronError):
    pass


class InsufficientBaseline(NeuronError):
    pass


class DegenerateBaseline(NeuronError):
    pass


# --- learn ---

class InsufficientData(NeuronError):
    pass


class DegenerateLabels(NeuronError):
    pass


class BadFeature(NeuronError):
    pass


class DegenerateVariance(NeuronError):
    pass


# --- engine / graph ---

class GraphError(NeuronError):
    """Graph validation failure; carries the offending node id."""

    def __init__(self, message: str, node_id: str | None = None):
        super().__init__(message)
        self.node_id = node_id


class UnknownNodeKind(GraphError):
    pass


class DanglingEdge(GraphError):
    pass


class CycleDetected(GraphError):
    pass


class PortTypeMismatch(GraphError):
    pass


class MissingParam(GraphError):
    pass


# --- sinks ---

class TooManyValues(NeuronError):
    pass


class DeliveryFailed(NeuronError):
    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class EmptySeries(NeuronError):
    pass


class BadPoint(NeuronError):
    pass


class InsufficientSamples(NeuronError):
    pass


# --- gateway ---

class IncompleteCalibration(NeuronError):
    pass


class Busy(NeuronError):
    pass
