from enum import Enum
from typing import List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.fields import PredictExchange, Subdomain, WaveState, WindowPlan


class Phase(str, Enum):
    PREDICT = "predict"
    SELECT = "select"
    DECIDE = "decide"
    UPDATE = "update"


class MessageKind(str, Enum):
    PREDICT_EXCHANGE = "predict_exchange"
    SPAN_VOTE = "span_vote"
    GLOBAL_SPAN_DECISION = "global_span_decision"
    TERMINATION_NOTICE = "termination_notice"


class SpanVote(BaseModel):
    model_config = ConfigDict(frozen=True)

    span: int = Field(..., ge=0, description="Smallest capped span over the sender's interfaces")
    pair: Optional[Tuple[int, int]] = Field(None, description="Pair that produced the span, None when no interface limited it")


class GlobalSpanDecision(BaseModel):
    model_config = ConfigDict(frozen=True)

    span: int = Field(..., ge=1)
    pair: Optional[Tuple[int, int]] = None


class TerminationNotice(BaseModel):
    model_config = ConfigDict(frozen=True)

    final_step: int = Field(..., ge=0)


_PAYLOAD_KINDS = {
    MessageKind.PREDICT_EXCHANGE: PredictExchange,
    MessageKind.SPAN_VOTE: SpanVote,
    MessageKind.GLOBAL_SPAN_DECISION: GlobalSpanDecision,
    MessageKind.TERMINATION_NOTICE: TerminationNotice,
}


class Message(BaseModel):
    """
    Envelope for everything workers exchange.

    ``round`` is (window k, phase the message is consumed in); receivers reject
    envelopes from any other round.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    round: Tuple[int, Phase]
    kind: MessageKind
    sender: int
    receiver: int
    payload: Union[PredictExchange, SpanVote, GlobalSpanDecision, TerminationNotice]

    @model_validator(mode="after")
    def payload_matches_kind(self) -> "Message":
        if not isinstance(self.payload, _PAYLOAD_KINDS[self.kind]):
            raise ValueError(f"{self.kind.value} message carries {type(self.payload).__name__}")
        return self


class AcceptedWindow(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int
    span: int
    t_start: float


class WorkerState(BaseModel):
    """What one worker owns; never shared with other workers."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    subdomain: Subdomain
    wave: WaveState
    plan: WindowPlan
    accepted_history: List[AcceptedWindow] = Field(default_factory=list)
