import queue
import threading
from abc import ABC, abstractmethod
from collections import Counter
from typing import Dict, Iterable, List

from app.core.exceptions import ProtocolError
from app.models.messages import Message, MessageKind


class Transport(ABC):
    """Point-to-point delivery between workers. A networked backend replaces the in-process one."""

    @abstractmethod
    def send(self, message: Message) -> None:
        ...

    @abstractmethod
    def drain(self, receiver: int) -> List[Message]:
        """Everything delivered to ``receiver`` so far, in arrival order."""

    @abstractmethod
    def counts(self) -> Dict[str, int]:
        ...


class InProcessTransport(Transport):
    def __init__(self, worker_ids: Iterable[int]):
        self._inboxes: Dict[int, queue.Queue] = {i: queue.Queue() for i in worker_ids}
        self._counts: Counter = Counter()
        self._lock = threading.Lock()

    def send(self, message: Message) -> None:
        inbox = self._inboxes.get(message.receiver)
        if inbox is None:
            raise ProtocolError(f"no worker {message.receiver} to deliver {message.kind.value} to")
        with self._lock:
            self._counts[message.kind.value] += 1
        inbox.put(message)

    def drain(self, receiver: int) -> List[Message]:
        inbox = self._inboxes[receiver]
        messages = []
        while True:
            try:
                messages.append(inbox.get_nowait())
            except queue.Empty:
                return messages

    def counts(self) -> Dict[str, int]:
        with self._lock:
            return {kind.value: self._counts.get(kind.value, 0) for kind in MessageKind}

    def field_messages(self) -> int:
        with self._lock:
            return self._counts.get(MessageKind.PREDICT_EXCHANGE.value, 0)
