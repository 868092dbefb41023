import time
from concurrent.futures import ThreadPoolExecutor, wait
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Tuple, TypeVar

import numpy as np

from app.core.config import settings
from app.core.exceptions import InternalError, ProtocolError
from app.core.logger import get_logger
from app.models.fields import FieldSlab, OverlapRegion, PredictExchange, Subdomain, WaveState, WindowPlan
from app.models.messages import (
    AcceptedWindow,
    GlobalSpanDecision,
    Message,
    MessageKind,
    Phase,
    SpanVote,
    TerminationNotice,
    WorkerState,
)
from app.models.schemas import BoundarySide, RswrConfig, RunMode, RunReport, SideKind, WindowSummary
from app.services import decomposition, oracle, rswr_engine, sources
from app.services.transport import InProcessTransport, Transport

logger = get_logger()

ROOT = 0
T = TypeVar("T")


def min_reduce(votes: Mapping[int, int], expected: Iterable[int]) -> int:
    """Global minimum of one vote per worker; a missing vote is a protocol error."""
    expected = sorted(expected)
    missing = [w for w in expected if w not in votes]
    if missing:
        raise ProtocolError(f"no span vote from workers {missing}")
    unexpected = sorted(set(votes) - set(expected))
    if unexpected:
        raise ProtocolError(f"span votes from unknown workers {unexpected}")
    return min(votes[w] for w in expected)


class Worker:
    def __init__(
        self,
        subdomain: Subdomain,
        wave: WaveState,
        plan: WindowPlan,
        regions: Mapping[Tuple[int, int], OverlapRegion],
        config: RswrConfig,
        transport: Transport,
        n_workers: int,
    ):
        self.state = WorkerState(subdomain=subdomain, wave=wave, plan=plan)
        self.regions = regions
        self.config = config
        self.transport = transport
        self.n_workers = n_workers
        self._drive = sources.drive_series(config.sources, config.dt)
        self._own: Dict[BoundarySide, PredictExchange] = {}
        self._received: Dict[BoundarySide, PredictExchange] = {}
        self._vote: Optional[SpanVote] = None
        self._decision: Optional[GlobalSpanDecision] = None
        self.last_pairs: Dict[Tuple[int, int], Tuple[int, int, float]] = {}
        self.terminated = False

    @property
    def id(self) -> int:
        return self.state.subdomain.id

    def _send(self, phase: Phase, kind: MessageKind, receiver: int, payload) -> None:
        self.transport.send(
            Message(round=(self.state.plan.k, phase), kind=kind, sender=self.id, receiver=receiver, payload=payload)
        )

    def _receive(self, phase: Phase) -> List[Message]:
        expected = (self.state.plan.k, phase)
        messages = self.transport.drain(self.id)
        for message in messages:
            if message.round != expected:
                raise ProtocolError(
                    f"worker {self.id} expected round {expected}, got {message.kind.value} for {message.round} from {message.sender}"
                )
        return messages

    def _physical(self, n_steps: int) -> Dict[BoundarySide, np.ndarray]:
        sub = self.state.subdomain
        start = self.state.plan.start_step
        return {
            side: self._drive(side, start, n_steps)
            for side in BoundarySide
            if sub.kind(side) is SideKind.PHYSICAL_DIRICHLET
        }

    def predict(self) -> None:
        plan, sub, wave = self.state.plan, self.state.subdomain, self.state.wave
        if wave.step_index != plan.start_step:
            raise InternalError(f"worker {self.id} is at step {wave.step_index}, window starts at {plan.start_step}")
        slab = rswr_engine.predict(
            wave, sub, plan.predict_steps, self._physical(plan.predict_steps), self.config.dt, self.config.a
        )
        self._own = {}
        for side in sub.interface_sides():
            neighbor = sub.neighbor(side)
            region = self.regions[(min(self.id, neighbor), max(self.id, neighbor))]
            exchange = rswr_engine.build_exchange(slab, sub, side, region)
            self._own[side] = exchange
            self._send(Phase.SELECT, MessageKind.PREDICT_EXCHANGE, neighbor, exchange)

    def select(self) -> SpanVote:
        sub = self.state.subdomain
        self._received = {}
        for message in self._receive(Phase.SELECT):
            if message.kind is not MessageKind.PREDICT_EXCHANGE:
                raise ProtocolError(f"worker {self.id} got {message.kind.value} while selecting")
            self._received[message.payload.side] = message.payload
        for side in sub.interface_sides():
            if side not in self._received:
                raise ProtocolError(f"worker {self.id} has no prediction from neighbor {sub.neighbor(side)}")

        self.last_pairs = rswr_engine.pairwise_spans(
            self._own, self._received, sub, self.regions, self.config.epsilon_rel, self.config.safety_steps
        )
        capped = {pair: spans[1] for pair, spans in self.last_pairs.items()}
        try:
            local = rswr_engine.global_span(capped, self.state.plan.predict_steps)
        except ProtocolError as e:
            raise ProtocolError(
                f"worker {self.id}: predictions of pair {e.pair} disagree from the first step",
                pair=e.pair,
                epsilon=self.last_pairs[e.pair][2],
                overlap_cells=self.regions[e.pair].width_cells,
            ) from e

        remaining = self.config.total_steps - self.state.plan.start_step
        limiting = min(capped, key=lambda p: (capped[p], p)) if capped else None
        if remaining < local:
            local, limiting = remaining, None
        self._vote = SpanVote(span=local, pair=limiting)
        if self.id != ROOT:
            self._send(Phase.DECIDE, MessageKind.SPAN_VOTE, ROOT, self._vote)
        return self._vote

    def decide(self) -> Optional[GlobalSpanDecision]:
        if self.id != ROOT:
            return None
        votes = {self.id: self._vote}
        for message in self._receive(Phase.DECIDE):
            if message.kind is not MessageKind.SPAN_VOTE or message.sender in votes:
                raise ProtocolError(f"root got unexpected {message.kind.value} from {message.sender}")
            votes[message.sender] = message.payload
        span = min_reduce({w: v.span for w, v in votes.items()}, range(self.n_workers))
        limiting = next(votes[w].pair for w in sorted(votes) if votes[w].span == span)
        self._decision = GlobalSpanDecision(span=span, pair=limiting)
        final = self.state.plan.start_step + span >= self.config.total_steps
        for worker in range(self.n_workers):
            if worker == ROOT:
                continue
            self._send(Phase.UPDATE, MessageKind.GLOBAL_SPAN_DECISION, worker, self._decision)
            if final:
                self._send(
                    Phase.UPDATE,
                    MessageKind.TERMINATION_NOTICE,
                    worker,
                    TerminationNotice(final_step=self.state.plan.start_step + span),
                )
        self.terminated = final
        return self._decision

    def update(self) -> FieldSlab:
        if self.id != ROOT:
            self._decision = None
            for message in self._receive(Phase.UPDATE):
                if message.kind is MessageKind.GLOBAL_SPAN_DECISION and self._decision is None:
                    self._decision = message.payload
                elif message.kind is MessageKind.TERMINATION_NOTICE:
                    self.terminated = True
                else:
                    raise ProtocolError(f"worker {self.id} got unexpected {message.kind.value} while updating")
            if self._decision is None:
                raise ProtocolError(f"worker {self.id} received no global span")

        span = self._decision.span
        plan, sub = self.state.plan, self.state.subdomain
        flux = {side: exchange.output_flux for side, exchange in self._received.items()}
        slab, terminal = rswr_engine.update_window(
            self.state.wave, sub, flux, span, self._physical(span), self.config.dt, self.config.a
        )
        self.state.accepted_history.append(AcceptedWindow(k=plan.k, span=span, t_start=plan.t_start))
        self.state.wave = terminal
        self.state.plan = rswr_engine.advance_plan(
            plan.model_copy(update={"selected_steps": self._vote.span, "global_steps": span}),
            span,
            self.config.beta,
            self.config.initial_predict_steps,
            self.config.dt,
        )
        if self.terminated and self.state.plan.start_step < self.config.total_steps:
            raise ProtocolError(f"worker {self.id} told to stop at step {self.state.plan.start_step}")
        return slab


class Runtime:
    """
    Drives the workers through rounds until the run's last step.

    A round is four supersteps (predict, select, decide, update). Each one
    finishes on every worker before the next begins.
    """

    def __init__(self, config: RswrConfig, mode: Optional[RunMode] = None, transport: Optional[Transport] = None):
        self.config = config
        self.mode = mode or config.mode
        self.grid = oracle.global_grid(config)
        self.subdomains, regions = decomposition.partition(self.grid, config.n_subdomains, config.overlap_cells)
        self.regions = {region.pair: region for region in regions}
        self.transport = transport or InProcessTransport(s.id for s in self.subdomains)
        start = oracle.rest_state(config)
        plan = rswr_engine.advance_plan(None, 0, config.beta, config.initial_predict_steps, config.dt)
        self.workers = [
            Worker(sub, start.restrict(sub.first_node, sub.last_node), plan, self.regions, config, self.transport, len(self.subdomains))
            for sub in self.subdomains
        ]
        self.report = RunReport(
            n_subdomains=len(self.workers),
            mode=self.mode,
            total_steps=config.total_steps,
            dt=config.dt,
        )

    def _threads(self) -> int:
        requested = settings.RSWR_THREADS or len(self.workers)
        if requested > len(self.workers):
            logger.warning(f"RSWR_THREADS={requested} exceeds {len(self.workers)} workers")
        return max(1, min(requested, len(self.workers)))

    def _superstep(self, phase: Phase, fn: Callable[[Worker], T], executor: Optional[ThreadPoolExecutor]) -> List[T]:
        began = time.perf_counter()
        if executor is None:
            results = [fn(worker) for worker in self.workers]
        else:
            futures = [executor.submit(fn, worker) for worker in self.workers]
            wait(futures)
            # first failure in worker order, like the single mode
            results = [future.result() for future in futures]
        self.report.phase_seconds[phase.value] = self.report.phase_seconds.get(phase.value, 0.0) + time.perf_counter() - began
        return results

    def _round(self, executor: Optional[ThreadPoolExecutor]) -> FieldSlab:
        plan = self.workers[0].state.plan
        sent_before = self.transport.field_messages()
        self._superstep(Phase.PREDICT, Worker.predict, executor)
        self._superstep(Phase.SELECT, Worker.select, executor)
        decision = self._superstep(Phase.DECIDE, Worker.decide, executor)[ROOT]
        slabs = self._superstep(Phase.UPDATE, Worker.update, executor)
        stitched = rswr_engine.stitch(slabs, self.subdomains, self.grid)

        pairs = {}
        for worker in self.workers:
            pairs.update(worker.last_pairs)
        summary = WindowSummary(
            k=plan.k,
            t_start=plan.t_start,
            start_step=plan.start_step,
            predict_steps=plan.predict_steps,
            pair_spans={rswr_engine.pair_label(p): v[0] for p, v in sorted(pairs.items())},
            capped_spans={rswr_engine.pair_label(p): v[1] for p, v in sorted(pairs.items())},
            epsilons={rswr_engine.pair_label(p): v[2] for p, v in sorted(pairs.items())},
            global_steps=decision.span,
            field_messages=self.transport.field_messages() - sent_before,
        )
        self.report.windows.append(summary)
        cap = min((r.width_cells // 2 - self.config.safety_steps for r in self.regions.values()), default=None)
        if cap is not None and decision.span < cap and plan.start_step + decision.span < self.config.total_steps:
            logger.warning(f"Window {plan.k}: span {decision.span} below cap {cap} (limited by {decision.pair})")
        logger.debug(f"Window {plan.k}: t_start={plan.t_start:.6g} predict={plan.predict_steps} span={decision.span}")
        return stitched

    def run(self) -> Tuple[List[FieldSlab], RunReport]:
        total = self.config.total_steps
        logger.info(
            f"RSWR run: N={len(self.workers)}, {self.config.n_nodes} nodes, {total} steps, mode={self.mode.value}"
        )
        if total == 0:
            empty = FieldSlab(t_start=0.0, dt=self.config.dt, grid=self.grid, values=oracle.rest_state(self.config).u_curr[None, :])
            return [empty], self.report

        windows: List[FieldSlab] = []
        executor = ThreadPoolExecutor(max_workers=self._threads()) if self.mode is RunMode.PARALLEL else None
        try:
            while self.workers[0].state.plan.start_step < total:
                windows.append(self._round(executor))
        finally:
            if executor is not None:
                executor.shutdown(wait=True)
        self.report.message_counts = self.transport.counts()
        logger.info(f"RSWR run finished: {len(windows)} windows, {self.report.simulated_steps} steps")
        return windows, self.report


def run_rswr(config: RswrConfig, mode: Optional[RunMode] = None) -> Tuple[List[FieldSlab], RunReport]:
    """
    Solve the configured problem with the predict–select–update protocol.

    Args:
        config: Validated run configuration
        mode: Overrides config.mode when given

    Returns:
        One stitched global slab per window, and the run report
    """
    return Runtime(config, mode).run()
