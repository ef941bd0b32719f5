"""Rescaling main loop with the determinant-based and trace-based epsilon-feasibility criteria."""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import basic_procedure as bp
from .jordan import (
    Direction,
    Element,
    FrameScaling,
    SimpleBlock,
    norm_J,
    project_cone,
    quad_block_rows,
    spectral_decompose,
)
from .linear_ops import DenseOperator, build_kernel_projector, compose_scaling

#: negative eigenvalues of an un-scaled dual certificate down to this value are clipped to zero
DUAL_CLIP_TOL = 1e-10


class Criterion(enum.Enum):
    DET = "det"
    TRACE = "trace"


@dataclass(frozen=True)
class MAConfig:
    epsilon: float = 1e-12
    xi: float = 0.25
    criterion: Criterion = Criterion.DET
    bp_scheme: bp.Scheme = bp.Scheme.MVN
    time_limit: float = 7200.0
    seed: Optional[int] = None  # recorded only; the method itself is deterministic

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0.0 < self.xi < 1.0:
            raise ValueError(f"xi must lie in (0, 1), got {self.xi}")
        if isinstance(self.criterion, str):
            object.__setattr__(self, "criterion", Criterion(self.criterion.lower()))
        if isinstance(self.bp_scheme, str):
            object.__setattr__(self, "bp_scheme", bp.Scheme(self.bp_scheme.lower()))

    def bp_config(self) -> bp.BPConfig:
        return bp.BPConfig(xi=self.xi, scheme=self.bp_scheme)


# ---------------------------------------------------------------------------
# criteria


def det_threshold(rank: int, cfg: MAConfig) -> float:
    return rank * math.log(cfg.epsilon) / math.log(cfg.xi)


def check_det_criterion(num: int, rank: int, cfg: MAConfig) -> bool:
    """True iff ``num >= r_l log(eps) / log(xi)``."""
    return num >= det_threshold(rank, cfg)


def trace_criterion_value(m: float, rank: int, xi: float) -> float:
    return rank / (rank + (1.0 / xi - 1.0) * m)


def check_trace_criterion(m: float, rank: int, cfg: MAConfig) -> bool:
    """True iff ``r_l / (r_l + (1/xi - 1) m_l) <= eps``."""
    return trace_criterion_value(m, rank, cfg.xi) <= cfg.epsilon


def main_iteration_bound(structure, cfg: MAConfig) -> float:
    """Worst-case number of main iterations for the configured criterion."""
    r, p, xi, eps = structure.r, structure.p, cfg.xi, cfg.epsilon
    if cfg.criterion is Criterion.DET:
        return -(r / math.log(xi)) * math.log(1.0 / eps) - p + 1
    return (xi / (1.0 - xi)) * (1.0 / eps - 1.0) * r - p + 1


# ---------------------------------------------------------------------------
# scaling state


@dataclass
class BlockScaling:
    """Scaling history of one simple block.

    ``history`` lists the frame scalings in the order they were produced.
    ``weight`` holds the block coordinates of ``Qbar*(e_l)``, which turns the
    trace-criterion increment ``<Qbar(sum c_h), e_l>`` into a dot product.
    """

    block: SimpleBlock
    history: list[FrameScaling] = field(default_factory=list)
    num: int = 0
    m: float = 0.0
    weight: Optional[np.ndarray] = None


class ScalingState:
    """Per-block accumulated scalings ``RP_l``, ``RD_l``, ``Qbar_l`` and the criterion counters.

    With ``g^1, ..., g^k`` the scaling elements of a block in order,

    * ``RP = Q_{g^1} ... Q_{g^k}`` (maps scaled kernel points to original ones),
    * ``RD = Q_{1/g^1} ... Q_{1/g^k}`` (maps scaled range points to original ones),
    * ``Qbar = Q_{1/g^k} ... Q_{1/g^1}`` for the det criterion and
      ``Qbar = Q_{1/g^1} ... Q_{1/g^k}`` for the trace criterion.
    """

    def __init__(self, structure, criterion: Criterion = Criterion.DET):
        self.structure = structure
        self.criterion = criterion
        self.blocks: dict[int, BlockScaling] = {}

    def block(self, index: int) -> BlockScaling:
        if index not in self.blocks:
            b = self.structure.simple_blocks[index]
            e = self.structure.identity().coords[b.coords].copy()
            self.blocks[index] = BlockScaling(b, weight=e)
        return self.blocks[index]

    def num(self, index: int) -> int:
        return self.blocks[index].num if index in self.blocks else 0

    def m(self, index: int) -> float:
        return self.blocks[index].m if index in self.blocks else 0.0

    def record(self, scaling: FrameScaling, cut_sum: np.ndarray) -> BlockScaling:
        """Register a new scaling on its block and update both counters.

        ``cut_sum`` is the block coordinates of ``sum_{h in H} c_h``; the
        trace increment uses ``Qbar`` from before this update.
        """
        bs = self.block(scaling.block.index)
        bs.num += len(scaling.cut)
        bs.m += float(cut_sum @ bs.weight)
        bs.weight = quad_block_rows(scaling.block, scaling.g_inv, bs.weight[None, :])[0]
        bs.history.append(scaling)
        return bs

    def _apply(self, x: Element, direction: Direction, newest_first: bool, blocks=None) -> Element:
        for idx, bs in self.blocks.items():
            if blocks is not None and idx not in blocks:
                continue
            seq = reversed(bs.history) if newest_first else bs.history
            for sc in seq:
                x = sc.apply(x, direction)
        return x

    def apply_rp(self, x: Element) -> Element:
        return self._apply(x, Direction.FORWARD, newest_first=True)

    def apply_rd(self, x: Element) -> Element:
        return self._apply(x, Direction.INVERSE, newest_first=True)

    def apply_qbar(self, x: Element, block: int) -> Element:
        newest_first = self.criterion is Criterion.TRACE
        return self._apply(x, Direction.INVERSE, newest_first=newest_first, blocks={block})


# ---------------------------------------------------------------------------
# results


@dataclass
class PrimalFeasible:
    x: Element
    residual: float
    lambda_min: float


@dataclass
class DualFeasible:
    w: Element
    residual: float
    lambda_min: float
    source: str  # "y" or "v"


@dataclass
class NoEpsFeasible:
    block: int
    criterion_value: float


@dataclass
class BasicProcedureError:
    iterations: int


@dataclass
class TimeLimit:
    elapsed: float


Status = Union[PrimalFeasible, DualFeasible, NoEpsFeasible, BasicProcedureError, TimeLimit]


@dataclass
class MainMetrics:
    xi: float
    main_iters: int = 0
    bp_iters_total: int = 0
    bp_iters: list[int] = field(default_factory=list)
    wall_time: float = 0.0
    cuts_per_round: list[int] = field(default_factory=list)
    cut_sets: list[dict] = field(default_factory=list)
    rank_deficient_rounds: int = 0
    counters: list[dict] = field(default_factory=list)  # per round: block -> (num_l, m_l)

    @property
    def total_cuts(self) -> int:
        return int(sum(self.cuts_per_round))

    @property
    def round_log_rates(self) -> list[float]:
        """``log(xi^{N_k})`` per scaling round."""
        return [n * math.log(self.xi) for n in self.cuts_per_round]

    @property
    def cumulative_log_rate(self) -> float:
        """``log(xi^{N_1 + ... + N_k})``."""
        return self.total_cuts * math.log(self.xi)

    @property
    def cumulative_log10_rate(self) -> float:
        return self.total_cuts * math.log10(self.xi)


@dataclass
class SolveResult:
    status: Status
    metrics: MainMetrics
    scaling: ScalingState = field(repr=False)

    @property
    def kind(self) -> str:
        return type(self.status).__name__


# ---------------------------------------------------------------------------
# solve


def apply_cut_round(state: ScalingState, op: DenseOperator, cut: bp.Cut, cfg: MAConfig):
    """Process one cut outcome.

    Returns ``(op', stop)`` where ``stop`` is ``None`` or a :class:`NoEpsFeasible`
    when a criterion fires.  The criterion is tested right after each block's
    counter update, and on firing the round is abandoned.
    """
    scalings = []
    for blk in sorted(cut.H):
        H = cut.H[blk]
        sc = FrameScaling.from_decomposition(cut.frames, blk, H, cfg.xi)
        indicator = np.zeros(sc.block.rank)
        indicator[list(H)] = 1.0
        bs = state.record(sc, cut.frames.compose_block(blk, indicator))
        rank = sc.block.rank
        if cfg.criterion is Criterion.DET:
            if check_det_criterion(bs.num, rank, cfg):
                return op, NoEpsFeasible(blk, bs.num / det_threshold(rank, cfg))
        else:
            if check_trace_criterion(bs.m, rank, cfg):
                return op, NoEpsFeasible(blk, trace_criterion_value(bs.m, rank, cfg.xi))
        scalings.append(sc)
    return compose_scaling(op, scalings), None


def _normalize_rows(op: DenseOperator) -> DenseOperator:
    norms = np.linalg.norm(op.matrix, axis=1)
    norms[norms == 0] = 1.0
    return DenseOperator(op.structure, op.matrix / norms[:, None])


def _primal_result(op: DenseOperator, z: Element, state: ScalingState) -> PrimalFeasible:
    x = state.apply_rp(z)
    x = x / spectral_decompose(x).lambda_max
    residual = float(np.linalg.norm(op.matrix @ x.coords))
    return PrimalFeasible(x, residual, spectral_decompose(x).lambda_min)


def _dual_result(op: DenseOperator, w: Element, state: ScalingState, source: str) -> DualFeasible:
    w = state.apply_rd(w)
    decomp = spectral_decompose(w)
    w = w / decomp.lambda_max
    decomp = spectral_decompose(w)
    if -DUAL_CLIP_TOL <= decomp.lambda_min < 0:
        w = project_cone(w, decomp)
        decomp = spectral_decompose(w)
    proj = build_kernel_projector(op, warn=False)
    residual = norm_J(proj.project(w))
    return DualFeasible(w, residual, decomp.lambda_min, source)


def solve(op: DenseOperator, cfg: MAConfig = MAConfig(), bp_monitor: Optional[bp.Monitor] = None) -> SolveResult:
    """Run the main loop on ``op``; ``bp_monitor`` is forwarded to every basic-procedure call."""
    s = op.structure
    start = time.perf_counter()
    metrics = MainMetrics(xi=cfg.xi)
    state = ScalingState(s, cfg.criterion)
    bp_cfg = cfg.bp_config()
    y1 = s.identity() / s.r
    current = _normalize_rows(op)

    def finish(status):
        metrics.wall_time = time.perf_counter() - start
        return SolveResult(status, metrics, state)

    while True:
        elapsed = time.perf_counter() - start
        if elapsed > cfg.time_limit:
            return finish(TimeLimit(elapsed))
        metrics.main_iters += 1
        proj = build_kernel_projector(current, warn=False)
        if proj.rank < current.m:
            metrics.rank_deficient_rounds += 1
        out = bp.run(proj, y1, bp_cfg, bp_monitor)
        metrics.bp_iters.append(out.iterations)
        metrics.bp_iters_total += out.iterations

        if isinstance(out, bp.PrimalInterior):
            return finish(_primal_result(op, out.z, state))
        if isinstance(out, bp.DualFromY):
            return finish(_dual_result(op, out.y, state, "y"))
        if isinstance(out, bp.DualFromV):
            return finish(_dual_result(op, out.v, state, "v"))
        if isinstance(out, bp.IterationLimit):
            return finish(BasicProcedureError(out.iterations))

        metrics.cuts_per_round.append(out.total)
        metrics.cut_sets.append(dict(out.H))
        current, stop = apply_cut_round(state, current, out, cfg)
        metrics.counters.append({i: (b.num, b.m) for i, b in state.blocks.items()})
        if stop is not None:
            return finish(stop)
        current = _normalize_rows(current)
