"""
Esperimenti: costruzione dei problemi, risoluzione, sweep di scalabilità e di Neumann
"""
from __future__ import annotations

import hashlib
import logging
import math
import statistics
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from config import MAXIT, SEED, SNAPSHOT_CHUNKS, STRATEGY, TIMING_REPEATS, TOL
from src.config import INITIAL_CONDITIONS, RESULT_COLUMNS, SUPPORTED_PROBLEMS
from src.exceptions import DeterminismError
from src.fem1d import (
    SpatialGrid,
    assemble_mass,
    assemble_stiffness,
    initial_condition,
    leapfrog_stability_ratio,
    project_initial,
)
from src.krylov import SolveReport, gmres, residual_true
from src.operators import (
    BlockToeplitzOperator,
    build_heat,
    build_rhs,
    build_wave_bd2,
    build_wave_bd4,
    build_wave_cd,
)
from src.parallel import ParallelEngine, Strategy
from src.precond import CirculantPreconditioner, NeumannPreconditioner, apply_inverse, apply_neumann, build_circulant
from src.timegrid import TimeGrid
from src.wave_diagnostics import Snapshots

logger = logging.getLogger(__name__)

MIN_ELL = {"heat": 1, "wave_cd": 2, "wave_bd2": 3, "wave_bd4": 4}


@dataclass(frozen=True)
class ExperimentConfig:
    """Parametri di una singola risoluzione"""

    problem: str
    n: int
    ell: int
    workers: int = 1
    tol: float = TOL
    delta: Optional[float] = None
    seed: int = SEED
    neumann_order: int = 1
    initial_condition: Optional[str] = None
    strategy: str = STRATEGY
    maxit: int = MAXIT

    @property
    def kind(self) -> str:
        return SUPPORTED_PROBLEMS[self.problem]["kind"]

    @property
    def ic(self) -> str:
        """Condizione iniziale scelta o quella di default del problema"""
        return self.initial_condition or SUPPORTED_PROBLEMS[self.problem]["default_ic"]

    @property
    def is_nonuniform(self) -> bool:
        return self.problem == "heat_nonuniform"

    def validate(self) -> "ExperimentConfig":
        """Controlla i parametri; solleva ValueError al primo valore non valido"""
        if self.problem not in SUPPORTED_PROBLEMS:
            raise ValueError(f"Problema sconosciuto: {self.problem} (attesi {list(SUPPORTED_PROBLEMS)})")
        if self.n < 1:
            raise ValueError(f"n deve essere >= 1 (n={self.n})")
        if self.ell < MIN_ELL[self.kind]:
            raise ValueError(f"{self.problem} richiede ell >= {MIN_ELL[self.kind]} (ell={self.ell})")
        if self.workers < 1:
            raise ValueError(f"workers deve essere >= 1 (workers={self.workers})")
        if self.tol <= 0:
            raise ValueError(f"tol deve essere positiva (tol={self.tol})")
        if self.maxit < 1:
            raise ValueError(f"maxit deve essere >= 1 (maxit={self.maxit})")
        if self.neumann_order < 1:
            raise ValueError(f"neumann_order deve essere >= 1 (neumann_order={self.neumann_order})")
        if self.is_nonuniform:
            if self.delta is None or not 0.0 < self.delta < 1.0:
                raise ValueError(f"heat_nonuniform richiede delta in (0,1) (delta={self.delta})")
        if self.ic not in INITIAL_CONDITIONS:
            raise ValueError(f"Condizione iniziale sconosciuta: {self.ic} (attese {INITIAL_CONDITIONS})")
        Strategy(self.strategy)
        return self


@dataclass(frozen=True)
class Problem:
    """Sistema monolitico pronto per GMRES"""

    config: ExperimentConfig
    space: SpatialGrid
    time: TimeGrid
    operator: BlockToeplitzOperator
    preconditioner: Union[CirculantPreconditioner, NeumannPreconditioner]
    rhs: np.ndarray
    u0: np.ndarray

    def chunk_times(self) -> np.ndarray:
        """
        Istante di ciascun blocco della soluzione.

        Calore e CD: il blocco k è u al tempo t_{k+1}. BD2 e BD4: il blocco 0 è u0
        stesso, quindi il blocco k è al tempo t_k.
        """
        if self.config.kind in ("wave_bd2", "wave_bd4"):
            return np.asarray(self.time.points[:-1])
        return np.asarray(self.time.points[1:])


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    problem: Problem
    solution: np.ndarray
    report: SolveReport

    @property
    def digest(self) -> str:
        return solution_digest(self.solution)

    def row(self) -> Dict[str, object]:
        """Riga del CSV dei risultati, colonne in RESULT_COLUMNS"""
        cfg = self.config
        row = {
            "problem": cfg.problem,
            "n": cfg.n,
            "ell": cfg.ell,
            "p": cfg.workers,
            "strategy": Strategy(cfg.strategy).value,
            "delta": cfg.delta if cfg.is_nonuniform else np.nan,
            "seed": cfg.seed,
            "neumann_order": cfg.neumann_order,
            "ic": cfg.ic,
            "tol": cfg.tol,
        }
        row.update(self.report.as_row())
        return {column: row[column] for column in RESULT_COLUMNS}

    def snapshots(self, stride: Optional[int] = None) -> Snapshots:
        """Un profilo ogni stride blocchi (default ceil(ell/16)), più u0 a t=0"""
        ell = self.config.ell
        if stride is None:
            stride = max(1, math.ceil(ell / SNAPSHOT_CHUNKS))
        if stride < 1:
            raise ValueError(f"stride deve essere >= 1 (stride={stride})")
        chunks = self.solution.reshape(ell, self.config.n)
        times = self.problem.chunk_times()
        picked = np.arange(0, ell, stride)
        if picked[-1] != ell - 1:
            picked = np.append(picked, ell - 1)
        snap_times = times[picked]
        profiles = chunks[picked]
        if snap_times[0] > 0.0:
            snap_times = np.concatenate([[0.0], snap_times])
            profiles = np.vstack([self.problem.u0, profiles])
        return Snapshots(times=snap_times, profiles=profiles)


def build_problem(cfg: ExperimentConfig) -> Problem:
    """Matrici FEM, griglia temporale, operatore, termine noto e precondizionatore"""
    cfg.validate()
    space = SpatialGrid(cfg.n)
    M = assemble_mass(space)
    K = assemble_stiffness(space)
    u0 = project_initial(initial_condition(cfg.ic), space)

    if cfg.is_nonuniform:
        tgrid = TimeGrid.perturbed(cfg.ell, cfg.delta, cfg.seed)
    else:
        tgrid = TimeGrid.uniform(cfg.ell)
    tau = tgrid.tau_base
    if cfg.kind == "wave_cd":
        ratio = leapfrog_stability_ratio(space, tau)
        if ratio > 1.0:
            logger.warning(
                "wave_cd n=%d ell=%d: passo oltre il limite di stabilità (τ²λ_max/4 = %.2f > 1), "
                "la soluzione discreta cresce anche se GMRES converge",
                cfg.n, cfg.ell, ratio,
            )

    builders: Dict[str, Callable[..., BlockToeplitzOperator]] = {
        "wave_cd": build_wave_cd,
        "wave_bd2": build_wave_bd2,
        "wave_bd4": build_wave_bd4,
    }
    if cfg.kind == "heat":
        op = build_heat(M, K, tgrid)
    else:
        op = builders[cfg.kind](M, K, tau, cfg.ell)
    rhs = build_rhs(cfg.kind, M, K, tau, u0, cfg.ell)

    base = build_circulant(op.stencil, cfg.ell)
    precond: Union[CirculantPreconditioner, NeumannPreconditioner] = base
    if cfg.is_nonuniform:
        precond = NeumannPreconditioner(base=base, K=K, sigma=tgrid.sigma, order=cfg.neumann_order)
    return Problem(cfg, space, tgrid, op, precond, rhs, u0)


def _solve_once(problem: Problem, engine: ParallelEngine):
    cfg = problem.config
    P = problem.preconditioner

    def matvec(v: np.ndarray) -> np.ndarray:
        return problem.operator.apply(v, engine)

    if isinstance(P, NeumannPreconditioner):
        def pinv(v: np.ndarray) -> np.ndarray:
            return apply_neumann(P, v, engine)
    else:
        def pinv(v: np.ndarray) -> np.ndarray:
            return apply_inverse(P, v, engine)

    x, report = gmres(matvec, pinv, problem.rhs, tol=cfg.tol, maxit=cfg.maxit, workers=cfg.workers)
    report.true_residual = residual_true(matvec, x, problem.rhs)
    return x, report


def run_experiment(cfg: ExperimentConfig, repeats: int = 1) -> ExperimentResult:
    """
    Costruisce e risolve il problema descritto da cfg.

    Con repeats > 1 la risoluzione è ripetuta e i tempi riportati sono le mediane;
    soluzione e iterazioni sono quelle dell'ultima esecuzione.
    """
    if repeats < 1:
        raise ValueError(f"repeats deve essere >= 1 (repeats={repeats})")
    problem = build_problem(cfg)
    reports: List[SolveReport] = []
    with ParallelEngine(cfg.workers, cfg.strategy) as engine:
        for _ in range(repeats):
            x, report = _solve_once(problem, engine)
            reports.append(report)

    report = reports[-1]
    if repeats > 1:
        report.wall_ms_total = statistics.median(r.wall_ms_total for r in reports)
        report.wall_ms_precond = statistics.median(r.wall_ms_precond for r in reports)
        report.wall_ms_matvec = statistics.median(r.wall_ms_matvec for r in reports)
    logger.info(
        "%s n=%d ell=%d p=%d: %d iterazioni, convergenza %s",
        cfg.problem, cfg.n, cfg.ell, cfg.workers, report.iterations, report.converged,
    )
    return ExperimentResult(config=cfg, problem=problem, solution=x, report=report)


def solution_digest(x: np.ndarray) -> str:
    """SHA-256 dei byte della soluzione (float64 contigui)"""
    return hashlib.sha256(np.ascontiguousarray(x, dtype=np.float64).tobytes()).hexdigest()


@dataclass(frozen=True)
class EfficiencyRecord:
    p: int
    time_s: float
    p_eff: float


def parallel_efficiency(t1: float, p: int, tp: float) -> float:
    """P_eff = T_1 / (p · T_p)"""
    return t1 / (p * tp)


def scaling_sweep(
    cfg: ExperimentConfig,
    worker_list: Sequence[int],
    repeats: int = TIMING_REPEATS,
) -> List[EfficiencyRecord]:
    """
    Stesso problema per ogni p di worker_list; efficienza rispetto a p=1.

    Raises:
        DeterminismError: soluzioni diverse (bit per bit) tra due valori di p
    """
    workers = list(worker_list)
    if not workers or workers[0] != 1 or workers != sorted(workers):
        raise ValueError(f"worker_list deve essere ordinata e iniziare da 1: {workers}")

    records: List[EfficiencyRecord] = []
    reference = None
    t1 = None
    for p in workers:
        result = run_experiment(replace(cfg, workers=p), repeats=repeats)
        digest = result.digest
        if reference is None:
            reference = digest
        elif digest != reference:
            raise DeterminismError(f"Soluzione con p={p} diversa da quella con p=1 ({digest[:12]} != {reference[:12]})")
        time_s = result.report.wall_ms_total / 1000.0
        if t1 is None:
            t1 = time_s
        records.append(EfficiencyRecord(p=p, time_s=time_s, p_eff=parallel_efficiency(t1, p, time_s)))
        logger.info("p=%d: %.3f s, P_eff=%.3f", p, time_s, records[-1].p_eff)
    return records


def efficiency_frame(records: Sequence[EfficiencyRecord]) -> pd.DataFrame:
    return pd.DataFrame(
        [{"p": r.p, "time_s": r.time_s, "p_eff": r.p_eff} for r in records],
        columns=["p", "time_s", "p_eff"],
    )


def neumann_sweep(
    cfg: ExperimentConfig,
    orders: Sequence[int],
    deltas: Sequence[float],
    repeats: int = TIMING_REPEATS,
) -> pd.DataFrame:
    """
    Iterazioni e tempi per ogni coppia (δ, i) sul calore non uniforme.

    Una riga per δ (decrescente), colonne k_i<i> e time_i<i>_s per ordine e
    delta_21_s = time(i=2) - time(i=1) quando entrambi gli ordini sono presenti.
    """
    orders = sorted(set(orders))
    if not orders or orders[0] < 1:
        raise ValueError(f"Ordini di Neumann non validi: {orders}")
    rows = []
    for delta in sorted(set(deltas), reverse=True):
        row: Dict[str, object] = {"delta": delta}
        for order in orders:
            run_cfg = replace(cfg, problem="heat_nonuniform", delta=delta, neumann_order=order)
            result = run_experiment(run_cfg, repeats=repeats)
            row[f"k_i{order}"] = result.report.iterations
            row[f"time_i{order}_s"] = result.report.wall_ms_total / 1000.0
        if 1 in orders and 2 in orders:
            row["delta_21_s"] = row["time_i2_s"] - row["time_i1_s"]
        else:
            row["delta_21_s"] = np.nan
        rows.append(row)
    columns = ["delta"] + [f"k_i{o}" for o in orders] + [f"time_i{o}_s" for o in orders] + ["delta_21_s"]
    return pd.DataFrame(rows, columns=columns)


def results_frame(results: Sequence[ExperimentResult]) -> pd.DataFrame:
    return pd.DataFrame([r.row() for r in results], columns=RESULT_COLUMNS)


def append_csv(df: pd.DataFrame, path: Union[str, Path]) -> Path:
    """Accoda al CSV (intestazione solo se il file non esiste)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, mode="a", header=not path.exists(), index=False)
    return path
