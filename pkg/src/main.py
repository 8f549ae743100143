"""
Entry point principale del sistema
Sottocomandi: solve, scale, neumann, wave-diag
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

BASE_DIR = Path(__file__).parent.parent
if str(BASE_DIR) not in sys.path:
    sys.path.insert(0, str(BASE_DIR))

from config import LOG_LEVEL, MAXIT, SEED, STRATEGY, TIMING_REPEATS, TOL, WORKERS  # noqa: E402
from src.config import INITIAL_CONDITIONS, RESULTS_DIR, SNAPSHOTS_DIR, SUPPORTED_PROBLEMS  # noqa: E402
from src.exceptions import AllAtOnceError  # noqa: E402
from src.experiments import (  # noqa: E402
    ExperimentConfig,
    append_csv,
    efficiency_frame,
    neumann_sweep,
    results_frame,
    run_experiment,
    scaling_sweep,
)
from src.fem1d import leapfrog_stability_ratio  # noqa: E402
from src.parallel import Strategy  # noqa: E402
from src.timegrid import TimeGrid  # noqa: E402
from src.wave_diagnostics import dissipation_metric, wave_speed  # noqa: E402

EXIT_CONVERGED = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2


def _int_list(text: str) -> List[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--problem", choices=list(SUPPORTED_PROBLEMS), default="heat_uniform")
    common.add_argument("--n", type=int, default=64, help="Nodi spaziali interni")
    common.add_argument("--ell", type=int, default=64, help="Passi temporali")
    common.add_argument("--workers", type=int, default=WORKERS)
    common.add_argument("--tol", type=float, default=TOL)
    common.add_argument("--maxit", type=int, default=MAXIT)
    common.add_argument("--delta", type=float, default=None, help="Perturbazione della griglia (heat_nonuniform)")
    common.add_argument("--seed", type=int, default=SEED)
    common.add_argument("--neumann-order", type=int, default=1)
    common.add_argument("--ic", choices=list(INITIAL_CONDITIONS), default=None,
                        help="Condizione iniziale (default: s1 per il calore, ns per l'onda)")
    common.add_argument("--strategy", choices=[s.value for s in Strategy], default=STRATEGY)
    common.add_argument("--out", type=Path, default=None, help="CSV dei risultati")
    common.add_argument("--snapshots", type=Path, default=None, help="CSV dei profili (t,x,u)")
    common.add_argument("--stride", type=int, default=None, help="Un profilo ogni stride blocchi")
    common.add_argument("--repeats", type=int, default=TIMING_REPEATS, help="Ripetizioni cronometrate (mediana)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="aao",
        description="Solutore all-at-once parallel-in-time per calore e onda 1D",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="Una risoluzione GMRES")
    scale = sub.add_parser("scale", parents=[common], help="Efficienza parallela al variare di p")
    scale.add_argument("--worker-list", type=_int_list, default=[1, 2, 4, 8])
    neumann = sub.add_parser("neumann", parents=[common], help="Iterazioni e Δ₂,₁ per ordini e δ")
    neumann.add_argument("--orders", type=_int_list, default=[1, 2, 3])
    neumann.add_argument("--deltas", type=_float_list, default=[0.9, 0.5, 0.1])
    sub.add_parser("wave-diag", parents=[common], help="Velocità d'onda e dissipazione")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    return ExperimentConfig(
        problem=args.problem,
        n=args.n,
        ell=args.ell,
        workers=args.workers,
        tol=args.tol,
        delta=args.delta,
        seed=args.seed,
        neumann_order=args.neumann_order,
        initial_condition=args.ic,
        strategy=args.strategy,
        maxit=args.maxit,
    ).validate()


def grid_csv_path(out: Path, ell: int, delta: float, seed: int) -> Path:
    """CSV della griglia perturbata accanto al file dei risultati"""
    return out.with_name(f"{out.stem}_grid_{ell}_delta{delta}_seed{seed}.csv")


def _banner(title: str) -> None:
    print("=" * 60)
    print(title)
    print("=" * 60)


def cmd_solve(args: argparse.Namespace) -> int:
    cfg = config_from_args(args)
    print(f"\n📝 {cfg.problem}: n={cfg.n}, ell={cfg.ell}, p={cfg.workers}, ic={cfg.ic}, strategia {cfg.strategy}\n")
    result = run_experiment(cfg, repeats=args.repeats)
    report = result.report

    status = "✓ Convergenza" if report.converged else "⚠️  Nessuna convergenza"
    print(f"{status} in {report.iterations} iterazioni")
    print(f"   - Residuo precondizionato: {report.final_residual:.3e}")
    print(f"   - Residuo vero: {report.true_residual:.3e}")
    print(f"   - Tempo totale: {report.wall_ms_total / 1000.0:.4f} s "
          f"(precondizionatore {report.wall_ms_precond / 1000.0:.4f} s, "
          f"prodotti {report.wall_ms_matvec / 1000.0:.4f} s)")
    print(f"   - Digest soluzione: {result.digest[:16]}")

    out = args.out or RESULTS_DIR / "results.csv"
    append_csv(results_frame([result]), out)
    print(f"\n💾 Risultati: {out}")
    if cfg.is_nonuniform:
        grid_path = result.problem.time.to_csv(grid_csv_path(out, cfg.ell, cfg.delta, cfg.seed))
        print(f"💾 Griglia temporale: {grid_path}")
    if args.snapshots is not None:
        result.snapshots(args.stride).to_csv(result.problem.space, args.snapshots)
        print(f"💾 Profili: {args.snapshots}")
    return EXIT_CONVERGED if report.converged else EXIT_NOT_CONVERGED


def cmd_scale(args: argparse.Namespace) -> int:
    cfg = config_from_args(args)
    print(f"\n📊 Sweep di scalabilità {cfg.problem} n={cfg.n} ell={cfg.ell}, p ∈ {args.worker_list}\n")
    records = scaling_sweep(cfg, args.worker_list, repeats=args.repeats)
    df = efficiency_frame(records)
    print(df.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
    print("\n✓ Soluzioni identiche per tutti i p")
    out = args.out or RESULTS_DIR / "efficiency.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(out, index=False)
    print(f"💾 Efficienza: {out}")
    return EXIT_CONVERGED


def cmd_neumann(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig(
        problem="heat_nonuniform",
        n=args.n,
        ell=args.ell,
        workers=args.workers,
        tol=args.tol,
        delta=max(args.deltas),
        seed=args.seed,
        initial_condition=args.ic,
        strategy=args.strategy,
        maxit=args.maxit,
    ).validate()
    print(f"\n📊 Sweep di Neumann n={cfg.n} ell={cfg.ell}, ordini {args.orders}, δ ∈ {args.deltas}\n")
    table = neumann_sweep(cfg, args.orders, args.deltas, repeats=args.repeats)
    print(table.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
    out = args.out or RESULTS_DIR / "neumann.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(out, index=False)
    print(f"\n💾 Tabella: {out}")
    for delta in sorted(set(args.deltas), reverse=True):
        grid_path = TimeGrid.perturbed(cfg.ell, delta, cfg.seed).to_csv(grid_csv_path(out, cfg.ell, delta, cfg.seed))
        print(f"💾 Griglia temporale: {grid_path}")
    return EXIT_CONVERGED


def cmd_wave_diag(args: argparse.Namespace) -> int:
    cfg = config_from_args(args)
    if cfg.kind == "heat":
        raise ValueError("wave-diag richiede un problema d'onda (wave_cd, wave_bd2, wave_bd4)")
    print(f"\n🌊 Diagnostica {cfg.problem}: n={cfg.n}, ell={cfg.ell}, ic={cfg.ic}\n")
    result = run_experiment(cfg)
    report = result.report
    status = "✓ Convergenza" if report.converged else "⚠️  Nessuna convergenza"
    print(f"{status} in {report.iterations} iterazioni")
    if cfg.kind == "wave_cd":
        ratio = leapfrog_stability_ratio(result.problem.space, result.problem.time.tau_base)
        flag = "stabile" if ratio < 1.0 else "instabile"
        print(f"   - Rapporto di stabilità τ²λ_max/4: {ratio:.3f} ({flag})")

    full = result.snapshots(stride=1)
    try:
        speed = wave_speed(full, result.problem.space)
        print(f"   - Velocità d'onda v: {speed:.4f} (esatta: 1)")
    except (AllAtOnceError, ValueError) as e:
        print(f"   - Velocità d'onda non disponibile: {e}")
    ratio = dissipation_metric(full)
    print(f"   - Rapporto di ampiezza ultimo/primo: {ratio:.4f}")

    path = args.snapshots or SNAPSHOTS_DIR / f"{cfg.problem}_{cfg.n}_{cfg.ell}_{cfg.ic}.csv"
    result.snapshots(args.stride).to_csv(result.problem.space, path)
    print(f"\n💾 Profili: {path}")
    if args.out is not None:
        append_csv(results_frame([result]), args.out)
        print(f"💾 Risultati: {args.out}")
    return EXIT_CONVERGED if report.converged else EXIT_NOT_CONVERGED


COMMANDS = {
    "solve": cmd_solve,
    "scale": cmd_scale,
    "neumann": cmd_neumann,
    "wave-diag": cmd_wave_diag,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Funzione principale; restituisce il codice di uscita"""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else getattr(logging, LOG_LEVEL.upper(), logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    _banner("Solutore all-at-once - calore e onda 1D")
    try:
        return COMMANDS[args.command](args)
    except (ValueError, AllAtOnceError) as e:
        print(f"\n❌ Errore: {e}")
        print("\n💡 Suggerimenti:")
        print("   - Controlla n, ell e i parametri del problema scelto")
        print("   - heat_nonuniform richiede --delta in (0,1)")
        return EXIT_ERROR
    except Exception as e:
        print(f"\n❌ Errore imprevisto: {e}")
        import traceback
        traceback.print_exc()
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
