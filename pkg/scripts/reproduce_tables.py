"""
Script per riprodurre le tabelle degli esperimenti (calore, efficienza, Neumann, onda)
Scrive i CSV in results/; --scale desk usa dimensioni ridotte
"""
import argparse
import sys
from pathlib import Path

import numpy as np
import pandas as pd

# Aggiungi la radice del progetto al path
BASE_DIR = Path(__file__).parent.parent
sys.path.insert(0, str(BASE_DIR))

from config import TIMING_REPEATS  # noqa: E402
from src.config import PUBLISHED_ITERATIONS, RESULTS_DIR  # noqa: E402
from src.exceptions import UndefinedSpeedError  # noqa: E402
from src.experiments import (  # noqa: E402
    ExperimentConfig,
    efficiency_frame,
    neumann_sweep,
    results_frame,
    run_experiment,
    scaling_sweep,
)
from src.fem1d import SpatialGrid, leapfrog_stability_ratio  # noqa: E402
from src.timegrid import TimeGrid  # noqa: E402
from src.wave_diagnostics import dissipation_metric, wave_speed  # noqa: E402

_LARGE = [(n, ell) for ell in (768, 1024, 1440) for n in (320, 512, 768)]
_SMALL = [(n, ell) for ell in (32, 64, 96) for n in (32, 64, 96)]

SIZES = {
    "desk": {
        "heat": [(64, 64), (128, 128)],
        "efficiency": [(64, 128)],
        "neumann": [(64, 128)],
        "deltas": [0.9, 0.5, 0.1],
        "wave": [(32, 32), (64, 32), (32, 64)],
        "wave_large": [(64, 128)],
        "smooth": [(32, 32)],
    },
    "full": {
        "heat": _LARGE + [(1568, 1440)],
        "efficiency": _LARGE + [(1568, 1440)],
        "neumann": [(320, 768), (512, 768), (768, 768), (512, 1024), (768, 1024), (1024, 1024)],
        "deltas": [0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1],
        "wave": _SMALL,
        "wave_large": _LARGE,
        "smooth": [(128, 128), (320, 768)],
    },
}

WAVE_PROBLEMS = ("wave_cd", "wave_bd2", "wave_bd4")


def _int_list(text: str):
    return [int(v) for v in text.split(",") if v.strip()]


def heat_table(sizes, workers: int, repeats: int) -> pd.DataFrame:
    """Calore su griglia uniforme: iterazioni e tempi"""
    print("\n🔥 Calore, griglia uniforme")
    results = []
    for n, ell in sizes:
        result = run_experiment(ExperimentConfig("heat_uniform", n, ell, workers=workers), repeats=repeats)
        print(f"  ✓ n={n}, ell={ell}: {result.report.iterations} iterazioni "
              f"(riferimento {PUBLISHED_ITERATIONS['heat_uniform']['iterations']}), "
              f"{result.report.wall_ms_total / 1000.0:.3f} s")
        results.append(result)
    return results_frame(results)


def efficiency_table(problem: str, ic: str, sizes, worker_list, repeats: int) -> pd.DataFrame:
    """Tempi ed efficienza parallela al variare di p (calore con s1, onda BD2 con s2)"""
    print(f"\n📊 Efficienza parallela {problem} ({ic}), p ∈ {worker_list}")
    frames = []
    for n, ell in sizes:
        cfg = ExperimentConfig(problem, n, ell, initial_condition=ic)
        df = efficiency_frame(scaling_sweep(cfg, worker_list, repeats=repeats))
        df.insert(0, "ell", ell)
        df.insert(0, "n", n)
        df.insert(0, "problem", problem)
        best = df.loc[df["time_s"].idxmin()]
        print(f"  ✓ n={n}, ell={ell}: T_1={df['time_s'].iloc[0]:.3f} s, "
              f"migliore p={int(best['p'])} ({best['time_s']:.3f} s, P_eff={best['p_eff']:.2f})")
        frames.append(df)
    return pd.concat(frames, ignore_index=True)


def neumann_table(sizes, deltas, workers: int, repeats: int) -> pd.DataFrame:
    """Calore non uniforme: iterazioni per δ e ordine i, Δ₂,₁, un pannello per (n, ell)"""
    frames = []
    for n, ell in sizes:
        print(f"\n📊 Neumann, n={n}, ell={ell}")
        cfg = ExperimentConfig("heat_nonuniform", n, ell, workers=workers, delta=max(deltas))
        table = neumann_sweep(cfg, orders=[1, 2, 3], deltas=deltas, repeats=repeats)
        published = PUBLISHED_ITERATIONS["heat_nonuniform"].get((n, ell), {})
        for order in (1, 2, 3):
            table[f"ref_k_i{order}"] = [published.get((d, order), np.nan) for d in table["delta"]]
        table.insert(0, "ell", ell)
        table.insert(0, "n", n)
        print(table.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
        for delta in deltas:
            TimeGrid.perturbed(ell, delta, cfg.seed).to_csv(
                RESULTS_DIR / "grids" / f"grid_{ell}_delta{delta}_seed{cfg.seed}.csv"
            )
        frames.append(table)
    return pd.concat(frames, ignore_index=True)


def wave_table(problems, sizes, ic: str, workers: int, repeats: int) -> pd.DataFrame:
    """Onda: iterazioni, velocità, dissipazione e rapporto di stabilità per ogni schema"""
    print(f"\n🌊 Onda, condizione iniziale {ic}")
    rows = []
    for problem in problems:
        for n, ell in sizes:
            cfg = ExperimentConfig(problem, n, ell, workers=workers, initial_condition=ic)
            result = run_experiment(cfg, repeats=repeats)
            snaps = result.snapshots(stride=1)
            try:
                speed = wave_speed(snaps, result.problem.space)
            except (ValueError, UndefinedSpeedError):
                speed = float("nan")
            ratio = dissipation_metric(snaps)
            peak = float(np.max(np.abs(result.solution)))
            if ic == "s2":
                reference = PUBLISHED_ITERATIONS["smooth_s2"]["iterations"]
            else:
                reference = PUBLISHED_ITERATIONS.get(problem, {}).get((n, ell))
            stability = leapfrog_stability_ratio(SpatialGrid(n), 1.0 / ell) if problem == "wave_cd" else np.nan
            print(f"  ✓ {problem} n={n}, ell={ell}: {result.report.iterations} iterazioni "
                  f"(riferimento {reference}), v={speed:.3f}, ampiezza {ratio:.3f}, max|u|={peak:.3f}")
            row = result.row()
            row.update({
                "wave_speed": speed,
                "amplitude_ratio": ratio,
                "max_abs_u": peak,
                "cd_stability_ratio": stability,
                "reference_iterations": reference,
            })
            rows.append(row)
    return pd.DataFrame(rows)


def main():
    """Funzione principale"""
    parser = argparse.ArgumentParser(description="Riproduzione delle tabelle")
    parser.add_argument("--scale", choices=list(SIZES), default="desk")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--worker-list", type=_int_list, default=[1, 2, 4, 8])
    parser.add_argument("--repeats", type=int, default=TIMING_REPEATS)
    args = parser.parse_args()

    print("=" * 60)
    print(f"Riproduzione tabelle - scala {args.scale}")
    print("=" * 60)
    sizes = SIZES[args.scale]

    heat_table(sizes["heat"], args.workers, args.repeats).to_csv(RESULTS_DIR / "table_heat.csv", index=False)
    efficiency_table("heat_uniform", "s1", sizes["efficiency"], args.worker_list, args.repeats).to_csv(
        RESULTS_DIR / "efficiency_heat.csv", index=False)
    neumann_table(sizes["neumann"], sizes["deltas"], args.workers, args.repeats).to_csv(
        RESULTS_DIR / "table_neumann.csv", index=False)
    wave_table(WAVE_PROBLEMS, sizes["wave"], "ns", args.workers, args.repeats).to_csv(
        RESULTS_DIR / "table_wave.csv", index=False)
    wave_table(["wave_bd2"], sizes["wave_large"], "ns", args.workers, args.repeats).to_csv(
        RESULTS_DIR / "table_wave_bd2_large.csv", index=False)
    wave_table(WAVE_PROBLEMS, sizes["smooth"], "s2", args.workers, args.repeats).to_csv(
        RESULTS_DIR / "table_wave_smooth.csv", index=False)
    efficiency_table("wave_bd2", "s2", sizes["efficiency"], args.worker_list, args.repeats).to_csv(
        RESULTS_DIR / "efficiency_wave_bd2.csv", index=False)

    print("\n" + "=" * 60)
    print("Riproduzione completata!")
    print(f"CSV salvati in: {RESULTS_DIR}")
    print("=" * 60)


if __name__ == "__main__":
    main()
