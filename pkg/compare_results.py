"""
Compare baseline and recursive solves, and fitted convergence rates against reference values.
Reads the study.csv written by `stws.py study`.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

REFERENCE_RATES = {
    'diffusion': {(6, 6): 3.96, (6, 4): 3.96, (8, 4): 4.08, (8, 6): 5.95, (8, 8): 5.95},
    'convdiff': {(6, 6): 4.06, (6, 4): 3.85, (8, 4): 3.85, (8, 6): 5.89, (8, 8): 6.80},
}
RATE_TOLERANCE = 0.4


def load_study(path):
    if not os.path.exists(path):
        raise FileNotFoundError(f"no study results at {path}; run `stws.py study` first")
    return pd.read_csv(path)


def improvement(baseline, recursive):
    # lower is better for every compared metric
    if not baseline or np.isnan(baseline):
        return 0.0
    return (baseline - recursive) / baseline * 100


def compare_levels(frame):
    """Per order pair and level: baseline against recursive iterations and times."""
    rows = []
    baseline = frame[frame['mode'] == "baseline"]
    recursive = frame[frame['mode'] == "recursive"]
    for (p_x, p_t, j), base in baseline.groupby(['p_x', 'p_t', 'j']):
        rec = recursive[(recursive['p_x'] == p_x) & (recursive['p_t'] == p_t) & (recursive['j'] == j)]
        if rec.empty:
            continue
        base, rec = base.iloc[0], rec.iloc[0]
        rows.append({
            'p_x': p_x, 'p_t': p_t, 'j': j,
            'baseline_iterations': base['inner_iterations'],
            'recursive_iterations': rec['inner_iterations'],
            'cumulative_iterations': rec.get('cumulative_iterations', rec['inner_iterations']),
            'baseline_time': base['wall_time'],
            'cumulative_time': rec.get('cumulative_time', rec['wall_time']),
        })
    return pd.DataFrame(rows)


def compare_rates(frame, problem):
    reference = REFERENCE_RATES.get(problem, {})
    rows = []
    for (p_x, p_t), group in frame[frame['formulation'] == "sylvester"].groupby(['p_x', 'p_t']):
        fitted = group['fitted_rate'].dropna()
        if fitted.empty:
            continue
        expected = reference.get((int(p_x), int(p_t)), np.nan)
        rows.append({
            'p_x': p_x, 'p_t': p_t,
            'fitted_rate': fitted.iloc[0],
            'reference_rate': expected,
            'floor': min(p_t - 1, p_x - 2),
            'within_tolerance': bool(abs(fitted.iloc[0] - expected) <= RATE_TOLERANCE) if not np.isnan(expected) else None,
        })
    return pd.DataFrame(rows)


def plot_study(frame, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    paths = []

    errors = frame[(frame['formulation'] == "sylvester") & frame['estimated_error'].notna()]
    if not errors.empty:
        fig, ax = plt.subplots(figsize=(6, 4.5))
        for (p_x, p_t, mode), group in errors.groupby(['p_x', 'p_t', 'mode']):
            ax.loglog(group['N'], group['estimated_error'], marker="o", label=f"p_x={p_x}, p_t={p_t} ({mode})")
        ax.set_xlabel("N = n s")
        ax.set_ylabel("max error")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        path = os.path.join(out_dir, "convergence.png")
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)
        paths.append(path)

    if set(frame['mode']) >= {"baseline", "recursive"}:
        fig, ax = plt.subplots(figsize=(6, 4.5))
        for (p_x, p_t, mode), group in frame.groupby(['p_x', 'p_t', 'mode']):
            ax.semilogy(group['j'], group['inner_iterations'], marker="o", label=f"{mode} ({p_x},{p_t})")
        ax.set_xlabel("level j")
        ax.set_ylabel("inner iterations")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        path = os.path.join(out_dir, "iterations.png")
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)
        paths.append(path)
    return paths


def compare_studies(study_csv="output/study.csv", problem="diffusion", plot_dir=None):
    print("=" * 70)
    print("SPACETIME SOLVER COMPARISON")
    print("=" * 70)

    frame = load_study(study_csv)
    print(f"\nStudy file: {study_csv} ({len(frame)} rows)")

    levels = compare_levels(frame)
    if not levels.empty:
        print("\n" + "=" * 70)
        print("RECURSIVE vs BASELINE (per level)")
        print("=" * 70)
        print(f"{'Orders':<8} {'j':>3} {'Baseline':>12} {'Recursive':>12} {'Cumulative':>12} {'Improvement':>15}")
        print("-" * 70)
        for row in levels.itertuples(index=False):
            gain = improvement(row.baseline_iterations, row.recursive_iterations)
            print(f"{f'{row.p_x},{row.p_t}':<8} {row.j:>3} {row.baseline_iterations:>12.0f} "
                  f"{row.recursive_iterations:>12.0f} {row.cumulative_iterations:>12.0f} {gain:>14.1f}%")

        final = levels.loc[levels.groupby(['p_x', 'p_t'])['j'].idxmax()]
        print("\n" + "=" * 70)
        print("FINAL LEVEL")
        print("=" * 70)
        print(f"{'Metric':<25} {'Baseline':>15} {'Recursive':>15} {'Improvement':>13}")
        print("-" * 70)
        for row in final.itertuples(index=False):
            metrics = [
                ('Final-level iterations', row.baseline_iterations, row.recursive_iterations, '{:.0f}'),
                ('Total iterations', row.baseline_iterations, row.cumulative_iterations, '{:.0f}'),
                ('Wall time', row.baseline_time, row.cumulative_time, '{:.2f}s'),
            ]
            print(f"orders ({row.p_x}, {row.p_t}), j={row.j}")
            for name, base, rec, fmt in metrics:
                gain = improvement(base, rec)
                sign = '+' if gain > 0 else ''
                print(f"  {name:<23} {fmt.format(base):>15} {fmt.format(rec):>15} {sign}{gain:>11.1f}%")

    rates = compare_rates(frame, problem)
    if not rates.empty:
        print("\n" + "=" * 70)
        print(f"CONVERGENCE RATES ({problem})")
        print("=" * 70)
        print(f"{'Orders':<8} {'Fitted':>10} {'Reference':>10} {'Floor':>7} {'Status':>10}")
        print("-" * 70)
        for row in rates.itertuples(index=False):
            status = {True: "ok", False: "off", None: "-"}[row.within_tolerance]
            print(f"{f'{row.p_x},{row.p_t}':<8} {row.fitted_rate:>10.2f} {row.reference_rate:>10.2f} "
                  f"{row.floor:>7} {status:>10}")

    if plot_dir:
        for path in plot_study(frame, plot_dir):
            print(f"Plot written: {path}")
    print("\n" + "=" * 70)
    return levels, rates


if __name__ == "__main__":
    import argparse

    parser = argparse.ArgumentParser(description="Compare baseline and recursive solves and fitted rates")
    parser.add_argument("--study", default="output/study.csv", help="study.csv written by stws.py")
    parser.add_argument("--problem", choices=sorted(REFERENCE_RATES), default="diffusion",
                        help="Reference rate table to compare against")
    parser.add_argument("--plot", default=None, metavar="DIR", help="Write PNG plots into DIR")

    args = parser.parse_args()

    compare_studies(args.study, args.problem, args.plot)
