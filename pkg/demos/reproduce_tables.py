"""Reduced-scale runs of the three numerical studies.

Usage: python demos/reproduce_tables.py [S]
S defaults to 200 truths for the comparison tables (1000 matches the
acceptance run). The maximum-entropy study runs at 1000 samples x 100 draws.
"""
import sys

from genlik.experiments import maxent_csv, run_d1_d2, run_d3, run_maxent_study

S = int(sys.argv[1]) if len(sys.argv) > 1 else 200
print(f"single random guess vs solved joint (S={S})")
for n, score in ((4, "abs-diff"), (5, "abs-diff"), (4, "product"), (5, "product")):
    s = run_d1_d2(n, n, score, S=S).summary()
    print(f"  n=m={n} {score:<9} D1={s['D1']:.3f} D2={s['D2']:.3f} K1={s['K1']:.3f} K2={s['K2']:.3f}")

print("\naveraged random guesses vs solved joint (n=m=3, S=100, M=1e4)")
for score in ("abs-diff", "product"):
    s = run_d3(3, 3, score, S=100, M=10_000).summary()
    print(f"  {score:<9} DeltaD3={s['DeltaD3']:.5f} +- {s['DeltaD3_se']:.5f}  "
          f"DeltaK3={s['DeltaK3']:.5f} +- {s['DeltaK3_se']:.5f}")

print("\nmaximum-entropy estimators on a die (n=6)")
print(maxent_csv(run_maxent_study()))
