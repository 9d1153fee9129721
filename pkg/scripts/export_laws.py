"""Write plot-ready CSV tables for the main laws into an output directory.

usage: python scripts/export_laws.py [outdir] [--quick]
"""
import argparse
import os

from maxindep.cli import run

p = argparse.ArgumentParser()
p.add_argument("outdir", nargs="?", default="out")
p.add_argument("--quick", action="store_true", help="skip the 40-mode Airy and KPZ flows")
a = p.parse_args()
os.makedirs(a.outdir, exist_ok=True)

jobs = {
    "tw2_fredholm.csv": ["tw2", "--method", "fredholm", "--s-min", "-6", "--s-max", "4", "--s-step", "0.1"],
    "tw2_painleve_new.csv": ["tw2", "--method", "painleve-new", "--s-min", "-6", "--s-max", "4", "--s-step", "0.1"],
    "tw1.csv": ["tw1", "--s-min", "-5", "--s-max", "4", "--s-step", "0.1"],
    "gue10_max.csv": ["gue-extreme", "--n", "10", "--s-min", "0", "--s-max", "10", "--s-step", "0.05"],
    "w_0.csv": ["laws", "--family", "gue", "--k", "0"],
    "w_5.csv": ["laws", "--family", "gue", "--k", "5"],
    "circle_k3.csv": ["laws", "--family", "circle", "--k", "3"],
    "popl_xi4.csv": ["popl", "--xi", "4", "--n", "20"],
    "popl_alpha_xi4.csv": ["popl", "--xi", "4"],
    "schur_04_03.csv": ["schur", "--alphabet", "[0.4, 0.3]", "--n", "10"],
}
if not a.quick:
    jobs["zk_prime_1.csv"] = ["laws", "--family", "airy", "--k", "1"]
    jobs["tw2_max_product.csv"] = ["tw2", "--method", "max-product", "--s-min", "-5", "--s-max", "4", "--s-step", "0.1"]
    jobs["kpz_t1.csv"] = ["kpz", "--t", "1", "--s-min", "-3", "--s-max", "3", "--s-step", "0.25"]

for name, argv in jobs.items():
    code = run(argv + ["--out", os.path.join(a.outdir, name)])
    print(f"{name}: exit {code}")
