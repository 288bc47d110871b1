"""Wall time of a short evolution with each kernel backend.

    python benchmarks/bench_evolution.py [--model shear-compression] [--T 3] [--h 25]

Each backend runs in a fresh interpreter because the backend is fixed at
import time. The final total energies of the runs are printed next to the
timings so agreement can be read off directly.
"""

import argparse
import json
import os
import subprocess
import sys

_CHILD = """
import json, sys, time
from cavedamage import kernels
from cavedamage.config import Config
from cavedamage.evolution import run_evolution
cfg = Config(model=sys.argv[1], T=int(sys.argv[2]), h=float(sys.argv[3]), w1=float(sys.argv[4]))
t0 = time.perf_counter()
recs = run_evolution(cfg)
print(json.dumps({"backend": kernels.BACKEND, "seconds": time.perf_counter() - t0,
                  "total": recs[-1].energy.total}))
"""


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--model", default="shear-compression")
    parser.add_argument("--T", type=int, default=3)
    parser.add_argument("--h", type=float, default=25.0)
    parser.add_argument("--w1", type=float, default=1e4)
    args = parser.parse_args(argv)
    rows = []
    for pure in ("0", "1"):
        env = dict(os.environ, CAVEDAMAGE_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", _CHILD, args.model, str(args.T), str(args.h), str(args.w1)],
                             env=env, check=True, capture_output=True, text=True)
        rows.append(json.loads(out.stdout.strip().splitlines()[-1]))
    for r in rows:
        print(f"{r['backend']:<8} {r['seconds']:8.2f} s   final total energy {r['total']:.15e}")


if __name__ == "__main__":
    main()
