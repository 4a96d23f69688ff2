"""Score the shipped synthetic clips for several perturbation radii and print d1, d2, d3, MDS.

    python3 scripts/epsilon_sweep.py --eps 1e-3 1e-4 1e-5
"""
import argparse

from torquescore.difficulty import compute_mds
from torquescore.motion import MotionSequence, estimate_derivatives
from torquescore.perturbation import PerturbationConfig, sequence_jacobians
from torquescore.rigidbody import default_humanoid
from torquescore.synthetic import SYNTHETIC_MOTIONS


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, nargs="+", default=[1e-3, 1e-4, 1e-5])
    ap.add_argument("--directions", choices=("full", "theta"), default="full")
    args = ap.parse_args()
    model = default_humanoid()
    seqs = {n: estimate_derivatives(MotionSequence(30.0, fn(model), n)) for n, fn in SYNTHETIC_MOTIONS.items()}
    print("eps,clip,d1,d2,d3,mds,warnings")
    for eps in args.eps:
        cfg = PerturbationConfig(eps_q=eps, directions=args.directions)
        for name, seq in seqs.items():
            b = compute_mds(sequence_jacobians(model, seq, cfg))
            print(f"{eps:g},{name},{b.d1:.3f},{b.d2:.3f},{b.d3:.3f},{b.mds:.3f},{';'.join(b.warnings)}")


if __name__ == "__main__":
    main()
