"""Teacher/student run: train one student per synthetic class and classify held-out samples."""

import argparse
import logging
import time

from sbnmf.experiments import TeacherSetup, run_teacher_experiment


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--rate", type=float, default=0.05)
    p.add_argument("--sweeps", type=int, default=5)
    p.add_argument("--seed", type=int, default=TeacherSetup.seed)
    p.add_argument("-v", "--verbose", action="store_true")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

    t0 = time.perf_counter()
    run = run_teacher_experiment(TeacherSetup(seed=args.seed), rate=args.rate, sweeps=args.sweeps)
    print(f"finished in {time.perf_counter() - t0:.1f}s")
    for c, trace in enumerate(run.traces):
        print(f"class {c}: epoch-mean bound " + " ".join(f"{v:.4f}" for v in trace))
    print("confusion (rows: true class, cols: predicted)")
    print(run.confusion)
    print(f"accuracy {run.accuracy:.3f}")
    if run.nonconverged:
        print(f"nonconverged solves: {run.nonconverged}")


if __name__ == "__main__":
    main()
