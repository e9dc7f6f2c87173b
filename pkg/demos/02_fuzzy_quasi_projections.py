"""A fuzzy measurement whose histories pass one criterion and fail another.

The two-outcome fuzzy instrument {A_0 = |z+><z+| + 2^{-1/2} |z-><z-|,
A_1 = 2^{-1/2} |z-><z-|} is a legitimate generalized measurement: its
effects are complete and its outcome statistics on the maximally mixed
state are (3/4, 1/4). But its effects overlap, and that overlap leaves a
real off-diagonal entry of 1/4 in the decoherence functional. The weak
criterion rejects the histories while the measurement-based comparison
accepts them, because a later trivial step cannot reveal whether the fuzzy
measurement was performed.
"""

import numpy as np

from decohist import (
    HistorySpec,
    Step,
    check_kent,
    check_measurement_based,
    check_weak,
    decoherence_functional,
    posterior_state,
    spin_half_library,
    trivial_instrument,
)


def main():
    lib = spin_half_library()

    print("=== Fuzzy instrument on the maximally mixed state ===\n")
    for label in ("0", "1"):
        p, rho = posterior_state(lib.mixed, lib.fuzzy, label)
        diag = np.real(np.diag(rho.matrix))
        print(f"  outcome {label}: probability {p:.4f}, posterior diag({diag[0]:.4f}, {diag[1]:.4f})")

    spec = HistorySpec(
        initial=lib.mixed,
        steps=(
            Step(lib.identity, lib.fuzzy),
            Step(lib.identity, trivial_instrument(2)),
        ),
    )
    functional = decoherence_functional(spec)

    print("\n=== Decoherence functional of fuzzy-then-trivial ===\n")
    for labels, row in zip(functional.labels, functional.values):
        cells = "  ".join(f"{v.real:+.4f}" for v in row)
        print(f"  {'/'.join(labels):>6s}:  {cells}")
    print("\nThe off-diagonal is 1/4 = (1/2) * 2^{-1/2} * 2^{-1/2}: the overlap of")
    print("the two effects weighted by the state, a real number that cannot vanish.")

    print("\n=== Three criteria, three perspectives ===")
    weak = check_weak(functional)
    mb = check_measurement_based(spec)
    kent = check_kent(spec)
    rows = [
        ("weak (off-diagonals)", weak.verdict, weak.max_residual),
        ("measurement-based (omit vs ignore)", mb.verdict, mb.max_residual),
        ("sum rule (coarse-graining)", kent.verdict, kent.max_residual),
    ]
    for name, verdict, residual in rows:
        print(f"  {name:<38s} {'PASS' if verdict else 'FAIL'}  residual {residual:.2e}")

    print("\nThe disagreement is the point: a nonvanishing real off-diagonal does")
    print("not by itself make the measurement detectable downstream.")


if __name__ == "__main__":
    main()
