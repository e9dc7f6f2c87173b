"""Two-step spin histories and the decoherence functional.

A spin-1/2 starts in the z-up state, is measured along y, then along x.
The decoherence functional of the four resulting histories has purely
imaginary off-diagonal entries, so the histories decohere weakly even
though they are far from orthogonal: the y measurement genuinely disturbs
the spin, yet the final x statistics cannot tell whether it happened.
"""

from decohist import (
    HistorySpec,
    Step,
    check_measurement_based,
    check_weak,
    decoherence_functional,
    grouped_diagonal,
    marginal_distribution,
    omitted_distribution,
    spin_half_library,
)


def main():
    lib = spin_half_library()
    spec = HistorySpec(
        initial=lib.up_z,
        steps=(
            Step(lib.identity, lib.projective_y),
            Step(lib.identity, lib.projective_x),
        ),
    )

    print("=== Decoherence functional of the y-then-x chain on |z+> ===\n")
    functional = decoherence_functional(spec)
    header = "        " + "  ".join(f"{'/'.join(l):>10s}" for l in functional.labels)
    print(header)
    for labels, row in zip(functional.labels, functional.values):
        cells = "  ".join(f"{v.real:+.3f}{v.imag:+.3f}i" for v in row)
        print(f"{'/'.join(labels):>8s}  {cells}")

    print("\nEvery off-diagonal entry is purely imaginary, for example")
    idx = {p: i for i, p in enumerate(functional.paths)}
    value = functional.values[idx[(("y+", 0), ("x+", 0))], idx[(("y-", 0), ("x+", 0))]]
    print(f"  D((y+, x+); (y-, x+)) = {value:+.4f}")

    print("\n=== Verdicts ===")
    weak = check_weak(functional)
    mb = check_measurement_based(spec)
    print(f"  weak decoherence:        {'PASS' if weak.verdict else 'FAIL'}"
          f"  (max |Re D| = {weak.max_residual:.2e})")
    print(f"  measurement-based:       {'PASS' if mb.verdict else 'FAIL'}"
          f"  (max residual = {mb.max_residual:.2e})")

    print("\n=== Final x statistics with and without the y measurement ===")
    with_y = marginal_distribution(spec, (1,))
    without_y = omitted_distribution(spec, (1,))
    print(f"  {'outcome':>8s}  {'y measured':>12s}  {'y omitted':>12s}")
    for key in sorted(with_y):
        print(f"  {key[0]:>8s}  {with_y[key]:12.6f}  {without_y[key]:12.6f}")

    print("\nHistory probabilities (diagonal of the functional):")
    for labels, p in sorted(grouped_diagonal(functional).items()):
        print(f"  {'/'.join(labels):>8s}: {p:.4f}")


if __name__ == "__main__":
    main()
