"""A symmetric direction POVM that visibly disturbs later statistics.

Six spin-coherent effects along +/-x, +/-y, +/-z form a complete POVM.
Unlike a projective measurement, performing it and ignoring the result
contracts the Bloch vector: a later z measurement sees populations pulled
one third of the way toward the maximally mixed point. The disturbance is
proportional to the initial polarization epsilon, which this script sweeps.
"""

from decohist import (
    AXIS_DIRECTIONS,
    HistorySpec,
    Step,
    check_measurement_based,
    marginal_distribution,
    omitted_distribution,
    outcome_probabilities,
    spin_direction_instrument,
    spin_half_library,
)


def main():
    lib = spin_half_library()
    inst = spin_direction_instrument(AXIS_DIRECTIONS)

    print("=== Six-direction POVM outcome probabilities on |z+> ===\n")
    probs = dict(zip(inst.labels, outcome_probabilities(inst, lib.up_z.matrix)))
    for label in sorted(probs):
        bar = "#" * int(round(probs[label] * 60))
        print(f"  {label:>3s}  {probs[label]:.4f}  {bar}")

    spec = HistorySpec(
        initial=lib.up_z,
        steps=(Step(lib.identity, inst), Step(lib.identity, lib.projective_z)),
    )
    print("\n=== Later z statistics with and without the direction step ===\n")
    with_povm = marginal_distribution(spec, (1,))
    without_povm = omitted_distribution(spec, (1,))
    print(f"  {'outcome':>8s}  {'performed':>10s}  {'omitted':>10s}")
    for key in sorted(with_povm):
        print(f"  {key[0]:>8s}  {with_povm[key]:10.6f}  {without_povm[key]:10.6f}")
    report = check_measurement_based(spec)
    print(f"\n  measurement-based: {'PASS' if report.verdict else 'FAIL'}"
          f"  (max residual = {report.max_residual:.6f})")

    print("\n=== Disturbance is linear in the polarization ===\n")
    print(f"  {'epsilon':>8s}  {'residual':>10s}  {'residual/epsilon':>16s}")
    for eps in (0.01, 0.02, 0.04, 0.5, 1.0):
        rho = lib.near_identity(eps)
        sweep = HistorySpec(
            initial=rho,
            steps=(Step(lib.identity, inst), Step(lib.identity, lib.projective_z)),
        )
        residual = check_measurement_based(sweep).max_residual
        print(f"  {eps:8.2f}  {residual:10.6f}  {residual / eps:16.6f}")
    print("\nThe ratio is the constant 1/3: the POVM shrinks every Bloch component")
    print("by the same factor, so only a completely unpolarized spin is unaffected.")


if __name__ == "__main__":
    main()
