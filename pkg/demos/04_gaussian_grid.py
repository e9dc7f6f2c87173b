"""Gaussian quasi-projections of position on a grid.

Overlapping Gaussian effects of width Delta resolve position only down to
Delta, and performing-then-forgetting such a measurement multiplies each
coherence rho(x, x') by exp(-(x - x')^2 / 8 Delta^2). A wavepacket much
narrower than Delta is almost untouched, so coarse position histories of a
static system decohere to high accuracy even though nothing about the
dynamics singles out a pointer basis.
"""

import numpy as np

from decohist import (
    GridSystem,
    HistorySpec,
    Step,
    apply_channel,
    check_measurement_based,
    gaussian_instrument,
    gaussian_wavepacket,
    validate_unitary,
)


def main():
    grid = GridSystem(n_points=128, x_min=-64.0, x_max=64.0)
    width = 8.0
    centers = np.arange(-64.0 - 6 * width, 64.0 + 6 * width + 1e-9, width / 2)
    inst = gaussian_instrument(grid, width=width, centers=centers)

    print(f"=== Gaussian instrument: width {width}, {len(inst.labels)} centers ===\n")
    total = sum(e.matrix.conj().T @ e.matrix for e in inst.effects)
    print(f"  completeness residual: {np.max(np.abs(total - np.eye(grid.n_points))):.2e}")

    ones = np.full((grid.n_points, grid.n_points), 1.0, dtype=complex)
    damping = apply_channel(inst, ones).real
    x = grid.positions
    print("\n  damping factor vs separation (measured / analytic):")
    i = grid.n_points // 2
    for dj in (0, 4, 8, 16, 32):
        sep = x[i + dj] - x[i]
        analytic = np.exp(-(sep**2) / (8 * width**2))
        print(f"    |x - x'| = {sep:5.1f}:  {damping[i, i + dj]:.6f} / {analytic:.6f}")

    print("\n=== Static sweep: instrument width vs packet width ===\n")
    packet = gaussian_wavepacket(grid, center=0.0, sigma=2.0)
    ident = validate_unitary(np.eye(grid.n_points))
    print(f"  {'Delta/DX':>9s}  {'state disturbance':>18s}  {'comparison residual':>20s}")
    for ratio in (1, 2, 4, 8, 16):
        w = 2.0 * ratio
        c = np.arange(-64.0 - 6 * w, 64.0 + 6 * w + 1e-9, w / 2)
        sweep_inst = gaussian_instrument(grid, width=w, centers=c)
        delta = packet.matrix - apply_channel(sweep_inst, packet.matrix)
        disturbance = 0.5 * float(np.abs(np.linalg.eigvalsh(delta)).sum())
        spec = HistorySpec(
            initial=packet, steps=(Step(ident, sweep_inst), Step(ident, sweep_inst))
        )
        residual = check_measurement_based(spec).max_residual
        print(f"  {ratio:9d}  {disturbance:18.6f}  {residual:20.2e}")

    print("\nFor a static packet the populations never move, so the comparison")
    print("residual is numerically zero at every width; the trace-distance column")
    print("shows the real contraction of coherences falling off as the instrument")
    print("gets coarser, below one percent once Delta is 16x the packet width.")


if __name__ == "__main__":
    main()
