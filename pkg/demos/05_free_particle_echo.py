"""When wavepacket spreading breaks coarse-grained decoherence.

A free packet of initial width 1 spreads to DX(t) = sqrt(1 + t^2). While
DX stays far below the instrument width Delta, coarse position histories
decohere; once DX reaches Delta the measurement back-action becomes
visible. The probe here is an echo: evolve forward for t, measure, evolve
backward for t, measure again. Undisturbed evolution refocuses exactly, so
any difference in the final statistics is pure measurement disturbance.
"""

import numpy as np

from decohist import (
    GridSystem,
    HistorySpec,
    Step,
    check_measurement_based,
    free_particle_unitary,
    gaussian_instrument,
    gaussian_wavepacket,
)


def main():
    grid = GridSystem(n_points=512, x_min=-128.0, x_max=128.0)
    packet = gaussian_wavepacket(grid, center=0.0, sigma=1.0)
    width = 16.0
    inst = gaussian_instrument(grid, width=width, centers=np.arange(-176.0, 176.1, 8.0))

    print(f"=== Echo test: Delta = {width}, packet sigma = 1 ===\n")
    print(f"  {'DX(t)':>6s}  {'t':>10s}  {'DX/Delta':>9s}  {'comparison residual':>20s}")
    residuals = {}
    for target in (2.0, 4.0, 8.0, 16.0):
        t = float(np.sqrt(target**2 - 1.0))
        forward = free_particle_unitary(grid, mass=1.0, time=t)
        backward = free_particle_unitary(grid, mass=1.0, time=-t)
        spec = HistorySpec(
            initial=packet,
            steps=(Step(forward, inst), Step(backward, inst)),
        )
        residual = check_measurement_based(spec).max_residual
        residuals[target] = residual
        print(f"  {target:6.1f}  {t:10.4f}  {target / width:9.3f}  {residual:20.3e}")

    ratio = residuals[16.0] / residuals[2.0]
    print(f"\n  residual at DX = Delta over residual at DX = Delta/8: {ratio:.1f}x")
    print("\nWhile the packet stays narrow the Gaussian effects barely pinch it and")
    print("the echo closes; by the time its width matches the instrument's, each")
    print("measurement localizes the packet enough to spoil the refocusing, and")
    print("the residual has grown nearly two orders of magnitude.")


if __name__ == "__main__":
    main()
