"""Open-system dynamics: master equation against quantum-jump trajectories.

A strongly driven two-node chain with cavity decay and spontaneous emission
is integrated both ways: the dense Lindblad master equation, and 500
MCWF trajectories with a fixed seed.  The trajectory averages land within
their standard-error bands around the master-equation curves.
"""

import numpy as np

from crwsim import (
    ChainParams,
    TimeGrid,
    build_hamiltonian,
    build_lindblad,
    evolve_lindblad,
    evolve_mcwf,
    initial_transfer_state,
    standard_observables,
)

p = ChainParams(n=2, delta=1.0, j_c=0.5, omega=0.3, gamma=0.02, kappa=0.02)
h = build_hamiltonian(p)
jumps = build_lindblad(p)
obs = standard_observables(p)
grid = TimeGrid(0.0, 60.0, 120)
psi0 = initial_transfer_state(p, 1 / np.sqrt(2), 1 / np.sqrt(2))

me = evolve_lindblad(h, jumps, psi0.to_density(), grid, obs)
mc = evolve_mcwf(h, jumps, psi0, grid, n_traj=500, seed=7, observables=obs)

print(f"{'observable':<14}{'max |MCWF - ME|':>18}{'max stderr':>14}")
for name in obs:
    dev = np.abs(np.asarray(mc.series[name]) - np.asarray(me.series[name])).max()
    sem = np.asarray(mc.stderr[name]).max()
    print(f"{name:<14}{dev:>18.5f}{sem:>14.5f}")

rho = me.final_state
print(f"\nmaster equation final state: trace = {np.trace(rho).real:.9f}, "
      f"min eigenvalue = {np.linalg.eigvalsh(rho).min():.2e}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for i, name in enumerate(["pop_one_1", "pop_excited", "pop_photon"]):
        ax.plot(me.times, me.series[name], f"C{i}", label=f"{name} (ME)")
        ax.errorbar(mc.times[::6], np.asarray(mc.series[name])[::6],
                    yerr=np.asarray(mc.stderr[name])[::6], fmt=f"C{i}.", ms=3, lw=0.8)
    ax.set_xlabel("t [1/g]")
    ax.set_ylabel("population")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig("demo03_open_system.svg")
    print("wrote demo03_open_system.svg")
except ImportError:
    pass
