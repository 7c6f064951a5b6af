"""Exact, DMRG and Neel energies for every preset lattice."""
import time

from multiqida import exact, mps
from multiqida.config import load_config, preset_names
from multiqida.lattice import build_heisenberg, neel_energy


def main():
    print(f"{'system':<16}{'E_exact':>12}{'E_dmrg(chi=64)':>16}{'|diff|':>10}{'E_neel':>8}{'time':>8}")
    for name in preset_names():
        cfg = load_config(name)
        h = build_heisenberg(cfg.lattice)
        e0, _ = exact.exact_ground_state(h)
        t = time.perf_counter()
        res = mps.dmrg(mps.build_mpo(h), chi=64, seed=0)
        dt = time.perf_counter() - t
        print(f"{name:<16}{e0:>12.6f}{res.energy:>16.6f}{abs(res.energy - e0):>10.1e}"
              f"{neel_energy(cfg.lattice):>8.2f}{dt:>7.1f}s")


if __name__ == "__main__":
    main()
