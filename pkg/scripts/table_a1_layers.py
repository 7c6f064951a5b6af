"""Print the layer plan and CNOT counts of every preset lattice."""
from multiqida.ansatz import cnot_count, compose
from multiqida.cli import Pipeline
from multiqida.config import load_config, preset_names


def main():
    for name in preset_names():
        cfg = load_config(name)
        plan = Pipeline(cfg.with_overrides(out=f"results/{name}")).plan()
        counts = {a: cnot_count(compose(a, plan, cfg.lattice.n_sites)) for a in cfg.ansatze}
        print(f"== {name}  " + "  ".join(f"{a}={c}" for a, c in counts.items()))
        for k, layer in enumerate(plan.qida_layers, 1):
            print(f"  layer {k}: " + ", ".join(f"[{i},{j}]" for i, j in sorted(layer)))


if __name__ == "__main__":
    main()
