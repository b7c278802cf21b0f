"""
Wetting versus dewetting
========================

With few atoms the film either spreads into a covering layer or gathers
into an island.  Which one wins depends on whether exposing the substrate
costs more than exposing the film.
"""
from filmlattice.discrete import MaterialParams
from filmlattice.harness import wetting_study

for gamma_s, label in [(2.0, "wetting"), (0.5, "dewetting")]:
    mat = MaterialParams(1.0, 1.0, 1.0, gamma_s)
    out = wetting_study(4, 4, mat, seed=0)
    winner = "layer" if out["layer"] < out["island"] else "island"
    print(f"{label:9s} layer {out['layer']:.3f}  island {out['island']:.3f}  -> {winner}")
    print(f"          annealed {out['annealed']:.3f}  profile {out['annealed_profile']}")
