"""Explore the latent space around a handful of prompt embeddings.

Shows the three candidate-generation strategies on raw vectors, then runs
the full candidate generator and prints each candidate's provenance.
"""

import numpy as np

from lpo import ExplorationPolicy, extrapolate, generate_candidates, interpolate, perturb

np.set_printoptions(precision=3, suppress=True)


def main():
    rng = np.random.default_rng(0)
    seed_a = rng.standard_normal(8)
    seed_b = rng.standard_normal(8)

    print("seed A:", seed_a)
    print("seed B:", seed_b)
    print()
    print("midpoint blend        :", interpolate(seed_a, seed_b, 0.5))
    print("A-leaning blend (0.8) :", interpolate(seed_a, seed_b, 0.8))
    print("past A (weight 1.3)   :", extrapolate(seed_a, seed_b, 1.3))
    print("behind B (weight -0.3):", extrapolate(seed_a, seed_b, -0.3))
    print("A + noise (sigma 0.2) :", perturb(seed_a, 0.2, noise_seed=7))
    print()

    seeds = [(f"seed-{i}", rng.standard_normal(8)) for i in range(5)]
    policy = ExplorationPolicy(
        strategy_mix={"interpolate": 0.6, "extrapolate": 0.2, "perturb": 0.2},
        rng_seed=42,
        candidate_count=10,
    )
    print("10 candidates from 5 seeds (mixed strategies):")
    for cand in generate_candidates(seeds, policy):
        prov = cand.provenance
        if prov.kind == "perturb":
            detail = f"parent={prov.parents[0]} sigma={prov.sigma:.3f}"
        else:
            detail = f"parents={'+'.join(prov.parents)} weight={prov.weight:.3f}"
        print(f"  {cand.id}  {prov.kind:<11} {detail}")
        print(f"           -> {cand.embedding}")


if __name__ == "__main__":
    main()
