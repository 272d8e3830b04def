"""Show what null-prompt calibration does to next-token scores.

Two candidate continuations: "paris" is plausible everywhere (high prior
probability under the blanked-out prompt), "vaduz" is rare in general but a
fine member of the target class.  The raw model prefers the common token;
subtracting mu times the prior log-probability rewards context-specific
evidence over global commonness, flipping the preference as mu grows.

The score is  s(t) = log p(t | prompt) - mu * log p_null(t | blanks),
a ranking score only: it is deliberately not renormalized.
"""

import numpy as np

from seedexpand import calibrate_step
from seedexpand.lm import TokenDistribution


def main():
    tokens = ["paris", "vaduz", "plus everything else"]
    # contextual distribution: the model slightly prefers the common entity
    dist = TokenDistribution(np.log(np.array([0.40, 0.25, 0.35])))
    # null-prompt prior: "paris" is likely even with all context blanked out
    prior = TokenDistribution(np.log(np.array([0.30, 0.02, 0.68])))

    print(f"{'token':<22} {'log p':>8} {'log p_null':>11}")
    for i, t in enumerate(tokens[:2]):
        print(f"{t:<22} {dist.logprobs[i]:>8.3f} {prior.logprobs[i]:>11.3f}")

    print(f"\n{'mu':>5} {'s(paris)':>10} {'s(vaduz)':>10}  preferred")
    for mu in (0.0, 0.25, 0.5, 0.75, 1.0):
        s = calibrate_step(dist, prior, mu)
        best = tokens[int(np.argmax(s[:2]))]
        print(f"{mu:>5.2f} {s[0]:>10.3f} {s[1]:>10.3f}  {best}")

    print("\nmu=0 keeps the raw model order; larger mu divides away the")
    print("prior, so the merely-common candidate loses its head start")


if __name__ == "__main__":
    main()
