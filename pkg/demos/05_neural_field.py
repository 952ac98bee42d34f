"""
A delayed neural field with diffusion
=====================================

Two neuron populations diffuse on (0, 1), interact through delayed tanh
coupling and are driven by 2pi-periodic inputs. When the coupling Lipschitz
constant is below 1/(kappa0 M), every solution is drawn to one periodic orbit.
"""

import math

from delaycert import pipelines
from delaycert.sectorial import SectorialParams, kappa0, kappa0_closed_form, sectorial_thresholds

# The decay constant of the analytic semigroup: power singularity plus future tail.
for alpha in (0.0, 0.25, 0.5):
    print(f"kappa0(alpha={alpha}, beta=1): quadrature {kappa0(alpha, 1.0):.7f}, "
          f"Gamma form {kappa0_closed_form(alpha, 1.0):.7f}")
print(f"sqrt(pi) + 1 = {math.sqrt(math.pi) + 1:.7f}")

v = sectorial_thresholds(SectorialParams(0.5, 1.0, 2.0, 0.2), "full")
print(f"M=2, L=0.2: equilibrium threshold {v.thresholds['equilibrium']:.4f} -> exists {v.equilibrium_exists}")

exp = pipelines.neural_experiment()
d = exp.demo
print(f"discretised Laplacian: beta = {d.params.beta:.4f}, coupling L = {d.params.L:.4f}")
print(f"threshold 1/(kappa0 M) = {d.verdict.thresholds['equilibrium']:.4f}, GEAS {d.verdict.geas}")
print(f"gap between two histories after transient: {exp.pair_gap:.2e}")
print(f"periodicity defect |x(t + 2pi) - x(t)|: {exp.period_gap:.2e}")
