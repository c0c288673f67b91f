"""Build a soliton, classify it, and look at the unstable eigenvalue.

Run:  python3 demos/01_soliton_and_spectrum.py
"""
import numpy as np

from dnlslab import (Form, Grid, SolitonParams, assemble_L, eigen_spectrum, mass, momentum,
                     soliton_profile, stability_report, stationary_residual)

p = SolitonParams.dnls(0.5, 1.0, 1.5)
print(f"DNLS b={p.b}, omega={p.omega}, c={p.c}: gamma={p.gamma:.4f}, h={p.h:.4f}")

# the profile is exact on the grid up to spectral differentiation error
g = Grid(140.0, 2048)
phi = soliton_profile(p, g)
print(f"stationary residual   {stationary_residual(phi, p, g):.2e}")
print(f"mass Q = {mass(phi, g):.6f}   momentum P = {momentum(phi, g):.6f}")

# GSS data: p(d'') from the parameter Hessian, n(H) from the Hessian operator
rep = stability_report(p, Grid(140.0, 1024))
print(f"p(d'') = {rep.p_count}, n(H) = {rep.n_count}  ->  {rep.verdict.value}")

# the linearized operator on a cheaper grid; rho agrees with the fine grid to 1e-8
spec = eigen_spectrum(assemble_L(p, Grid(80.0, 1024)))
print(f"lambda = {spec.lam.real:.7f} {spec.lam.imag:+.7f}i")
print(f"retained eigenvalues: {np.round(spec.retained, 7)}")
print(f"essential band starts at |Im| = h^2/4 = {spec.essential_band:.4f}")
print(f"eigenfunction tail rate alpha = {spec.alpha_fit:.3f} (h/2 = {p.h / 2:.3f})")

# same spectrum from the carrier-free operator
tilde = eigen_spectrum(assemble_L(p, Grid(80.0, 1024), Form.TILDE))
print(f"plain vs tilde: {abs(tilde.lam - spec.lam):.1e}")
