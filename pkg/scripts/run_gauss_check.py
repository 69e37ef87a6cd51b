"""The xi-bound on <ln(1 + e^z)> for a standard normal z, scanned over xi."""

import numpy as np

from sbnmf.experiments import expected_softplus_gauss, gauss_check, gauss_xi_objective

if __name__ == "__main__":
    g = gauss_check()
    print(f"argmin xi           {g.argmin:.6f}")
    print(f"bound at argmin     {g.minimum:.6f}")
    print(f"bound at xi = 0     {g.at_zero:.6f}")
    print(f"exact (quadrature)  {expected_softplus_gauss():.6f}  (reference {g.exact_reference})")
    print()
    print("xi     f(xi)")
    for x in np.linspace(0, 1, 11):
        print(f"{x:.1f}  {gauss_xi_objective(x):.6f}")
