"""First eigenvalue of the Yamabe operator with Robin boundary condition.

Run: python3 notebooks/03_yamabe.py

On the flat unit 3-ball the exact value is 8 k^2 with tan k = 2 k. The
finite-volume scheme converges at second order; the eigenfunction then
serves as a conformal factor giving scal > 0 and a minimal boundary.
"""
from collarflex import yamabe as ym

oracle = ym.flatball_oracle(3)
print(f"oracle lambda_1 = {oracle:.10f}")
lams = []
for N in (128, 256, 512, 1024, 2048):
    lams.append(ym.first_eigenpair(ym.assemble(ym.flat_ball(), 3, N)).lam)
    ratio = f"  step ratio {(lams[-3] - lams[-2]) / (lams[-2] - lams[-1]):.2f}" if len(lams) >= 3 else ""
    print(f"N = {N:5d}: lambda_1 = {lams[-1]:.10f}  error {lams[-1] - oracle:+.2e}{ratio}")

for text in ("flatball", "cap:1.0", "annulus:0.5,1", "product:1,1"):
    out, p, pair, rep = ym.solve(ym.parse_profile(text), 3, 2048)
    print(f"{text:15s} lambda_1 {pair.lam:10.6f}  H_hat {rep.H_hat:+.1e}  min scal_hat {rep.min_scal_hat:9.4f}  pass {out['pass']}")
