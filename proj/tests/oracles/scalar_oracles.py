"""Closed-form scalar oracles evaluated in extended precision (mpmath)."""
import mpmath as mp

mp.mp.dps = 40

# EESM: gamma_eff = -beta * ln(mean(exp(-gamma/beta)))
g = [mp.mpf(1), mp.mpf(2)]
beta = mp.mpf("1.55")
eesm = -beta * mp.log(sum(mp.exp(-x / beta) for x in g) / len(g))
print("eesm([1,2], 1.55) =", mp.nstr(eesm, 20))

# Capacity mapping for the same profile
cap = beta * (mp.power(2, sum(mp.log(1 + x / beta, 2) for x in g) / len(g)) - 1)
print("capacity([1,2], 1.55) =", mp.nstr(cap, 20))

# Thermal noise power k_B T BW 10^(NF/10)
kb = mp.mpf("1.380649e-23")
n0 = kb * 300 * mp.mpf(2e5)
print("N0(NF=0, 300K, 200kHz) =", mp.nstr(n0, 20))
print("10^0.9 =", mp.nstr(mp.power(10, mp.mpf("0.9")), 20))

# Omni LOS amplitude at r = 10 m, f = 2 GHz
lam = mp.mpf(299792458) / mp.mpf(2e9)
print("omni |g| at 10 m =", mp.nstr(lam / (4 * mp.pi * 10), 20))

# Rayleigh path loss at r = 1 m
print("beta(1 m) =", mp.nstr(mp.power(10, mp.mpf("-3.05")), 20))

# Uncoded BPSK BER Q(sqrt(2 gamma)) at 0, 3, 6 dB
for db in (0, 3, 6):
    gam = mp.power(10, mp.mpf(db) / 10)
    print(f"Q(sqrt(2g)) @ {db} dB =", mp.nstr(mp.erfc(mp.sqrt(gam)) / 2, 20))
