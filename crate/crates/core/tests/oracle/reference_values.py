"""High-precision reference values frozen into the core test suite.

Run with `python3 reference_values.py`; requires mpmath. Every number printed
here is computed independently of the Rust implementation (50-digit
arithmetic, direct summation, closed forms).
"""
import mpmath as mp

mp.mp.dps = 50


def q(x):
    return mp.erfc(mp.mpf(x) / mp.sqrt(2)) / 2


def dead_time_pmf(lam, tau):
    lam, tau = mp.mpf(lam), mp.mpf(tau)
    big_m = int(mp.floor(1 / tau)) + 1
    c = lam * mp.e ** (-lam * tau)
    out = []
    for n in range(big_m + 1):
        s = mp.mpf(0)
        for m in range(big_m - n + 1):
            k = n + m
            base = (1 - (k - 1) * tau) * c
            s += (-1) ** m / (mp.factorial(n) * mp.factorial(m)) * (base ** k if k else 1)
        out.append(s)
    return out


print("# gaussian tail")
for x in ["-8", "-3", "-1", "0", "0.5", "1", "2", "3.5", "4.5", "6", "8", "10", "15", "20", "30", "37"]:
    print(f"Q({x}) = {mp.nstr(q(x), 20)}")

print("# dead-time law")
for lam, tau, idx in [(10, "0.01", [0, 5, 9, 15]), (50, "0.01", [0, 20, 30, 40]), (3, "0.1", [0, 2, 5, 11])]:
    p = dead_time_pmf(lam, tau)
    mean = sum(i * v for i, v in enumerate(p))
    var = sum(i * i * v for i, v in enumerate(p)) - mean ** 2
    print(f"lam={lam} tau={tau} M={len(p)-1} sum={mp.nstr(sum(p), 20)} mean={mp.nstr(mean, 20)} var={mp.nstr(var, 20)}")
    for i in idx:
        print(f"  P({i}) = {mp.nstr(p[i], 20)}")

print("# finite-rate moments")
lam, tau, T = mp.mpf(10), mp.mpf("0.005"), mp.mpf("0.01")
m1 = mp.e ** (-lam * tau) * (1 - mp.e ** (-lam * tau)) / T
print("exact T>tau mean (10, 0.005, 0.01) =", mp.nstr(m1, 20))
print("second moment =", mp.nstr(m1 + m1 ** 2 * (1 + 2 * T ** 2 - 3 * T), 20))
lam, tau, T = mp.mpf(10), mp.mpf("0.02"), mp.mpf("0.01")
m2 = mp.e ** (-lam * tau) * (1 - mp.e ** (-lam * T)) / T
alpha, delta = 2, mp.mpf(0)
s2 = m2 + m2 ** 2 * ((1 - (alpha + 1) * T) * (1 - (alpha + 2) * T)
                      + 2 * T * (1 - (alpha + 1) * T) * (1 - mp.e ** (-lam * (T - delta))) / (1 - mp.e ** (-lam * T)))
print("exact T<=tau mean (10, 0.02, 0.01) =", mp.nstr(m2, 20), " var =", mp.nstr(s2 - m2 ** 2, 20))
lam, tau, T = mp.mpf(10), mp.mpf("0.035"), mp.mpf("0.01")
alpha, delta = 3, mp.mpf("0.005")
m3 = mp.e ** (-lam * tau) * (1 - mp.e ** (-lam * T)) / T
s3 = m3 + m3 ** 2 * ((1 - (alpha + 1) * T) * (1 - (alpha + 2) * T)
                      + 2 * T * (1 - (alpha + 1) * T) * (1 - mp.e ** (-lam * (T - delta))) / (1 - mp.e ** (-lam * T)))
print("exact T<=tau mean (10, 0.035, 0.01) =", mp.nstr(m3, 20), " var =", mp.nstr(s3 - m3 ** 2, 20))
print("approx 10 e^-0.25 =", mp.nstr(10 * mp.e ** (-mp.mpf("0.25")), 20))

print("# shot + thermal, lam=1/20, T=tau=0.01, sigma=0.2, sigma0=0.02, xi=0.3")
T = mp.mpf("0.01")
qq, pp = q((1 - mp.mpf("0.3")) / mp.mpf("0.2")), q(mp.mpf("0.3") / mp.mpf("0.02"))
nh = {}
for lam in (1, 20):
    lp = (1 - qq) * lam
    nh[lam] = mp.e ** (-lp * T) * (1 - pp) * (1 - mp.e ** (-lp * T) * (1 - pp)) / T
    print(f"  Nhat({lam}) = {mp.nstr(nh[lam], 20)}")
big_n = 1 / (3 * T)
p1, p0 = 3 * T * nh[20], 3 * T * nh[1]
a = mp.log((1 - p0) / (1 - p1))
b = mp.log(p1 / p0)
print("  threshold real =", mp.nstr(big_n * a / (a + b), 20), " floor =", int(mp.floor(big_n * a / (a + b))))

print("# KL")
n, p0, p1 = 100, mp.mpf("0.01"), mp.mpf("0.05")
print("D01 =", mp.nstr(n * (p0 * mp.log(p0 / p1) + (1 - p0) * mp.log((1 - p0) / (1 - p1))), 20))
print("D10 =", mp.nstr(n * (p1 * mp.log(p1 / p0) + (1 - p1) * mp.log((1 - p1) / (1 - p0))), 20))
