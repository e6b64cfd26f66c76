# Reference values for single-gate expectations (mpmath, 30 digits).
from mpmath import mp, quad, exp, sqrt, pi, tanh, inf, mpf, log

mp.dps = 30
sig = lambda x: 1 / (1 + exp(-x))


def E(g, mu, v):
    sd = sqrt(v)
    return quad(lambda z: g(mu + sd * z) * exp(-z * z / 2) / sqrt(2 * pi), [-inf, -5, 0, 5, inf])


# vanillaRNN, gate f = (sigma2 1.5, nu2 0.5, rho2 0.2, mu 0.3), Q_s = 0.4, R = 1
v = mpf('1.5') * mpf('0.4') + mpf('0.5') + mpf('0.2')
print('vanilla mu', E(sig, mpf('0.3'), v), 'q', E(lambda x: sig(x) ** 2, mpf('0.3'), v))

# GRU, f = (0.8, 0.5, 0.1, 0.2), r = (0.6, 0.4, 0.2, -0.3), r2 = (1.1, 0.7, 0.05, 0.1)
# state mu_s = 0.1, Q_s = 0.3, R = 1
mus, qs = mpf('0.1'), mpf('0.3')
vf = mpf('0.8') * qs + mpf('0.5') + mpf('0.1')
vr = mpf('0.6') * qs + mpf('0.4') + mpf('0.2')
g2 = E(lambda x: sig(x) ** 2, mpf('-0.3'), vr)
vr2 = mpf('1.1') * g2 * qs + mpf('0.7') + mpf('0.05')
a1 = E(sig, mpf('0.2'), vf)
a2 = E(lambda x: sig(x) ** 2, mpf('0.2'), vf)
t1 = E(tanh, mpf('0.1'), vr2)
t2 = E(lambda x: tanh(x) ** 2, mpf('0.1'), vr2)
print('gru mu', a1 * mus + (1 - a1) * t1, 'q', a2 * qs + 2 * (a1 - a2) * mus * t1 + (1 - 2 * a1 + a2) * t2)

print('sigmoid(5)^2', sig(5) ** 2, 'xi', -1 / log(sig(5) ** 2), 'xi at mu_f = 0', 1 / log(4))
