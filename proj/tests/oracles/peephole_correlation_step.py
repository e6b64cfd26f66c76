# Reference value of one correlation-map step for the peephole LSTM (scipy adaptive quadrature).
import numpy as np
from scipy import integrate
sig = lambda x: 1/(1+np.exp(-x))
def E1(g, mu, v):
    sd = np.sqrt(v)
    return integrate.quad(lambda z: g(mu+sd*z)*np.exp(-z*z/2)/np.sqrt(2*np.pi), -12, 12, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
def E2(g, h, mu, v, c):
    sd = np.sqrt(v); s = np.sqrt(1-c*c)
    inner = lambda za: integrate.quad(lambda zb: h(mu+sd*(c*za+s*zb))*np.exp(-zb*zb/2)/np.sqrt(2*np.pi), -12, 12, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return integrate.quad(lambda za: g(mu+sd*za)*inner(za)*np.exp(-za*za/2)/np.sqrt(2*np.pi), -12, 12, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
th = {'i': (0.5,0.3,0.1,0.2), 'f': (0.7,0.2,0.1,1.0), 'r': (0.9,0.6,0.2,-0.1)}
mus, qs, cs, R, sz = 0.2, 0.5, 0.4, 1.0, 0.6
cross_s = mus**2 + cs*(qs-mus**2)
st = {}
for k,(s2,n2,r2,m) in th.items():
    var = s2*qs + n2*R + r2
    cov = s2*cross_s + n2*R*sz + r2
    st[k] = (m, var, cov/var)
mi, vi, ci = st['i']; mf, vf, cf = st['f']; mr, vr, cr = st['r']
Ef = E1(sig, mf, vf); Ef2 = E1(lambda x: sig(x)**2, mf, vf)
Ei = E1(sig, mi, vi); Ei2 = E1(lambda x: sig(x)**2, mi, vi)
Et = E1(np.tanh, mr, vr); Et2 = E1(lambda x: np.tanh(x)**2, mr, vr)
mu1 = Ef*mus + Ei*Et
q1 = Ef2*qs + 2*Ef*mus*Ei*Et + Ei2*Et2
Eff = E2(sig, sig, mf, vf, cf); Eii = E2(sig, sig, mi, vi, ci); Ett = E2(np.tanh, np.tanh, mr, vr, cr)
p = Eff*cross_s + 2*Ef*mus*Ei*Et + Eii*Ett
print(repr(mu1), repr(q1), repr((p-mu1**2)/(q1-mu1**2)))
