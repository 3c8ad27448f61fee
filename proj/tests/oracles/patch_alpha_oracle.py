"""Independent oracle for the rectangular patch normalization constant.

alpha^2 = 4*pi / I,  I = int_0^pi int_{-pi/2}^{pi/2} (sinc(X) sinc(Z))^2 sin^3(theta) dphi dtheta
X = (pi h / lambda) sin(theta) cos(phi),  Z = (pi W / lambda) cos(theta)

Evaluated with mpmath tanh-sinh quadrature at 30 significant digits.
"""
import mpmath as mp

mp.mp.dps = 30
C = mp.mpf(299792458)


def sinc(x):
    return mp.mpf(1) if x == 0 else mp.sin(x) / x


def alpha_sq(h, w, lam):
    a = mp.pi * h / lam
    b = mp.pi * w / lam

    def inner(theta):
        st = mp.sin(theta)
        sz = sinc(b * mp.cos(theta)) ** 2
        f = lambda phi: sinc(a * st * mp.cos(phi)) ** 2
        return 2 * mp.quad(f, [0, mp.pi / 2]) * sz * st ** 3

    integral = mp.quad(inner, [0, mp.pi / 2, mp.pi])
    return 4 * mp.pi / integral


if __name__ == "__main__":
    f = mp.mpf(2e9)
    lam = C / f
    h = mp.mpf("0.001588")
    eps_r = mp.mpf("10.2")
    w = (C / (2 * f)) * mp.sqrt(2 / (eps_r + 1))
    a2 = alpha_sq(h, w, lam)
    print("lambda      =", mp.nstr(lam, 20))
    print("W           =", mp.nstr(w, 20))
    print("alpha^2     =", mp.nstr(a2, 20))
    # boresight gain: theta = pi/2, phi = 0 -> alpha^2 sinc^2(pi h / lambda)
    print("G(pi/2, 0)  =", mp.nstr(a2 * sinc(mp.pi * h / lam) ** 2, 20))
    print("alpha^2(tiny)=", mp.nstr(alpha_sq(mp.mpf("1e-9"), mp.mpf("1e-9"), lam), 20))
