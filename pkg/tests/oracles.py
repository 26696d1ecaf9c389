"""Independent high-precision reference values (mpmath), kept out of the package."""
import mpmath as mp

# the terminating series cancels heavily for n ~ 200, |z| ~ 250
mp.mp.dps = 80


def h1(n, z):
    """Spherical Hankel function of the first kind from its terminating series."""
    z = mp.mpc(z)
    total = mp.mpc(0)
    for k in range(n + 1):
        total += (1j / (2 * z)) ** k * mp.factorial(n + k) / (mp.factorial(k) * mp.factorial(n - k))
    return (-1j) ** (n + 1) * mp.exp(1j * z) / z * total


def h1_prime(n, z):
    z = mp.mpc(z)
    if n == 0:
        return -h1(1, z)
    return h1(n - 1, z) - (n + 1) / z * h1(n, z)


def ratio(n, z):
    """``z h_n'(z) / h_n(z)``."""
    z = mp.mpc(z)
    return complex(z * h1_prime(n, z) / h1(n, z))


def ratio_recurrence(n, z):
    """Same ratio from the upward three-term recurrence at extended precision."""
    z = mp.mpc(z)
    h_prev = -1j * mp.exp(1j * z) / z
    h_cur = mp.exp(1j * z) * (-1 / z - 1j / z**2)
    if n == 0:
        return complex(z * (-h_cur) / h_prev)
    for k in range(1, n):
        h_prev, h_cur = h_cur, (2 * k + 1) / z * h_cur - h_prev
    return complex(z * (h_prev - (n + 1) / z * h_cur) / h_cur)


def gamma(n, s, c=1.0, R=1.0):
    z = 1j * mp.mpc(s) * R / c
    return complex(mp.mpc(ratio(n, z)) / R)


def scaled_hankel(n, z):
    """``exp(-i z) h_n(z)``."""
    return complex(h1(n, z) * mp.exp(-1j * mp.mpc(z)))


def Y(n, m, theta, phi):
    """Orthonormal spherical harmonic with the Condon-Shortley phase."""
    return complex(mp.spherharm(n, m, theta, phi))


def pulse_poly4(tau, a, b, amp=1.0):
    tau = mp.mpf(tau)
    if not (a < tau < b):
        return mp.mpf(0)
    return amp * ((tau - a) * (b - tau)) ** 4 / (mp.mpf(b - a) / 2) ** 8


def pulse_laplace(sigma, a, b, amp=1.0):
    """``int_a^b exp(sigma tau) f(tau) dtau`` for the poly4 pulse."""
    sigma = mp.mpc(sigma)
    return complex(mp.quad(lambda t: mp.exp(sigma * t) * pulse_poly4(t, a, b, amp), [a, (a + b) / 2, b]))
