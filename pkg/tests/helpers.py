import numpy as np


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_hermitian(rng, n):
    a = random_complex(rng, n, n)
    return (a + a.conj().T) / 2


def ball_draws(rng, n, shape, radius):
    """n complex arrays with Frobenius norm at most ``radius``; the first half sit on the sphere"""
    z = random_complex(rng, n, *shape)
    axes = tuple(range(1, z.ndim))
    z /= np.sqrt(np.sum(np.abs(z) ** 2, axis=axes, keepdims=True))
    scale = np.ones(n)
    dim = 2 * int(np.prod(shape))
    scale[n // 2:] = rng.uniform(size=n - n // 2) ** (1.0 / dim)
    return radius * z * scale.reshape((n,) + (1,) * len(shape))
