"""Worst-case interior-point operation counts of the four convex subproblems.

Each count is ``sqrt(barrier parameter) * n * (n^2 + n * sum_j k_j^2 + sum_j k_j^3)``
where ``n`` is the number of decision variables and the ``k_j`` are the sizes of
the LMI blocks; second-order cones of size ``k`` contribute ``n k^2`` only.
"""

from dataclasses import asdict, dataclass
from typing import Dict

import numpy as np


@dataclass(frozen=True)
class BlockSizes:
    a1: int
    a2: int
    a3: int
    a4: int
    a5: int
    a6: int
    v1: int
    n1: int
    n2: int
    n3: int
    n4: int

    @classmethod
    def for_dims(cls, N: int, M: int, K: int) -> "BlockSizes":
        if min(N, M, K) < 1:
            raise ValueError("N, M and K must be positive")
        return cls(
            a1=M * N + N + 1,
            a2=2 * M * N + 1,
            a3=2 * N + K,
            a4=2 * M + 1,
            a5=N,
            a6=M,
            v1=(M + N) * (M + N + 1),
            n1=N * K,
            n2=2 * M,
            n3=N * K,
            n4=2 * M,
        )


@dataclass(frozen=True)
class ComplexityEstimate:
    N: int
    M: int
    K: int
    bounded_w: float
    bounded_theta: float
    statistical_w: float
    statistical_v: float
    sizes: BlockSizes

    def to_dict(self) -> Dict[str, float]:
        out = {
            "N": self.N,
            "M": self.M,
            "K": self.K,
            "bounded_w": self.bounded_w,
            "bounded_theta": self.bounded_theta,
            "statistical_w": self.statistical_w,
            "statistical_v": self.statistical_v,
        }
        out.update(asdict(self.sizes))
        return out


def estimate(N: int, M: int, K: int) -> ComplexityEstimate:
    s = BlockSizes.for_dims(N, M, K)
    # one signal, interference and noise LMI per user plus the two power LMIs
    f1 = K * (s.a1 + s.a3 + s.a4) + 2 * s.a2
    f2 = K * (s.a1 ** 2 + s.a3 ** 2 + s.a4 ** 2) + 2 * s.a2 ** 2
    f3 = K * (s.a1 ** 3 + s.a3 ** 3 + s.a4 ** 3) + 2 * s.a2 ** 3

    bounded_w = np.sqrt(f1) * s.n1 * (s.n1 ** 2 + s.n1 * f2 + f3)
    bounded_theta = np.sqrt(f1 + 4 * M) * s.n2 * (s.n2 ** 2 + s.n2 * f2 + f3 + 2 * s.n2 * M)

    def lifted(a: int, n: int) -> float:
        return float(
            np.sqrt(2 * K * (a + 1)) * n * (n ** 2 + 2 * n * K * a ** 2 + 2 * K * a ** 3 + n * K * s.v1 ** 2)
        )

    return ComplexityEstimate(
        N=N,
        M=M,
        K=K,
        bounded_w=float(bounded_w),
        bounded_theta=float(bounded_theta),
        statistical_w=lifted(s.a5, s.n3),
        statistical_v=lifted(s.a6, s.n4),
        sizes=s,
    )
