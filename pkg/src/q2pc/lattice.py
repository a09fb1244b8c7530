"""Trapdoor function stack for remote state preparation.

g is an injective LWE-style function with a gadget-matrix trapdoor,
K' = [A_bar ; R*A_bar + G] with G the base-2 gadget, and the 2-regular
function on top of it is

    f_k(s, e, c, d) = K'*s + e + c*y0 + d*(q/2, 0, ..., 0)^T  mod q

with public key k = (K', y0), y0 = g(s0, e0, d0), and hardcore predicate
h(s, e, c, d) = d.  For every image point the two preimages differ by the
hidden shift (s0, e0, 1, d0), so h(x) xor h(x') = d0 always: that bit is
the RSP basis bit theta2, known to the key holder from the start.

Errors live in an integer box [-sigma, sigma]^m (uniform), not a Gaussian:
the box makes the domain finite so 2-regularity is exhaustively checkable.
q is a power of two so q/2 is exact.  Security-parameter realism is a
non-goal; the profiles are sized for exact enumeration, not hardness.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .primitives import CoinSource

# q**n at or below this bound: invert may fall back to exhaustive search
# over s (works at any error radius when gadget margins are too tight).
_EXHAUSTIVE_S_BOUND = 1 << 12


class LatticeError(Exception):
    pass


class NotInImageError(LatticeError):
    """y has no preimage within the error box."""


class TwoRegularityError(NotInImageError):
    """y has preimages, but not exactly two (boundary collision)."""

    def __init__(self, count: int):
        super().__init__(f"image point has {count} preimages, expected 2")
        self.count = count


@dataclass(frozen=True)
class LatticeParams:
    n: int       # secret dimension
    m: int       # output dimension
    q: int       # modulus, power of two
    sigma0: int  # error box radius for e0 (may be 0: exact hidden shift)
    sigma: int   # error box radius for e

    def __post_init__(self):
        if self.q < 8 or self.q & (self.q - 1):
            raise LatticeError("q must be a power of two, at least 8")
        if self.n < 1 or self.m < self.n * self.log2q:
            raise LatticeError("need m >= n*log2(q)")
        if not (0 <= self.sigma0 <= self.sigma) or self.sigma < 1:
            raise LatticeError("need 0 <= sigma0 <= sigma, sigma >= 1")

    @property
    def log2q(self) -> int:
        return self.q.bit_length() - 1

    @property
    def gadget_rows(self) -> int:
        return self.n * self.log2q

    @property
    def e_bits(self) -> int:
        return max(1, math.ceil(math.log2(2 * self.sigma + 1)))

    @property
    def preimage_bits(self) -> int:
        """Width W of encode(): s limbs, offset-coded e, then c, then d."""
        return self.n * self.log2q + self.m * self.e_bits + 2

    @property
    def domain_size(self) -> int:
        return self.q ** self.n * (2 * self.sigma + 1) ** self.m * 4


@dataclass(frozen=True)
class Preimage:
    s: tuple  # in Z_q^n
    e: tuple  # in [-sigma, sigma]^m
    c: int
    d: int


@dataclass(frozen=True)
class PublicKey:
    params: LatticeParams
    K: np.ndarray   # m x n over Z_q
    y0: np.ndarray  # length m over Z_q

    def to_bytes(self) -> bytes:
        """Canonical layout: params as six u32 LE words? no -- params travel
        separately; here K row-major then y0, 8 bytes LE per entry."""
        body = b"".join(int(v).to_bytes(8, "little") for v in self.K.reshape(-1))
        body += b"".join(int(v).to_bytes(8, "little") for v in self.y0)
        return body

    @staticmethod
    def from_bytes(params: LatticeParams, data: bytes) -> "PublicKey":
        count = params.m * params.n + params.m
        if len(data) != 8 * count:
            raise LatticeError("public key byte length mismatch")
        vals = [int.from_bytes(data[8 * i:8 * i + 8], "little") for i in range(count)]
        K = np.array(vals[:params.m * params.n], dtype=np.int64).reshape(params.m, params.n)
        y0 = np.array(vals[params.m * params.n:], dtype=np.int64)
        return PublicKey(params, K, y0)


@dataclass(frozen=True)
class TrapdoorKeypair:
    public: PublicKey
    R: np.ndarray   # gadget trapdoor: K = [A_bar ; R A_bar + G]
    s0: tuple
    e0: tuple
    d0: int

    @property
    def params(self) -> LatticeParams:
        return self.public.params

    @property
    def hp(self) -> int:
        return self.d0

    @property
    def z0(self) -> tuple:
        return (self.s0, self.e0, self.d0)


def _gadget_matrix(params: LatticeParams) -> np.ndarray:
    k = params.log2q
    G = np.zeros((params.gadget_rows, params.n), dtype=np.int64)
    for j in range(params.n):
        for i in range(k):
            G[j * k + i, j] = 1 << i
    return G


def _half_vector(params: LatticeParams) -> np.ndarray:
    u = np.zeros(params.m, dtype=np.int64)
    u[0] = params.q // 2
    return u


def gen(params: LatticeParams, randomness: CoinSource) -> TrapdoorKeypair:
    w = params.gadget_rows
    slack = params.m - w
    A_bar = np.array([[randomness.randint(params.q) for _ in range(params.n)]
                      for _ in range(slack)], dtype=np.int64).reshape(slack, params.n)
    R = np.array([[randomness.randint(3) - 1 for _ in range(slack)]
                  for _ in range(w)], dtype=np.int64).reshape(w, slack)
    G = _gadget_matrix(params)
    K = np.vstack([A_bar, (R @ A_bar + G) % params.q])
    s0 = tuple(randomness.randint(params.q) for _ in range(params.n))
    e0 = tuple(randomness.randint(2 * params.sigma0 + 1) - params.sigma0
               for _ in range(params.m))
    d0 = randomness.bit()
    public = PublicKey(params, K, np.zeros(params.m, dtype=np.int64))
    y0 = eval_f(public, Preimage(s0, e0, 0, d0))
    public = PublicKey(params, K, y0)
    return TrapdoorKeypair(public, R, s0, e0, d0)


def is_two_regular(pk: PublicKey) -> bool:
    """Public exact check that every image point has exactly two preimages
    (enumerable profiles only)."""
    return two_regularity_report(pk)["irregular_fraction"] == 0.0


def gen_regular(params: LatticeParams, randomness: CoinSource,
                max_tries: int = 64) -> TrapdoorKeypair:
    """Rejection-sampled gen: random keys occasionally collide at desk-scale
    parameters, so honest parties redraw until the public 2-regularity check
    passes.  Deterministic in the coin stream, so a verifier rerunning it
    from the same coins lands on the same key.  Non-enumerable profiles skip
    the check (2-regularity is assumed there, as in the asymptotic setting)."""
    for _ in range(max_tries):
        kp = gen(params, randomness)
        if params.domain_size > 1 << 20 or is_two_regular(kp.public):
            return kp
    raise LatticeError("no 2-regular key within the retry budget")


def eval_f(key: PublicKey | TrapdoorKeypair, z: Preimage) -> np.ndarray:
    pk = key.public if isinstance(key, TrapdoorKeypair) else key
    p = pk.params
    if len(z.s) != p.n or len(z.e) != p.m:
        raise LatticeError("preimage dimension mismatch")
    if any(abs(v) > p.sigma for v in z.e):
        raise LatticeError("error outside box")
    s = np.array(z.s, dtype=np.int64)
    e = np.array(z.e, dtype=np.int64)
    return (pk.K @ s + e + z.c * pk.y0 + z.d * _half_vector(p)) % p.q


def hardcore(z: Preimage) -> int:
    return z.d


def _centered(v: np.ndarray, q: int) -> np.ndarray:
    """Lift Z_q to the centered representatives [-q/2, q/2)."""
    v = v % q
    return np.where(v >= q // 2, v - q, v)


def _gadget_margin(kp: TrapdoorKeypair) -> int:
    """Worst-case infinity norm of T e for e in the box, T = [-R | I]."""
    row_l1 = 1 + (np.sum(np.abs(kp.R), axis=1).max() if kp.R.size else 0)
    return int(kp.params.sigma * row_l1)


@lru_cache(maxsize=8)
def _s_table(pk_bytes: bytes, n, m, q, sigma0, sigma) -> np.ndarray:
    """K @ s for every s in Z_q^n, columns in lexicographic s order."""
    params = LatticeParams(n, m, q, sigma0, sigma)
    pk = PublicKey.from_bytes(params, pk_bytes)
    S = np.array(list(itertools.product(range(q), repeat=n)), dtype=np.int64)
    return (S, (pk.K @ S.T) % q)


def _decode_g(kp: TrapdoorKeypair, t: np.ndarray) -> list[tuple[tuple, tuple]]:
    """All (s, e) with K s + e = t mod q and e inside the box."""
    p = kp.params
    sols = []
    # gadget decoding is only sound when T e cannot flip a limb's rounding
    if _gadget_margin(kp) <= p.q // 4 - 1:
        w = p.gadget_rows
        T = np.hstack([-kp.R, np.eye(w, dtype=np.int64)])
        v = (T @ t) % p.q
        k = p.log2q
        powers = np.array([1 << i for i in range(k)], dtype=np.int64)
        cands = np.arange(p.q, dtype=np.int64)
        s = []
        for j in range(p.n):
            limbs = v[j * k:(j + 1) * k]
            errs = np.abs(_centered(limbs[None, :] - cands[:, None] * powers[None, :], p.q))
            s.append(int(np.argmin(errs.max(axis=1))))
        e = _centered(t - kp.public.K @ np.array(s, dtype=np.int64), p.q)
        if np.all(np.abs(e) <= p.sigma):
            sols.append((tuple(s), tuple(int(x) for x in e)))
        return sols
    if p.q ** p.n > _EXHAUSTIVE_S_BOUND:
        raise LatticeError("parameters admit neither gadget nor exhaustive decoding")
    S, KS = _s_table(kp.public.to_bytes(), p.n, p.m, p.q, p.sigma0, p.sigma)
    E = _centered(t[:, None] - KS, p.q)
    hits = np.flatnonzero(np.all(np.abs(E) <= p.sigma, axis=0))
    for idx in hits:
        sols.append((tuple(int(x) for x in S[idx]), tuple(int(x) for x in E[:, idx])))
    return sols


def invert(kp: TrapdoorKeypair, y: np.ndarray) -> tuple[Preimage, Preimage]:
    """Both preimages of y under f_k, c=0 branch first.

    Raises NotInImageError when none exist, TwoRegularityError when the
    count is not exactly 2 (boundary collision -- reported, never hidden).
    """
    p = kp.params
    y = np.asarray(y, dtype=np.int64) % p.q
    half = _half_vector(p)
    sols: list[Preimage] = []
    for c in (0, 1):
        for d in (0, 1):
            t = (y - c * kp.public.y0 - d * half) % p.q
            for s, e in _decode_g(kp, t):
                sols.append(Preimage(s, e, c, d))
    if not sols:
        raise NotInImageError("no preimage within the error box")
    if len(sols) != 2:
        raise TwoRegularityError(len(sols))
    sols.sort(key=lambda z: z.c)
    return sols[0], sols[1]


def encode(params: LatticeParams, z: Preimage) -> int:
    """Canonical preimage bit encoding, LSB first: s limbs (log2 q bits each,
    little-endian), then each e coordinate offset by sigma (e_bits each),
    then c, then d.  Both parties must agree: theta1 depends on the inner
    product <w, encode(x) xor encode(x')>."""
    p = params
    out = 0
    pos = 0
    for sv in z.s:
        out |= (int(sv) % p.q) << pos
        pos += p.log2q
    for ev in z.e:
        out |= (int(ev) + p.sigma) << pos
        pos += p.e_bits
    out |= (z.c & 1) << pos
    pos += 1
    out |= (z.d & 1) << pos
    return out


def enumerate_domain(params: LatticeParams):
    ebox = range(-params.sigma, params.sigma + 1)
    for s in itertools.product(range(params.q), repeat=params.n):
        for e in itertools.product(ebox, repeat=params.m):
            for c in (0, 1):
                for d in (0, 1):
                    yield Preimage(s, e, c, d)


@lru_cache(maxsize=8)
def _image_census_cached(pk_bytes: bytes, n, m, q, sigma0, sigma):
    params = LatticeParams(n, m, q, sigma0, sigma)
    pk = PublicKey.from_bytes(params, pk_bytes)
    census: dict[tuple, list[Preimage]] = {}
    for z in enumerate_domain(params):
        y = tuple(int(v) for v in eval_f(pk, z))
        census.setdefault(y, []).append(z)
    return census


def image_census(pk: PublicKey) -> dict[tuple, list[Preimage]]:
    """Exhaustive map image point -> preimage list (enumerable profiles only).

    This is simulation plumbing, not a trapdoor: it only needs the public
    key, and the domain must be small enough to walk."""
    p = pk.params
    if p.domain_size > 1 << 20:
        raise LatticeError("domain too large to enumerate")
    return _image_census_cached(pk.to_bytes(), p.n, p.m, p.q, p.sigma0, p.sigma)


def two_regularity_report(pk: PublicKey) -> dict:
    """Exact preimage-count histogram over the image at enumerable profiles."""
    census = image_census(pk)
    counts: dict[int, int] = {}
    for pre in census.values():
        counts[len(pre)] = counts.get(len(pre), 0) + 1
    image_size = len(census)
    bad = sum(v for k, v in counts.items() if k != 2)
    return {
        "image_size": image_size,
        "count_histogram": counts,
        "irregular_fraction": bad / image_size if image_size else 0.0,
    }
