"""Lattices, quantization, modulo arithmetic, dithering, and nested pairs.

Three concrete families are supported:

* ``zn``             -- the integer lattice Z^n,
* ``scaled_zn``      -- s Z^n,
* ``construction_a`` -- beta (C + p Z^n) for a linear code C over Z_p.

Z^n-family quantization is componentwise rounding; construction-A
quantization is exact closest-point search by sphere enumeration
(Fincke-Pohst with Schnorr-Euchner ordering) over a triangularized basis.
"""
from __future__ import annotations

import math

import numpy as np

EQ_TOL = 1e-9


class LatticeError(ValueError):
    pass


class EnumerationError(RuntimeError):
    """Closest-point search exhausted its radius budget."""


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


def _rref_mod_p(gen: np.ndarray, p: int):
    """Row-reduce an integer matrix over Z_p; return (rref, pivot columns)."""
    m = np.array(gen, dtype=np.int64) % p
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        pivot = None
        for i in range(r, rows):
            if m[i, c] % p != 0:
                pivot = i
                break
        if pivot is None:
            continue
        m[[r, pivot]] = m[[pivot, r]]
        inv = pow(int(m[r, c]), p - 2, p)  # p prime
        m[r] = (m[r] * inv) % p
        for i in range(rows):
            if i != r and m[i, c] % p != 0:
                m[i] = (m[i] - m[i, c] * m[r]) % p
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return m, pivots


def _round_ties_down(x):
    """Nearest integer; exact halfway cases go to the smaller integer."""
    return np.ceil(np.asarray(x, dtype=float) - 0.5)


class Lattice:
    """Immutable lattice description plus quantization services."""

    def __init__(self, kind, dimension, scale=1.0, p=None, gen=None):
        if dimension < 1:
            raise LatticeError("dimension must be positive")
        if scale <= 0:
            raise LatticeError("scale must be positive")
        self.kind = kind
        self.dimension = int(dimension)
        self.scale = float(scale)
        self.p = p
        self.gen = None
        self.k = 0
        self._basis = None
        self._qr = None
        if kind == "construction_a":
            gen = np.array(gen, dtype=np.int64)
            if gen.ndim != 2 or gen.shape[1] != dimension:
                raise LatticeError("generator must be k x n")
            if not _is_prime(int(p)):
                raise LatticeError(f"p={p} is not prime")
            self.p = int(p)
            rref, pivots = _rref_mod_p(gen, self.p)
            if len(pivots) != gen.shape[0]:
                raise LatticeError("code generator is rank-deficient mod p")
            self.gen = gen % self.p
            self.k = gen.shape[0]
            self._basis = self._construction_a_basis(rref, pivots)
        elif kind not in ("zn", "scaled_zn"):
            raise LatticeError(f"unknown lattice kind {kind!r}")

    def _construction_a_basis(self, rref, pivots):
        # rows: lifted RREF codewords, then p e_j for non-pivot columns j
        n, k, p = self.dimension, self.k, self.p
        basis = np.zeros((n, n))
        basis[:k] = rref[:k]
        free = [j for j in range(n) if j not in pivots]
        for i, j in enumerate(free):
            basis[k + i, j] = p
        return basis * self.scale

    # -- geometry ---------------------------------------------------------

    @property
    def basis(self) -> np.ndarray:
        """Row-vector basis; lattice points are integer combinations of rows."""
        if self._basis is None:
            self._basis = np.eye(self.dimension) * self.scale
        return self._basis

    def log_volume(self) -> float:
        """ln Vol(V); kept in log space to survive large n."""
        if self.kind == "construction_a":
            return self.dimension * math.log(self.scale) + (self.dimension - self.k) * math.log(self.p)
        return self.dimension * math.log(self.scale)

    def _triangular(self):
        """Cached QR of the basis transpose with positive diagonal."""
        if self._qr is None:
            q, r = np.linalg.qr(self.basis.T)
            sign = np.sign(np.diag(r))
            sign[sign == 0] = 1.0
            q = q * sign
            r = sign[:, None] * r
            self._qr = (q, r)
        return self._qr

    def _check_dim(self, s):
        s = np.asarray(s, dtype=float)
        if s.shape != (self.dimension,):
            raise LatticeError(f"expected vector of length {self.dimension}, got shape {s.shape}")
        return s

    def codewords(self) -> np.ndarray:
        """All p^k codewords of the underlying code (construction-A only)."""
        if self.kind != "construction_a":
            raise LatticeError("codewords defined for construction-A lattices only")
        idx = np.arange(self.p ** self.k)
        digits = np.empty((len(idx), self.k), dtype=np.int64)
        for j in range(self.k):
            digits[:, j] = (idx // self.p ** j) % self.p
        return (digits @ self.gen) % self.p


def nearest_point(lat: Lattice, s) -> np.ndarray:
    """Q_V(s): the lattice point whose Voronoi cell contains s."""
    s = lat._check_dim(s)
    if lat.kind in ("zn", "scaled_zn"):
        return _round_ties_down(s / lat.scale) * lat.scale
    return closest_point(lat, s)


def mod_lattice(lat: Lattice, s) -> np.ndarray:
    """s reduced into the fundamental Voronoi region: s - Q_V(s)."""
    return lat._check_dim(s) - nearest_point(lat, s)


def closest_point(lat: Lattice, s, initial_radius=None, max_doublings: int = 3) -> np.ndarray:
    """Exact closest lattice point by Schnorr-Euchner sphere enumeration.

    The search radius starts at a covering-radius upper bound of the basis
    (half the longest Gram-Schmidt vector times sqrt(n)) and doubles on
    failure up to ``max_doublings`` times before signalling failure.
    Exact ties resolve to the lexicographically smallest point.
    """
    s = lat._check_dim(s)
    q, r = lat._triangular()
    if initial_radius is None:
        initial_radius = 0.5 * np.max(np.diag(r)) * math.sqrt(lat.dimension)
    radius = float(initial_radius)
    for _ in range(max_doublings + 1):
        pts, _ = _enumerate(lat, s, radius, cap=None, want_closest=True)
        if pts:
            return pts[0]
        radius *= 2.0
    raise EnumerationError(f"no lattice point within radius budget {radius / 2:.3g}")


def enumerate_within(lat: Lattice, center, radius: float, cap=None):
    """Lattice points within ``radius`` of ``center``.

    Returns (points, truncated): ``truncated`` is True when the search was
    stopped after ``cap`` points, in which case at least ``cap`` points lie
    in the ball.
    """
    center = lat._check_dim(center)
    if radius < 0:
        raise LatticeError("radius must be nonnegative")
    return _enumerate(lat, center, radius, cap=cap, want_closest=False)


def _enumerate(lat, s, radius, cap, want_closest):
    """Depth-first Fincke-Pohst over the triangularized basis.

    When ``want_closest`` the radius shrinks to the best leaf found and a
    single point is returned (lexicographic winner on EQ_TOL ties);
    otherwise all leaves within the fixed radius are collected (up to
    ``cap``).
    """
    n = lat.dimension
    q, r = lat._triangular()
    y = q.T @ s
    rd = [[float(r[i, j]) for j in range(n)] for i in range(n)]
    yv = [float(v) for v in y]

    best_sq = radius * radius
    best_pt = None
    found = []
    truncated = False

    u = [0] * n
    rounds = [0] * n
    centers = [0.0] * n
    steps = [0] * n
    partial = [0.0] * (n + 1)

    def descend_to(k):
        acc = yv[k]
        row = rd[k]
        for j in range(k + 1, n):
            acc -= row[j] * u[j]
        c = acc / row[k]
        centers[k] = c
        rounds[k] = math.ceil(c - 0.5)
        u[k] = rounds[k]
        steps[k] = 0

    k = n - 1
    descend_to(k)
    down = True
    while True:
        if down:
            diff = u[k] - centers[k]
            dist = partial[k + 1] + (rd[k][k] * diff) ** 2
            if dist <= best_sq + EQ_TOL:
                if k == 0:
                    pt = np.asarray(u, dtype=float) @ lat.basis
                    if want_closest:
                        if best_pt is None or dist < best_sq - EQ_TOL:
                            best_sq = dist
                            best_pt = pt
                        elif dist <= best_sq + EQ_TOL and _lex_less(pt, best_pt):
                            best_sq = min(best_sq, dist)
                            best_pt = pt
                    else:
                        found.append(pt)
                        if cap is not None and len(found) >= cap:
                            truncated = True
                            break
                    down = False
                else:
                    partial[k] = dist
                    k -= 1
                    descend_to(k)
                    down = True
            else:
                down = False
        else:
            # zig-zag to the next candidate at this level, or back up
            steps[k] += 1
            delta = (steps[k] + 1) // 2
            if steps[k] % 2 == 1:
                u[k] = rounds[k] + delta
            else:
                u[k] = rounds[k] - delta
            diff = u[k] - centers[k]
            dist = partial[k + 1] + (rd[k][k] * diff) ** 2
            if dist <= best_sq + EQ_TOL:
                down = True
            else:
                # the mirror candidate at the same delta may still be closer
                if steps[k] % 2 == 1:
                    steps[k] += 1
                    u[k] = rounds[k] - delta
                    diff = u[k] - centers[k]
                    dist = partial[k + 1] + (rd[k][k] * diff) ** 2
                    if dist <= best_sq + EQ_TOL:
                        down = True
                        continue
                k += 1
                if k == n:
                    break
                down = False
    if want_closest:
        return ([best_pt] if best_pt is not None else []), False
    return found, truncated


def _lex_less(a, b):
    for x, y in zip(a, b):
        if x < y - EQ_TOL:
            return True
        if x > y + EQ_TOL:
            return False
    return False


def second_moment(lat: Lattice, samples: int = 20000, rng=None) -> float:
    """sigma^2_Lambda, per dimension.

    Closed form for the Z^n family; for construction-A a Monte Carlo
    estimate from exactly-uniform Voronoi samples (mod-Lambda applied to
    uniform draws over the fundamental parallelepiped).
    """
    if lat.kind in ("zn", "scaled_zn"):
        return lat.scale ** 2 / 12.0
    if samples < 1:
        raise LatticeError("samples must be >= 1")
    rng = np.random.default_rng(rng)
    u = rng.random((samples, lat.dimension))
    pts = u @ lat.basis
    total = 0.0
    for row in pts:
        v = mod_lattice(lat, row)
        total += float(v @ v)
    return total / (samples * lat.dimension)


def normalized_second_moment(lat: Lattice, samples: int = 20000, rng=None) -> float:
    """G(Lambda) = sigma^2 / Vol(V)^{2/n}; > 1/(2 pi e) for any lattice."""
    log_vol = lat.log_volume()
    if not np.isfinite(log_vol):
        raise LatticeError("singular generator")
    return second_moment(lat, samples=samples, rng=rng) * math.exp(-2.0 * log_vol / lat.dimension)


class NestedPair:
    """Coarse/fine lattice pair; codewords are fine points inside coarse V."""

    def __init__(self, coarse: Lattice, fine: Lattice, validate: bool = True, rng=None):
        if coarse.dimension != fine.dimension:
            raise LatticeError("coarse and fine dimensions differ")
        self.coarse = coarse
        self.fine = fine
        log_ratio = coarse.log_volume() - fine.log_volume()
        if log_ratio < -1e-12:
            raise LatticeError("fine lattice not nested in coarse (volume ratio < 1)")
        self.rate_bits_per_dim = max(log_ratio, 0.0) / (fine.dimension * math.log(2))
        if validate:
            self._check_nesting(rng)

    def _check_nesting(self, rng):
        rng = np.random.default_rng(rng)
        n = self.coarse.dimension
        for _ in range(8):
            coeff = rng.integers(-2, 3, size=n)
            pt = coeff @ self.coarse.basis
            near = nearest_point(self.fine, pt)
            if np.max(np.abs(near - pt)) > EQ_TOL:
                raise LatticeError("coarse point is not a fine lattice point")

    @property
    def dimension(self):
        return self.coarse.dimension

    def codebook_size(self) -> int:
        if self.fine.kind == "construction_a" and self.coarse.kind == "scaled_zn":
            return self.fine.p ** self.fine.k
        ratio = math.exp((self.coarse.log_volume() - self.fine.log_volume()) / self.dimension)
        q = int(round(ratio))
        if abs(ratio - q) > 1e-9:
            raise LatticeError("codebook enumeration needs an integer per-dimension nesting ratio")
        return q ** self.dimension

    def codeword(self, message_index: int) -> np.ndarray:
        """Fine lattice point in V(coarse) for the given message index."""
        size = self.codebook_size()
        if not 0 <= message_index < size:
            raise LatticeError(f"message index {message_index} out of range [0, {size})")
        fine = self.fine
        if fine.kind == "construction_a":
            digits = np.empty(fine.k, dtype=np.int64)
            idx = message_index
            for j in range(fine.k):
                digits[j] = idx % fine.p
                idx //= fine.p
            point = ((digits @ fine.gen) % fine.p).astype(float) * fine.scale
        else:
            ratio = int(round(math.exp((self.coarse.log_volume() - fine.log_volume()) / self.dimension)))
            digits = np.empty(self.dimension, dtype=np.int64)
            idx = message_index
            for j in range(self.dimension):
                digits[j] = idx % ratio
                idx //= ratio
            point = digits.astype(float) * fine.scale
        return mod_lattice(self.coarse, point)


def nesting_rate(pair: NestedPair) -> float:
    """(1/n) log2 of the coarse-to-fine Voronoi volume ratio, bits/dim."""
    return pair.rate_bits_per_dim


def sample_dither(pair: NestedPair, rng) -> np.ndarray:
    """Uniform sample over the coarse Voronoi region.

    mod-Lambda of a uniform draw over the fundamental parallelepiped is
    exactly Voronoi-uniform (both are fundamental domains).
    """
    rng = np.random.default_rng(rng)
    u = rng.random(pair.dimension)
    return mod_lattice(pair.coarse, u @ pair.coarse.basis)


# -- convenience constructors ----------------------------------------------

def integer_zn(n: int) -> Lattice:
    return Lattice("zn", n)


def scaled_zn(n: int, scale: float) -> Lattice:
    return Lattice("scaled_zn", n, scale=scale)


def construction_a(p: int, gen, scale: float = 1.0) -> Lattice:
    gen = np.atleast_2d(np.array(gen, dtype=np.int64))
    return Lattice("construction_a", gen.shape[1], scale=scale, p=p, gen=gen)


def zn_pair(n: int, coarse_scale: float, bits_per_dim: int) -> NestedPair:
    """Coarse s Z^n with fine (s / 2^b) Z^n; rate is exactly b bits/dim."""
    fine_scale = coarse_scale / (2 ** bits_per_dim)
    return NestedPair(scaled_zn(n, coarse_scale), scaled_zn(n, fine_scale))


def construction_a_pair(p: int, gen, sigma2: float) -> NestedPair:
    """Coarse beta p Z^n nested in fine beta (C + p Z^n), coarse second moment sigma2."""
    gen = np.atleast_2d(np.array(gen, dtype=np.int64))
    n = gen.shape[1]
    beta = math.sqrt(12.0 * sigma2) / p
    return NestedPair(scaled_zn(n, beta * p), construction_a(p, gen, scale=beta))


def parse_lattice_config(text: str) -> Lattice:
    """Build a lattice from a plain-text block.

    Recognized keys: ``kind``, ``n``, ``scale``, ``p``, and one ``row`` line
    per code generator row (integers).  Separators may be space, '=' or ':'.
    """
    kind = None
    n = None
    scale = 1.0
    p = None
    rows = []
    for raw in text.splitlines():
        line = raw.split("#")[0].strip()
        if not line:
            continue
        line = line.replace("=", " ").replace(":", " ")
        parts = line.split()
        key, vals = parts[0].lower(), parts[1:]
        if key == "kind":
            kind = vals[0].lower()
        elif key == "n":
            n = int(vals[0])
        elif key == "scale":
            scale = float(vals[0])
        elif key == "p":
            p = int(vals[0])
        elif key == "row":
            rows.append([int(v) for v in vals])
        else:
            raise LatticeError(f"unknown config key {key!r}")
    if kind in ("zn", "integer_zn"):
        return integer_zn(n)
    if kind == "scaled_zn":
        return scaled_zn(n, scale)
    if kind == "construction_a":
        if not rows:
            raise LatticeError("construction_a config needs generator rows")
        return construction_a(p, rows, scale=scale)
    raise LatticeError(f"unknown lattice kind {kind!r}")
