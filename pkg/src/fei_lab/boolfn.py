"""Truth tables, real tables, bias vectors and discrete derivatives.

Conventions used throughout the package:

* logical TRUE is ``-1`` and FALSE is ``+1``;
* entry ``a`` of a table is the value at the point ``x`` with ``x_i = -1``
  iff bit ``i - 1`` of ``a`` is set (so bit 0 carries ``x_1``);
* a subset ``S`` of ``[n]`` is a bitmask with bit ``i - 1`` set iff ``i`` is in ``S``.
"""

import json

import numpy as np

from fei_lab import kernels

MAX_ARITY = 24
EPS_BIAS = 1e-9


class _Table:
    __slots__ = ("_n", "_values")

    _dtype = np.float64

    def __init__(self, values, n=None):
        arr = np.array(values, dtype=self._dtype).reshape(-1)
        size = arr.shape[0]
        if n is None:
            n = size.bit_length() - 1
        if not 0 <= n <= MAX_ARITY:
            raise ValueError(f"arity {n} outside 0..{MAX_ARITY}")
        if size != 1 << n:
            raise ValueError(f"table length {size} is not 2**{n}")
        self._validate(arr)
        arr.flags.writeable = False
        self._n = n
        self._values = arr

    def _validate(self, arr):
        if not np.all(np.isfinite(arr)):
            raise ValueError("table entries must be finite")

    @property
    def n(self):
        return self._n

    @property
    def values(self):
        return self._values

    def as_float(self):
        return self._values.astype(np.float64)

    def __len__(self):
        return self._values.shape[0]

    def __eq__(self, other):
        return (
            type(self) is type(other)
            and self._n == other._n
            and np.array_equal(self._values, other._values)
        )

    def __hash__(self):
        return hash((type(self).__name__, self._n, self._values.tobytes()))

    def __repr__(self):
        return f"{type(self).__name__}(n={self._n}, values={self._values.tolist()!r})"


class RealTable(_Table):
    """A real-valued function on ``{-1, 1}^n``."""

    __slots__ = ()


class TruthTable(_Table):
    """A Boolean function ``{-1, 1}^n -> {-1, 1}`` stored as an int8 array."""

    __slots__ = ()
    _dtype = np.int8

    def __init__(self, values, n=None):
        if not isinstance(values, np.ndarray):
            values = np.asarray(values)
        if values.dtype.kind == "f" and not np.all(np.isin(values, (-1.0, 1.0))):
            raise ValueError("truth table entries must be exactly +1 or -1")
        super().__init__(values, n)

    def _validate(self, arr):
        if not np.all((arr == 1) | (arr == -1)):
            raise ValueError("truth table entries must be exactly +1 or -1")

    def to_int(self):
        """Integer whose bit ``a`` is set iff ``f(a) = -1``."""
        bits = (self._values == -1).astype(np.uint8)
        packed = np.packbits(bits, bitorder="little")
        return int.from_bytes(packed.tobytes(), "little")

    @classmethod
    def from_int(cls, n, t):
        N = 1 << n
        if t < 0 or t >> N:
            raise ValueError(f"integer {t:#x} has bits beyond 2**{n} entries")
        raw = t.to_bytes((N + 7) // 8, "little")
        bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[:N]
        return cls(np.where(bits == 1, -1, 1).astype(np.int8), n)

    def to_hex(self):
        width = ((1 << self._n) + 3) // 4
        return format(self.to_int(), "x").rjust(width, "0")

    @classmethod
    def from_hex(cls, n, text):
        text = text.strip().lower()
        if text.startswith("0x"):
            text = text[2:]
        width = ((1 << n) + 3) // 4
        if len(text) != width:
            raise ValueError(f"expected {width} hex digits for n={n}, got {len(text)}")
        return cls.from_int(n, int(text, 16))

    def to_json(self):
        return {"n": self._n, "hex": self.to_hex()}

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict) or set(obj) != {"n", "hex"}:
            raise ValueError('truth table JSON must be {"n": int, "hex": str}')
        n = obj["n"]
        if not isinstance(n, int) or isinstance(n, bool):
            raise ValueError("n must be an integer")
        return cls.from_hex(n, obj["hex"])

    def dumps(self):
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, text):
        return cls.from_json(json.loads(text))

    def count_true(self):
        return int(np.count_nonzero(self._values == -1))

    def is_balanced(self):
        """Exact check: exactly half of the points map to TRUE."""
        return 2 * self.count_true() == (1 << self._n)

    def __neg__(self):
        return TruthTable(-self._values, self._n)


def load_table(path):
    with open(path) as fh:
        return TruthTable.loads(fh.read())


def save_table(table, path):
    with open(path, "w") as fh:
        fh.write(table.dumps() + "\n")


class BiasVector:
    """Per-coordinate biases ``mu_i = E[x_i]`` of a product distribution."""

    __slots__ = ("_mu",)

    def __init__(self, mu):
        arr = np.array(mu, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise ValueError("biases must be finite")
        if np.any(np.abs(arr) > 1.0 - EPS_BIAS):
            raise ValueError(f"every |mu_i| must be at most 1 - {EPS_BIAS:g}")
        arr.flags.writeable = False
        self._mu = arr

    @classmethod
    def uniform(cls, n):
        return cls(np.zeros(n))

    @property
    def mu(self):
        return self._mu

    @property
    def n(self):
        return self._mu.shape[0]

    @property
    def sigma2(self):
        return 1.0 - self._mu * self._mu

    @property
    def sigma(self):
        return np.sqrt(self.sigma2)

    def is_uniform(self):
        return not np.any(self._mu)

    def weights(self):
        """Probability of every assignment index under the product measure."""
        return kernels.weights_batch(self._mu[None, :])[0]

    def block(self, start, stop):
        return BiasVector(self._mu[start:stop])

    def __len__(self):
        return self.n

    def __eq__(self, other):
        return isinstance(other, BiasVector) and np.array_equal(self._mu, other._mu)

    def __hash__(self):
        return hash(self._mu.tobytes())

    def __repr__(self):
        return f"BiasVector({self._mu.tolist()!r})"


def as_bias(mu, n):
    """Coerce ``None``/``"uniform"``/sequence/BiasVector into a BiasVector of length n."""
    if mu is None or (isinstance(mu, str) and mu == "uniform"):
        return BiasVector.uniform(n)
    if not isinstance(mu, BiasVector):
        mu = BiasVector(mu)
    if mu.n != n:
        raise ValueError(f"bias vector has length {mu.n}, function has arity {n}")
    return mu


def _check_coord(f, i):
    if not isinstance(i, (int, np.integer)) or not 1 <= i <= f.n:
        raise ValueError(f"coordinate {i} outside 1..{f.n}")


def evaluate(f, a):
    if not 0 <= a < len(f):
        raise IndexError(f"assignment index {a} outside 0..{len(f) - 1}")
    return f.values[a].item()


def point_index(x):
    """Assignment index of a point given as a sequence of +-1 values."""
    a = 0
    for i, xi in enumerate(x):
        if xi == -1:
            a |= 1 << i
        elif xi != 1:
            raise ValueError("point coordinates must be +1 or -1")
    return a


def restrict(f, i, b):
    """Fix ``x_i = b``; the remaining coordinates keep their order."""
    _check_coord(f, i)
    if b not in (1, -1):
        raise ValueError("restriction value must be +1 or -1")
    v = f.values.reshape(-1, 2, 1 << (i - 1))
    half = v[:, 0 if b == 1 else 1, :].reshape(-1)
    return type(f)(half, f.n - 1)


def discrete_derivative(f, i):
    """``(f(x with x_i=1) - f(x with x_i=-1)) / 2``, stored at full arity."""
    _check_coord(f, i)
    v = f.as_float().reshape(-1, 2, 1 << (i - 1))
    d = (v[:, 0, :] - v[:, 1, :]) / 2.0
    out = np.empty_like(v)
    out[:, 0, :] = d
    out[:, 1, :] = d
    return RealTable(out.reshape(-1), f.n)


def iterated_derivative(f, S):
    if S <= 0:
        raise ValueError("iterated derivative needs a nonempty subset")
    if S >> f.n:
        raise ValueError(f"subset {S:#b} exceeds arity {f.n}")
    out = f
    for i in range(f.n):
        if S >> i & 1:
            out = discrete_derivative(out, i + 1)
    return out


def mean(f, mu=None):
    mu = as_bias(mu, f.n)
    return float(np.dot(mu.weights(), f.as_float()))


# standard functions


def constant(n, value=1):
    return TruthTable(np.full(1 << n, value, dtype=np.int8), n)


def _coords(n):
    a = np.arange(1 << n)
    return [np.where((a >> i) & 1, -1, 1).astype(np.int8) for i in range(n)]


def dictator(n, i=1):
    _check_coord(constant(n), i)
    return TruthTable(_coords(n)[i - 1], n)


def parity(n):
    out = np.ones(1 << n, dtype=np.int8)
    for x in _coords(n):
        out = out * x
    return TruthTable(out, n)


def and_(n):
    xs = _coords(n)
    true = np.all([x == -1 for x in xs], axis=0)
    return TruthTable(np.where(true, -1, 1).astype(np.int8), n)


def or_(n):
    xs = _coords(n)
    true = np.any([x == -1 for x in xs], axis=0)
    return TruthTable(np.where(true, -1, 1).astype(np.int8), n)


def majority(n):
    if n % 2 == 0:
        raise ValueError("majority needs an odd arity")
    s = np.sum(_coords(n), axis=0, dtype=np.int64)
    return TruthTable(np.sign(s).astype(np.int8), n)


def from_function(n, fn):
    """Tabulate ``fn(x)`` over all points, ``x`` a tuple of +-1 ints."""
    xs = _coords(n)
    vals = [fn(tuple(int(x[a]) for x in xs)) for a in range(1 << n)]
    return TruthTable(np.array(vals, dtype=np.int8), n)
