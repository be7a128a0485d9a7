"""Finite source models: alphabets, pmfs, distortion measures, guessing instances.

Everything is immutable after construction and validated up front, so the
rest of the toolkit can assume well-formed inputs. All probability sums are
checked to an absolute tolerance of 1e-12.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from math import fsum

import numpy as np

SUM_TOL = 1e-12
BALL_TOL = 1e-12
DEFAULT_PRODUCT_CAP = 4096


class InvalidInstance(ValueError):
    """A malformed instance document or inconsistent constructor argument."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.reason = message
        super().__init__(f"{path}: {message}" if path else message)


class EnumerationCapExceeded(RuntimeError):
    """An operation refused to enumerate past its configured cap."""


@dataclass(frozen=True)
class Alphabet:
    """Ordered collection of distinct text labels; order fixes symbol indices."""

    symbols: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        if not self.symbols:
            raise InvalidInstance("alphabet", "must not be empty")
        for s in self.symbols:
            if not isinstance(s, str):
                raise InvalidInstance("alphabet", f"label {s!r} is not text")
        if len(set(self.symbols)) != len(self.symbols):
            raise InvalidInstance("alphabet", "labels must be unique")

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, i: int) -> str:
        return self.symbols[i]

    def index(self, label: str) -> int:
        try:
            return self.symbols.index(label)
        except ValueError:
            raise InvalidInstance("alphabet", f"unknown label {label!r}") from None


def _check_prob_array(arr: np.ndarray, path: str) -> None:
    bad = np.where(~np.isfinite(arr) | (arr < 0.0))[0]
    if bad.size:
        i = int(bad[0])
        raise InvalidInstance(f"{path}[{i}]", f"entry {arr.flat[i] if arr.ndim == 1 else arr[i]} is not a probability")


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probability mass function over an alphabet.

    ``exact`` carries the entries as rationals when the source document used
    rational strings; greedy tie-breaking then uses exact arithmetic.
    """

    alphabet: Alphabet
    probs: np.ndarray
    exact: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", arr)
        if arr.shape != (len(self.alphabet),):
            raise InvalidInstance("pmf", f"expected {len(self.alphabet)} entries, got shape {arr.shape}")
        _check_prob_array(arr, "pmf")
        total = fsum(arr.tolist())
        if abs(total - 1.0) > SUM_TOL:
            raise InvalidInstance("pmf", f"sums to {total:.12g}")
        if self.exact is not None:
            if len(self.exact) != len(self.alphabet):
                raise InvalidInstance("pmf", "exact entries do not match alphabet size")
            object.__setattr__(self, "exact", tuple(Fraction(e) for e in self.exact))

    def support(self) -> tuple[int, ...]:
        if self.exact is not None:
            return tuple(i for i, e in enumerate(self.exact) if e > 0)
        return tuple(int(i) for i in np.where(self.probs > 0.0)[0])


@dataclass(frozen=True, eq=False)
class JointPmf:
    """Joint distribution P(x, y) as a matrix indexed [x][y]."""

    x_alphabet: Alphabet
    y_alphabet: Alphabet
    probs: np.ndarray
    exact: tuple[tuple[Fraction, ...], ...] | None = None

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", arr)
        shape = (len(self.x_alphabet), len(self.y_alphabet))
        if arr.shape != shape:
            raise InvalidInstance("joint_pmf", f"expected shape {shape}, got {arr.shape}")
        bad = np.argwhere(~np.isfinite(arr) | (arr < 0.0))
        if bad.size:
            i, j = (int(v) for v in bad[0])
            raise InvalidInstance(f"joint_pmf[{i}][{j}]", f"entry {arr[i, j]} is not a probability")
        total = fsum(arr.ravel().tolist())
        if abs(total - 1.0) > SUM_TOL:
            raise InvalidInstance("joint_pmf", f"sums to {total:.12g}")
        if self.exact is not None:
            object.__setattr__(
                self, "exact", tuple(tuple(Fraction(e) for e in row) for row in self.exact)
            )

    def marginal_y(self) -> np.ndarray:
        return np.array([fsum(self.probs[:, j].tolist()) for j in range(len(self.y_alphabet))])

    def marginal_x(self) -> Pmf:
        probs = np.array([fsum(self.probs[i, :].tolist()) for i in range(len(self.x_alphabet))])
        exact = None
        if self.exact is not None:
            exact = tuple(sum(row, Fraction(0)) for row in self.exact)
        return Pmf(self.x_alphabet, probs, exact)


@dataclass(frozen=True, eq=False)
class DistortionMeasure:
    """Distortion matrix d[x][x_hat]; every row must contain a zero entry."""

    matrix: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", arr)
        if arr.ndim != 2 or arr.size == 0:
            raise InvalidInstance("distortion", f"expected a nonempty matrix, got shape {arr.shape}")
        bad = np.argwhere(~np.isfinite(arr) | (arr < 0.0))
        if bad.size:
            i, j = (int(v) for v in bad[0])
            raise InvalidInstance(f"distortion[{i}][{j}]", f"entry {arr[i, j]} must be finite and >= 0")
        for i in range(arr.shape[0]):
            if not (arr[i] == 0.0).any():
                raise InvalidInstance("distortion", f"row {i + 1} violates zero-distortion assumption")


@dataclass(frozen=True, eq=False)
class GuessInstance:
    """A source pmf, a reproduction alphabet, a distortion matrix, and a budget."""

    pmf: Pmf
    reproduction: Alphabet
    distortion: DistortionMeasure
    budget: float

    def __post_init__(self):
        object.__setattr__(self, "budget", float(self.budget))
        shape = (len(self.pmf.alphabet), len(self.reproduction))
        if self.distortion.matrix.shape != shape:
            raise InvalidInstance(
                "distortion", f"shape {self.distortion.matrix.shape} does not match alphabets {shape}"
            )
        if not (math.isfinite(self.budget) and self.budget >= 0.0):
            raise InvalidInstance("D", f"budget {self.budget} must be finite and >= 0")

    @property
    def source(self) -> Alphabet:
        return self.pmf.alphabet


@dataclass(frozen=True, eq=False)
class JointGuessInstance:
    """Guessing instance with side information: joint source, shared distortion."""

    joint: JointPmf
    reproduction: Alphabet
    distortion: DistortionMeasure
    budget: float

    def __post_init__(self):
        object.__setattr__(self, "budget", float(self.budget))
        shape = (len(self.joint.x_alphabet), len(self.reproduction))
        if self.distortion.matrix.shape != shape:
            raise InvalidInstance(
                "distortion", f"shape {self.distortion.matrix.shape} does not match alphabets {shape}"
            )
        if not (math.isfinite(self.budget) and self.budget >= 0.0):
            raise InvalidInstance("D", f"budget {self.budget} must be finite and >= 0")

    @property
    def source(self) -> Alphabet:
        return self.joint.x_alphabet

    def conditional(self, y_index: int) -> GuessInstance:
        """Instance for the conditional source given the y with this index."""
        pmf = _conditional_pmf(self.joint, y_index)
        return GuessInstance(pmf, self.reproduction, self.distortion, self.budget)

    def marginal_instance(self) -> GuessInstance:
        return GuessInstance(self.joint.marginal_x(), self.reproduction, self.distortion, self.budget)


@dataclass(frozen=True, eq=False)
class ProductInstance(GuessInstance):
    """n-fold memoryless extension: product pmf, additive distortion, budget n*D."""

    base: GuessInstance = None  # type: ignore[assignment]
    n: int = 0


def _product_labels(alphabet: Alphabet, n: int) -> tuple[str, ...]:
    # single-character labels concatenate directly ("0","1" -> "01");
    # longer labels get a comma so product labels stay unambiguous
    sep = "" if all(len(s) == 1 for s in alphabet.symbols) else ","
    return tuple(sep.join(t) for t in itertools.product(alphabet.symbols, repeat=n))


def product_extend(inst: GuessInstance, n: int, cap: int = DEFAULT_PRODUCT_CAP) -> ProductInstance:
    """Extend an instance to blocklength n with additive distortion and budget n*D."""
    if not isinstance(n, int) or n < 1:
        raise InvalidInstance("n", f"blocklength must be a positive integer, got {n!r}")
    nx, nk = len(inst.source), len(inst.reproduction)
    if nx**n > cap or nk**n > cap:
        raise EnumerationCapExceeded(
            f"product alphabets of size {nx}^{n} x {nk}^{n} exceed the cap {cap}"
        )
    src = Alphabet(_product_labels(inst.source, n))
    rep = Alphabet(_product_labels(inst.reproduction, n))

    probs = np.array([1.0])
    for _ in range(n):
        probs = np.kron(probs, inst.pmf.probs)
    exact = None
    if inst.pmf.exact is not None:
        exact = tuple(
            math.prod(t, start=Fraction(1))
            for t in itertools.product(inst.pmf.exact, repeat=n)
        )

    d = inst.distortion.matrix
    dn = np.zeros((1, 1))
    for _ in range(n):
        dn = (dn[:, None, :, None] + d[None, :, None, :]).reshape(
            dn.shape[0] * d.shape[0], dn.shape[1] * d.shape[1]
        )

    return ProductInstance(
        pmf=Pmf(src, probs, exact),
        reproduction=rep,
        distortion=DistortionMeasure(dn),
        budget=n * inst.budget,
        base=inst,
        n=n,
    )


def _conditional_pmf(joint: JointPmf, y_index: int) -> Pmf:
    if not 0 <= y_index < len(joint.y_alphabet):
        raise InvalidInstance("y", f"index {y_index} out of range")
    col = joint.probs[:, y_index]
    py = fsum(col.tolist())
    if py <= 0.0:
        raise InvalidInstance("y", f"P_Y({joint.y_alphabet[y_index]!r}) = 0")
    exact = None
    if joint.exact is not None:
        py_exact = sum((row[y_index] for row in joint.exact), Fraction(0))
        exact = tuple(row[y_index] / py_exact for row in joint.exact)
    return Pmf(joint.x_alphabet, col / py, exact)


def conditional_slice(joint: JointPmf, y: str) -> Pmf:
    """Conditional distribution of X given Y = y (requires P_Y(y) > 0)."""
    return _conditional_pmf(joint, joint.y_alphabet.index(y))


# ---------------------------------------------------------------------------
# Instance documents

_SINGLE_KEYS = {"x", "xhat", "pmf", "distortion", "D"}
_JOINT_KEYS = {"x", "xhat", "y", "joint_pmf", "distortion", "D"}


def _parse_labels(value, path: str) -> Alphabet:
    if not isinstance(value, list) or not value:
        raise InvalidInstance(path, "expected a nonempty list of labels")
    for i, s in enumerate(value):
        if not isinstance(s, str):
            raise InvalidInstance(f"{path}[{i}]", f"label {s!r} is not a string")
    try:
        return Alphabet(tuple(value))
    except InvalidInstance as exc:
        raise InvalidInstance(path, exc.reason) from None


def _parse_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidInstance(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise InvalidInstance(path, f"number {value} is not finite")
    return float(value)


def _parse_prob(value, path: str) -> tuple[float, Fraction, bool]:
    """Returns (float value, exact value, was_rational_string)."""
    if isinstance(value, str):
        try:
            frac = Fraction(value)
        except (ValueError, ZeroDivisionError):
            raise InvalidInstance(path, f"cannot parse {value!r} as a rational") from None
        return float(frac), frac, True
    num = _parse_number(value, path)
    return num, Fraction(num), False


def _parse_prob_vector(value, path: str, length: int):
    if not isinstance(value, list) or len(value) != length:
        raise InvalidInstance(path, f"expected a list of {length} probabilities")
    floats, exacts, any_rational = [], [], False
    for i, v in enumerate(value):
        f, e, r = _parse_prob(v, f"{path}[{i}]")
        floats.append(f)
        exacts.append(e)
        any_rational = any_rational or r
    return floats, exacts, any_rational


def _parse_distortion(value, x: Alphabet, xhat: Alphabet) -> DistortionMeasure:
    if not isinstance(value, list) or len(value) != len(x):
        raise InvalidInstance("distortion", f"expected {len(x)} rows")
    rows = []
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != len(xhat):
            raise InvalidInstance(f"distortion[{i}]", f"expected {len(xhat)} entries")
        rows.append([_parse_number(v, f"distortion[{i}][{j}]") for j, v in enumerate(row)])
    return DistortionMeasure(np.array(rows))


def load_instance(text: str | bytes) -> GuessInstance | JointGuessInstance:
    """Parse and validate a UTF-8 JSON instance document.

    Single-source form::

        {"x": [...], "xhat": [...], "pmf": [...], "distortion": [[...]], "D": 0.1}

    The joint form replaces ``pmf`` with ``y`` and ``joint_pmf`` (rows per x,
    columns per y). Probabilities may be numbers or rational strings such as
    "3/4"; rational strings switch greedy mass comparisons to exact
    arithmetic. Unknown fields are rejected.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")

    def _reject(token):
        raise InvalidInstance("document", f"non-finite number {token} not allowed")

    try:
        doc = json.loads(text, parse_constant=_reject)
    except json.JSONDecodeError as exc:
        raise InvalidInstance("document", f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise InvalidInstance("document", "top level must be an object")

    keys = set(doc)
    if keys == _SINGLE_KEYS:
        joint_form = False
    elif keys == _JOINT_KEYS:
        joint_form = True
    else:
        unknown = sorted(keys - (_SINGLE_KEYS | _JOINT_KEYS))
        if unknown:
            raise InvalidInstance("document", f"unknown fields: {', '.join(unknown)}")
        missing = sorted(min(_SINGLE_KEYS - keys, _JOINT_KEYS - keys, key=len))
        raise InvalidInstance("document", f"missing fields: {', '.join(missing)}")

    x = _parse_labels(doc["x"], "x")
    xhat = _parse_labels(doc["xhat"], "xhat")
    distortion = _parse_distortion(doc["distortion"], x, xhat)
    budget = _parse_number(doc["D"], "D")
    if budget < 0:
        raise InvalidInstance("D", f"budget {budget} must be >= 0")

    if not joint_form:
        floats, exacts, rational = _parse_prob_vector(doc["pmf"], "pmf", len(x))
        pmf = Pmf(x, np.array(floats), tuple(exacts) if rational else None)
        return GuessInstance(pmf, xhat, distortion, budget)

    y = _parse_labels(doc["y"], "y")
    rows = doc["joint_pmf"]
    if not isinstance(rows, list) or len(rows) != len(x):
        raise InvalidInstance("joint_pmf", f"expected {len(x)} rows")
    float_rows, exact_rows, rational = [], [], False
    for i, row in enumerate(rows):
        floats, exacts, r = _parse_prob_vector(row, f"joint_pmf[{i}]", len(y))
        float_rows.append(floats)
        exact_rows.append(tuple(exacts))
        rational = rational or r
    joint = JointPmf(x, y, np.array(float_rows), tuple(exact_rows) if rational else None)
    return JointGuessInstance(joint, xhat, distortion, budget)
