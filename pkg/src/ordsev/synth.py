"""Synthetic crash records.

Two generators are provided:

* :func:`simulate` realises the ordered logit process literally. Covariates
  are drawn independently per variable, the latent index is
  ``x.beta + eps`` with ``eps`` drawn by inverse CDF from a standard
  logistic, and the class is read off the cut-offs.
* :func:`simulate_from_crosstabs` builds a dataset whose every
  (variable x severity) table equals a given set of counts exactly, with
  covariates independent given severity. It stands in for records behind a
  published descriptive table.

Both use numpy's PCG64 generator (``numpy.random.default_rng(seed)``), so a
given seed reproduces the same dataset on any run of the same numpy version.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError, SchemaError
from .ologit import OrderedLogitParams, class_probabilities
from .schema import CategoricalSchema, Dataset, encode_codes, schema_from_dict

MAX_PROFILES = 10**6
GENERATOR_NAME = "numpy.random.PCG64"


@dataclass(frozen=True)
class GeneratorSpec:
    schema: CategoricalSchema
    category_probabilities: tuple[np.ndarray, ...]
    params: OrderedLogitParams
    sample_size: int
    seed: int

    def __post_init__(self):
        probs = tuple(np.asarray(p, dtype=float) for p in self.category_probabilities)
        if len(probs) != len(self.schema.variables):
            raise SchemaError("one probability vector per variable is required")
        for p, spec in zip(probs, self.schema.variables):
            if p.shape != (len(spec.categories),):
                raise SchemaError(f"variable {spec.name!r}: expected {len(spec.categories)} probabilities")
            if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
                raise SchemaError(f"variable {spec.name!r}: probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "category_probabilities", probs)
        if self.params.beta.size != self.schema.n_dummies:
            raise SchemaError(f"beta has {self.params.beta.size} entries, schema selects {self.schema.n_dummies} dummies")
        if self.params.n_classes != self.schema.n_classes:
            raise SchemaError("number of cut-offs does not match the outcome classes")
        if int(self.sample_size) < 1:
            raise DataError("sample size must be at least 1")
        if not 0 <= int(self.seed) < 2**64:
            raise DataError("seed must be a 64-bit unsigned integer")

    def with_overrides(self, sample_size: int | None = None, seed: int | None = None) -> "GeneratorSpec":
        return GeneratorSpec(
            self.schema,
            self.category_probabilities,
            self.params,
            self.sample_size if sample_size is None else sample_size,
            self.seed if seed is None else seed,
        )


@dataclass(frozen=True)
class CrosstabSpec:
    schema: CategoricalSchema
    counts: tuple[np.ndarray, ...]  # per variable: categories x classes
    seed: int

    def __post_init__(self):
        counts = tuple(np.asarray(c, dtype=np.int64) for c in self.counts)
        totals = None
        for c, spec in zip(counts, self.schema.variables):
            if c.shape != (len(spec.categories), self.schema.n_classes):
                raise SchemaError(f"variable {spec.name!r}: crosstab shape {c.shape} does not match the schema")
            if np.any(c < 0):
                raise SchemaError(f"variable {spec.name!r}: negative counts")
            col = c.sum(axis=0)
            if totals is None:
                totals = col
            elif not np.array_equal(col, totals):
                raise SchemaError(f"variable {spec.name!r}: class totals {col.tolist()} differ from {totals.tolist()}")
        if len(counts) != len(self.schema.variables):
            raise SchemaError("one crosstab per variable is required")
        object.__setattr__(self, "counts", counts)

    @property
    def class_totals(self) -> np.ndarray:
        return self.counts[0].sum(axis=0)

    @property
    def sample_size(self) -> int:
        return int(self.class_totals.sum())


def _open_uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    # 53-bit grid shifted by half a step: strictly inside (0, 1)
    k = rng.integers(0, 2**53, size=n, dtype=np.uint64).astype(float)
    return (k + 0.5) / 2.0**53


def logistic_draws(rng: np.random.Generator, n: int) -> np.ndarray:
    u = _open_uniform(rng, n)
    return np.log(u) - np.log1p(-u)


def simulate(spec: GeneratorSpec) -> Dataset:
    rng = np.random.default_rng(int(spec.seed))
    n = int(spec.sample_size)
    codes = np.empty((n, len(spec.schema.variables)), dtype=np.int64)
    for v, p in enumerate(spec.category_probabilities):
        codes[:, v] = rng.choice(p.size, size=n, p=p)
    latent = encode_codes(codes, spec.schema) @ spec.params.beta + logistic_draws(rng, n)
    severity = np.searchsorted(spec.params.cutoffs, latent, side="left")
    return Dataset(spec.schema, severity, codes)


def simulate_from_crosstabs(spec: CrosstabSpec) -> Dataset:
    rng = np.random.default_rng(int(spec.seed))
    totals = spec.class_totals
    severity = np.repeat(np.arange(totals.size), totals)
    rng.shuffle(severity)
    codes = np.empty((severity.size, len(spec.schema.variables)), dtype=np.int64)
    for v, table in enumerate(spec.counts):
        for j in range(totals.size):
            labels = np.repeat(np.arange(table.shape[0]), table[:, j])
            rng.shuffle(labels)
            codes[severity == j, v] = labels
    return Dataset(spec.schema, severity, codes)


@dataclass(frozen=True)
class ProfileTable:
    """Every covariate profile with its exact class probabilities and weight."""

    codes: np.ndarray  # M x V category indices
    X: np.ndarray  # M x K dummies
    class_probs: np.ndarray  # M x J
    weights: np.ndarray  # M, occurrence probability under independence

    def __len__(self) -> int:
        return self.codes.shape[0]

    def __iter__(self):
        return iter(zip(self.X, self.class_probs, self.weights))

    @property
    def class_shares(self) -> np.ndarray:
        return self.weights @ self.class_probs


def enumerate_profiles(spec: GeneratorSpec) -> ProfileTable:
    sizes = [len(v.categories) for v in spec.schema.variables]
    total = int(np.prod(sizes, dtype=np.int64)) if sizes else 1
    if total > MAX_PROFILES:
        raise DataError(f"{total} covariate profiles exceed the enumeration limit of {MAX_PROFILES}")
    codes = np.array(list(itertools.product(*[range(s) for s in sizes])), dtype=np.int64).reshape(total, len(sizes))
    weights = np.ones(total)
    for v, p in enumerate(spec.category_probabilities):
        weights *= p[codes[:, v]]
    X = encode_codes(codes, spec.schema)
    return ProfileTable(codes, X, class_probabilities(X, spec.params), weights)


# -- spec files ---------------------------------------------------------------

def _nested(tree: dict, key: str, schema: CategoricalSchema, required: bool = True) -> dict:
    block = tree.get(key)
    if block is None:
        if required:
            raise SchemaError(f"generator spec: missing key {key!r}")
        return {}
    if not isinstance(block, dict):
        raise SchemaError(f"generator spec: {key!r} must map variable names to category values")
    for name in block:
        schema.variable(name)
    return block


def generator_spec_from_dict(tree: dict) -> GeneratorSpec | CrosstabSpec:
    """Build a generator from a schema document extended with generator keys.

    ``frequencies`` gives relative weights per category (normalised here);
    ``beta`` gives coefficients per selected category; ``cutoffs``, ``n``
    and ``seed`` complete an ordered-logit spec. A ``crosstabs`` key instead
    yields a :class:`CrosstabSpec`.
    """
    schema = schema_from_dict(tree)
    seed = tree.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise SchemaError("generator spec: 'seed' must be an integer")

    if "crosstabs" in tree:
        block = _nested(tree, "crosstabs", schema)
        counts = []
        for spec in schema.variables:
            table = block.get(spec.name)
            if table is None:
                raise SchemaError(f"variable {spec.name!r}: missing crosstab")
            try:
                counts.append([table[c] for c in spec.categories])
            except KeyError as exc:
                raise SchemaError(f"variable {spec.name!r}: crosstab lacks category {exc}") from None
        return CrosstabSpec(schema, counts, seed)

    freqs = _nested(tree, "frequencies", schema)
    betas = _nested(tree, "beta", schema, required=False)
    probs = []
    for spec in schema.variables:
        weights = freqs.get(spec.name)
        if weights is None:
            raise SchemaError(f"variable {spec.name!r}: missing frequencies")
        w = np.array([float(weights.get(c, 0.0)) for c in spec.categories])
        extra = set(weights) - set(spec.categories)
        if extra:
            raise SchemaError(f"variable {spec.name!r}: frequencies for unknown categories {sorted(extra)}")
        if np.any(w < 0) or w.sum() <= 0:
            raise SchemaError(f"variable {spec.name!r}: frequencies must be nonnegative with a positive total")
        probs.append(w / w.sum())
    beta = []
    for spec in schema.variables:
        given = betas.get(spec.name, {})
        extra = set(given) - set(spec.selected)
        if extra:
            raise SchemaError(f"variable {spec.name!r}: beta given for unselected categories {sorted(extra)}")
        beta.extend(float(given.get(c, 0.0)) for c in spec.selected)
    if "cutoffs" not in tree:
        raise SchemaError("generator spec: missing key 'cutoffs'")
    try:
        params = OrderedLogitParams(beta, tree["cutoffs"])
    except ValueError as exc:
        raise SchemaError(f"generator spec: {exc}") from None
    n = tree.get("n", 1)
    if not isinstance(n, int) or isinstance(n, bool):
        raise SchemaError("generator spec: 'n' must be an integer")
    return GeneratorSpec(schema, probs, params, n, seed)


def parse_generator_spec(text: str) -> GeneratorSpec | CrosstabSpec:
    try:
        tree = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"generator spec: malformed JSON ({exc})") from None
    return generator_spec_from_dict(tree)


def spec_sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
