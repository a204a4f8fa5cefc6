"""Reading and writing problems, vectors and weights.

Problem files are JSON documents validated against ``problem.schema.json``
(shipped with the package). Vector files hold one real number per line;
blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ProblemFormatError
from .model import Constant, RationalQuadratic, SpmfProblem


@lru_cache(maxsize=None)
def problem_schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("problem.schema.json").read_text())


def problem_from_dict(doc: dict) -> SpmfProblem:
    """Build a problem from a parsed JSON document.

    Raises:
        ProblemFormatError: schema violation or inconsistent sizes.
    """
    try:
        jsonschema.validate(doc, problem_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ProblemFormatError(f"{where}: {exc.message}") from None
    n, m = doc["n"], doc["m"]
    terms = doc["terms"]
    if len(terms) != m:
        raise ProblemFormatError(f"m = {m} but {len(terms)} terms given")
    mats, funcs = [], []
    for i, term in enumerate(terms):
        A = _square(term["matrix"], n, f"terms/{i}/matrix")
        spec = term["function"]
        if spec["kind"] == "constant":
            funcs.append(Constant(float(spec.get("value", 1.0))))
        else:
            funcs.append(RationalQuadratic(_square(spec["B"], n, f"terms/{i}/function/B")))
        mats.append(A)
    weights = doc.get("weights", "relative")
    if not isinstance(weights, str) and len(weights) != m:
        raise ProblemFormatError(f"expected {m} weights, got {len(weights)}")
    return SpmfProblem(mats, funcs, weights)


def _square(rows, n: int, where: str) -> np.ndarray:
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ProblemFormatError(f"{where}: expected a {n}x{n} matrix")
    return np.array(rows, dtype=float)


def problem_to_dict(problem: SpmfProblem, weights=None) -> dict:
    """JSON-ready document; weights default to the problem's explicit weight vector.

    Raises:
        ProblemFormatError: a coefficient function is not serializable.
    """
    terms = []
    for A, f in zip(problem.matrices, problem.functions):
        if isinstance(f, Constant):
            spec = {"kind": "constant", "value": float(f.value)}
        elif isinstance(f, RationalQuadratic):
            spec = {"kind": "rational_quadratic", "B": f.B.tolist()}
        else:
            raise ProblemFormatError(f"{f.kind} coefficients cannot be serialized")
        terms.append({"matrix": A.tolist(), "function": spec})
    w = problem.weights.tolist() if weights is None else weights
    return {"n": problem.n, "m": problem.m, "terms": terms, "weights": w}


def load_problem(path) -> SpmfProblem:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"{path}: invalid JSON ({exc})") from None
    return problem_from_dict(doc)


def save_problem(problem: SpmfProblem, path, weights=None) -> None:
    Path(path).write_text(json.dumps(problem_to_dict(problem, weights), indent=2) + "\n")


def read_vector(path) -> np.ndarray:
    """One real per line."""
    values = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise ProblemFormatError(f"{path}:{lineno}: not a real number: {line!r}") from None
    if not values:
        raise ProblemFormatError(f"{path}: no values")
    return np.array(values)


def write_vector(v, path) -> None:
    Path(path).write_text("".join(f"{float(x)!r}\n" for x in np.ravel(v)))


def read_weights(spec: str):
    """``"relative"``, ``"unit"`` or a file in vector format."""
    if spec in ("relative", "unit"):
        return spec
    return read_vector(spec)
