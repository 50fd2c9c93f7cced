"""Declarative scenario files and their deterministic reports.

A scenario is a JSON document::

    {"schema": 1, "name": ..., "source": ..., "p": 5,
     "params": {"n": {"default": 5, "min": 2, "max": 8}},
     "vars": ["x{1..n}"], "reserved": [],
     "derivations": {"D": "sum(i=1..n; x{i}^2 d[x{i}])"},
     "steps": [{"id": "pp", "op": "p_power", "derivation": "D"}, ...],
     "expect": [{"step": "pp", "value": "0"}, ...]}

Strings are templates: ``sum(i=a..b; body)`` repeats ``body`` joined by
``+`` and ``{expr}`` splices an integer computed from the parameters.  In
name lists, ``x{1..n}`` expands to ``x1, ..., xn``.  Step arguments refer to
earlier results as ``@step`` or ``@step.field``.
"""
from __future__ import annotations

import ast
import graphlib
import heapq
import json
import operator
import re
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Callable

from . import blowup, derivation, ledger, quotient
from .blowup import ChartMap, DivisorSpec
from .derivation import Derivation
from .ringcore import AlgebraError, Poly, RingCtx, parse_poly

SCHEMA_VERSION = 1
DEFAULT_DMAX = 6


class SchemaError(ValueError):
    pass


class StepError(RuntimeError):
    def __init__(self, step_id: str, cause: BaseException):
        self.step_id = step_id
        self.cause = cause
        super().__init__(f"step {step_id!r} failed: {type(cause).__name__}: {cause}")


class UnknownFormat(ValueError):
    pass


# ---------------------------------------------------------------------------
# exact expression evaluation

_BINOPS: dict[type, Callable] = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Mod: operator.mod,
    ast.FloorDiv: operator.floordiv,
}
_CMPOPS: dict[type, Callable] = {
    ast.Eq: operator.eq,
    ast.NotEq: operator.ne,
    ast.Lt: operator.lt,
    ast.LtE: operator.le,
    ast.Gt: operator.gt,
    ast.GtE: operator.ge,
}
_FUNCS: dict[str, Callable] = {"max": max, "min": min}


def evaluate(expr: Any, env: dict[str, Any]) -> Fraction | bool:
    """Evaluate an arithmetic/boolean expression exactly over Q.

    ``^`` is power; ``/`` is exact division.  Only parameters in ``env`` may
    be named.
    """
    if isinstance(expr, bool):
        return expr
    if isinstance(expr, int):
        return Fraction(expr)
    if isinstance(expr, Fraction):
        return expr
    if not isinstance(expr, str):
        raise SchemaError(f"cannot evaluate {expr!r}")
    try:
        tree = ast.parse(expr.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise SchemaError(f"bad expression {expr!r}: {exc.msg}") from None

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, bool)):
            return node.value if isinstance(node.value, bool) else Fraction(node.value)
        if isinstance(node, ast.Name):
            if node.id in ("true", "True"):
                return True
            if node.id in ("false", "False"):
                return False
            if node.id not in env:
                raise SchemaError(f"unknown parameter {node.id!r} in {expr!r}")
            val = env[node.id]
            return val if isinstance(val, bool) else Fraction(val)
        if isinstance(node, ast.BinOp):
            left, right = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Pow):
                if right.denominator != 1:
                    raise SchemaError(f"non-integer exponent in {expr!r}")
                return left ** int(right)
            op = _BINOPS.get(type(node.op))
            if op is None:
                raise SchemaError(f"operator not allowed in {expr!r}")
            return Fraction(op(left, right))
        if isinstance(node, ast.UnaryOp):
            val = ev(node.operand)
            if isinstance(node.op, ast.USub):
                return -val
            if isinstance(node.op, ast.UAdd):
                return val
            if isinstance(node.op, ast.Not):
                return not val
        if isinstance(node, ast.Compare):
            left = ev(node.left)
            for op, comp in zip(node.ops, node.comparators):
                right = ev(comp)
                if not _CMPOPS[type(op)](left, right):
                    return False
                left = right
            return True
        if isinstance(node, ast.BoolOp):
            vals = [ev(v) for v in node.values]
            return all(vals) if isinstance(node.op, ast.And) else any(vals)
        if (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS
            and node.args
            and not node.keywords
        ):
            return _FUNCS[node.func.id](ev(a) for a in node.args)
        raise SchemaError(f"unsupported syntax in expression {expr!r}")

    return ev(tree)


def evaluate_int(expr: Any, env: dict[str, Any]) -> int:
    val = evaluate(expr, env)
    if isinstance(val, bool) or val.denominator != 1:
        raise SchemaError(f"expression {expr!r} is not an integer (got {val})")
    return int(val)


# ---------------------------------------------------------------------------
# templates

_RANGE_NAME_RE = re.compile(r"^(?P<pre>[^{}]*)\{(?P<a>[^{}]+?)\.\.(?P<b>[^{}]+?)\}(?P<post>[^{}]*)$")


def _matching(text: str, start: int, open_ch: str, close_ch: str) -> int:
    depth = 0
    for k in range(start, len(text)):
        if text[k] == open_ch:
            depth += 1
        elif text[k] == close_ch:
            depth -= 1
            if depth == 0:
                return k
    raise SchemaError(f"unbalanced {open_ch!r} in template {text!r}")


def parse_range(spec: str, env: dict[str, Any]) -> tuple[str, range]:
    """``"i=2..n"`` -> ``("i", range(2, n + 1))``."""
    m = re.fullmatch(r"\s*([A-Za-z_]\w*)\s*=\s*(.+?)\s*\.\.\s*(.+?)\s*", spec)
    if not m:
        raise SchemaError(f"bad range {spec!r}, expected 'i=a..b'")
    a, b = evaluate_int(m.group(2), env), evaluate_int(m.group(3), env)
    return m.group(1), range(a, b + 1)


def expand(text: str, env: dict[str, Any]) -> str:
    """Expand ``sum(i=a..b; body)`` and ``{expr}`` in a template string."""
    out = []
    k = 0
    while k < len(text):
        if text.startswith("sum(", k) and (k == 0 or not (text[k - 1].isalnum() or text[k - 1] == "_")):
            close = _matching(text, k + 3, "(", ")")
            inner = text[k + 4 : close]
            if ";" not in inner:
                raise SchemaError(f"sum(...) needs 'i=a..b; body' in {text!r}")
            head, body = inner.split(";", 1)
            var, rng = parse_range(head, env)
            pieces = [expand(body.strip(), {**env, var: i}) for i in rng]
            out.append(" + ".join(pieces) if pieces else "0")
            k = close + 1
        elif text[k] == "{":
            close = _matching(text, k, "{", "}")
            out.append(str(evaluate_int(text[k + 1 : close], env)))
            k = close + 1
        else:
            out.append(text[k])
            k += 1
    return "".join(out)


def expand_names(entries: Any, env: dict[str, Any]) -> list[str]:
    if isinstance(entries, str):
        entries = [entries]
    names = []
    for entry in entries:
        m = _RANGE_NAME_RE.match(entry)
        if m:
            a, b = evaluate_int(m.group("a"), env), evaluate_int(m.group("b"), env)
            for i in range(a, b + 1):
                names.append(expand(m.group("pre"), env) + str(i) + expand(m.group("post"), env))
        else:
            names.append(expand(entry, env))
    return names


# ---------------------------------------------------------------------------
# values


@dataclass(frozen=True)
class ErrorValue:
    kind: str
    message: str


INCONCLUSIVE = "inconclusive"


def render(value: Any) -> Any:
    """JSON-ready, deterministic rendering of a step value."""
    if value is None:
        return INCONCLUSIVE
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, Fraction):
        return int(value) if value.denominator == 1 else str(value)
    if isinstance(value, (Poly, Derivation, ChartMap)):
        return str(value)
    if isinstance(value, quotient.NoSolutionUpTo):
        return f"no_solution({value.dmax})"
    if isinstance(value, ErrorValue):
        return {"error": value.kind, "message": value.message}
    if isinstance(value, ledger.Verdict):
        return str(value.label)
    if isinstance(value, dict):
        return {str(k): render(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [render(v) for v in value]
    if isinstance(value, str):
        return value
    return str(value)


# ---------------------------------------------------------------------------
# reports


@dataclass
class Check:
    target: str
    expected: Any
    status: str
    note: str = ""

    def as_dict(self) -> dict:
        return {"target": self.target, "expected": self.expected, "status": self.status, "note": self.note}


@dataclass
class StepOutcome:
    id: str
    op: str
    computed: Any
    status: str
    seconds: float = 0.0
    checks: list[Check] = field(default_factory=list)

    def as_dict(self, timings: bool = False) -> dict:
        d = {
            "id": self.id,
            "op": self.op,
            "computed": self.computed,
            "status": self.status,
            "checks": [c.as_dict() for c in self.checks],
        }
        if timings:
            d["seconds"] = round(self.seconds, 6)
        return d


@dataclass
class Report:
    name: str
    source: str
    params: dict[str, Any]
    steps: list[StepOutcome]
    status: str
    schema: int = SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    @property
    def inconclusive(self) -> list[str]:
        return [s.id for s in self.steps if s.status == "inconclusive"]

    @property
    def failures(self) -> list[Check]:
        return [c for s in self.steps for c in s.checks if c.status == "fail"]

    def as_dict(self, timings: bool = False) -> dict:
        return {
            "schema": self.schema,
            "name": self.name,
            "source": self.source,
            "params": self.params,
            "status": self.status,
            "inconclusive": self.inconclusive,
            "steps": [s.as_dict(timings) for s in self.steps],
        }


def emit_report(report: Report, fmt: str = "text", timings: bool = False) -> bytes:
    """Render a report.  ``json`` output is canonical and byte-deterministic
    (wall-clock times are only included on request)."""
    if fmt == "json":
        return json.dumps(report.as_dict(timings), sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    if fmt == "text":
        return _text_report(report).encode("utf-8")
    raise UnknownFormat(f"unknown report format {fmt!r} (use text or json)")


def parse_report(data: bytes | str) -> Report:
    d = json.loads(data)
    steps = [
        StepOutcome(
            s["id"],
            s["op"],
            s["computed"],
            s["status"],
            s.get("seconds", 0.0),
            [Check(c["target"], c["expected"], c["status"], c.get("note", "")) for c in s["checks"]],
        )
        for s in d["steps"]
    ]
    return Report(d["name"], d["source"], d["params"], steps, d["status"], d["schema"])


def _short(value: Any, width: int = 96) -> str:
    text = value if isinstance(value, str) else json.dumps(value, sort_keys=True)
    return text if len(text) <= width else text[: width - 3] + "..."


def _text_report(report: Report) -> str:
    params = ", ".join(f"{k}={v}" for k, v in sorted(report.params.items()))
    lines = [
        f"scenario {report.name}  [{params}]",
        f"source: {report.source}",
        "",
    ]
    for s in report.steps:
        lines.append(f"{s.status.upper():>12}  {s.id:<18} {s.op:<20} {s.seconds * 1000:8.1f} ms")
        lines.append(f"{'':14}= {_short(s.computed)}")
        for c in s.checks:
            note = f"  ({c.note})" if c.note else ""
            lines.append(f"{'':14}{c.status:>5}: {c.target} == {_short(c.expected)}{note}")
    lines.append("")
    flagged = f", {len(report.inconclusive)} inconclusive" if report.inconclusive else ""
    lines.append(f"overall: {report.status.upper()} ({len(report.failures)} failed checks{flagged})")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# loading


def corpus_dir() -> Path:
    return Path(str(resources.files("pquot") / "corpus"))


def corpus_paths() -> list[Path]:
    return sorted(corpus_dir().glob("*.json"))


def load_scenario(path_or_name: str | Path) -> dict:
    path = Path(path_or_name)
    if not path.exists():
        candidate = corpus_dir() / f"{path_or_name}.json"
        if not candidate.exists():
            raise SchemaError(f"no scenario file or corpus entry named {str(path_or_name)!r}")
        path = candidate
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from None
    validate_scenario(doc)
    return doc


_REQUIRED = {"schema", "name", "p", "vars", "steps", "expect"}
_ALLOWED = _REQUIRED | {"source", "description", "params", "reserved", "derivations"}


def validate_scenario(doc: Any) -> None:
    if not isinstance(doc, dict):
        raise SchemaError("scenario must be a JSON object")
    missing = _REQUIRED - set(doc)
    if missing:
        raise SchemaError(f"scenario is missing keys {sorted(missing)}")
    extra = set(doc) - _ALLOWED
    if extra:
        raise SchemaError(f"unknown scenario keys {sorted(extra)}")
    if doc["schema"] != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {doc['schema']!r}")
    if not isinstance(doc["steps"], list) or not isinstance(doc["expect"], list):
        raise SchemaError("steps and expect must be lists")
    ids = []
    for step in doc["steps"]:
        if not isinstance(step, dict) or "id" not in step or "op" not in step:
            raise SchemaError(f"every step needs 'id' and 'op': {step!r}")
        if step["op"] not in OPS:
            raise SchemaError(f"step {step['id']!r}: unknown op {step['op']!r}")
        ids.append(step["id"])
    if len(set(ids)) != len(ids):
        raise SchemaError("duplicate step ids")
    for exp in doc["expect"]:
        if not isinstance(exp, dict) or "step" not in exp or "value" not in exp:
            raise SchemaError(f"every expectation needs 'step' and 'value': {exp!r}")
        if exp["step"].split(".", 1)[0] not in ids:
            raise SchemaError(f"expectation references unknown step {exp['step']!r}")
    for step in doc["steps"]:
        for ref in _references(step):
            if ref not in ids:
                raise SchemaError(f"step {step['id']!r} references unknown step {ref!r}")


def _references(obj: Any) -> set[str]:
    refs = set()
    if isinstance(obj, str) and obj.startswith("@"):
        refs.add(obj[1:].split(".", 1)[0])
    elif isinstance(obj, dict):
        for k, v in obj.items():
            if k != "id":
                refs |= _references(v)
    elif isinstance(obj, list):
        for v in obj:
            refs |= _references(v)
    return refs


def scenario_params(doc: dict) -> dict[str, dict]:
    params = {"p": {"default": doc["p"]}, "dmax": {"default": DEFAULT_DMAX}}
    for k, spec in (doc.get("params") or {}).items():
        spec = spec if isinstance(spec, dict) else {"default": spec}
        params[k] = {**params.get(k, {}), **spec}
    return params


def resolve_params(doc: dict, overrides: dict[str, Any] | None) -> dict[str, int]:
    params = scenario_params(doc)
    values = {k: spec.get("default") for k, spec in params.items()}
    for k, v in (overrides or {}).items():
        if k not in params:
            raise SchemaError(f"parameter {k!r} is not declared by scenario {doc['name']!r}")
        values[k] = v
    out = {}
    for k, v in values.items():
        if v is None:
            raise SchemaError(f"parameter {k!r} has no value")
        try:
            out[k] = int(v)
        except (TypeError, ValueError):
            raise SchemaError(f"parameter {k}={v!r} is not an integer") from None
    for k, spec in params.items():
        v = out[k]
        lo = spec.get("min")
        hi = spec.get("max")
        if lo is not None and v < evaluate_int(lo, out):
            raise SchemaError(f"parameter {k}={v} is below its minimum {lo}")
        if hi is not None and v > evaluate_int(hi, out):
            raise SchemaError(f"parameter {k}={v} is above its maximum {hi}")
        if "choices" in spec and v not in spec["choices"]:
            raise SchemaError(f"parameter {k}={v} not among {spec['choices']}")
    return out


# ---------------------------------------------------------------------------
# running


class _Run:
    def __init__(self, doc: dict, env: dict[str, int]):
        self.doc = doc
        self.env = env
        self.p = env["p"]
        self.base = RingCtx(
            self.p,
            expand_names(doc["vars"], env),
            expand_names(doc.get("reserved", []), env),
        )
        self.values: dict[str, Any] = {}
        self.derivations: dict[str, Derivation] = {}
        for name, lit in (doc.get("derivations") or {}).items():
            if isinstance(lit, dict):
                ctx = self.ring(lit.get("ring"))
                lit = lit["literal"]
            else:
                ctx = self.base
            self.derivations[name] = Derivation.parse(expand(lit, env), ctx)

    # argument resolution
    def ref(self, text: str) -> Any:
        key, _, fieldname = text[1:].partition(".")
        val = self.values[key]
        if isinstance(val, ErrorValue):
            raise SchemaError(f"reference {text} points at a failed step")
        if fieldname:
            if not isinstance(val, dict) or fieldname not in val:
                raise SchemaError(f"step {key!r} has no field {fieldname!r}")
            val = val[fieldname]
        return val

    def ring(self, spec: Any) -> RingCtx:
        if spec is None:
            return self.base
        if isinstance(spec, str) and spec.startswith("@"):
            val = self.ref(spec)
            if isinstance(val, ChartMap):
                return val.target
            if isinstance(val, (Poly, Derivation)):
                return val.ctx
            raise SchemaError(f"{spec} does not name a ring")
        if isinstance(spec, dict):
            return RingCtx(
                self.p,
                expand_names(spec["vars"], self.env),
                expand_names(spec.get("reserved", []), self.env),
            )
        raise SchemaError(f"bad ring specification {spec!r}")

    def derivation(self, arg: Any, ctx: RingCtx) -> Derivation:
        if isinstance(arg, str) and arg.startswith("@"):
            val = self.ref(arg)
            if not isinstance(val, Derivation):
                raise SchemaError(f"{arg} is not a derivation")
            return val
        if isinstance(arg, str) and arg in self.derivations:
            return self.derivations[arg]
        return Derivation.parse(expand(arg, self.env), ctx)

    def poly(self, arg: Any, ctx: RingCtx) -> Poly:
        if isinstance(arg, str) and arg.startswith("@"):
            val = self.ref(arg)
            if not isinstance(val, Poly):
                raise SchemaError(f"{arg} is not a polynomial")
            return val
        return parse_poly(expand(str(arg), self.env), ctx)

    def chart(self, arg: Any) -> ChartMap:
        val = self.ref(arg) if isinstance(arg, str) and arg.startswith("@") else None
        if not isinstance(val, ChartMap):
            raise SchemaError(f"{arg!r} is not a chart reference")
        return val

    def number(self, arg: Any) -> Fraction:
        if isinstance(arg, str) and arg.startswith("@"):
            val = self.ref(arg)
            if isinstance(val, bool) or not isinstance(val, (int, Fraction)):
                raise SchemaError(f"{arg} is not a number")
            return Fraction(val)
        val = evaluate(arg, self.env)
        if isinstance(val, bool):
            raise SchemaError(f"{arg!r} is boolean, expected a number")
        return val

    def integer(self, arg: Any) -> int:
        val = self.number(arg)
        if val.denominator != 1:
            raise SchemaError(f"{arg!r} is not an integer")
        return int(val)

    def boolean(self, arg: Any) -> bool:
        if isinstance(arg, str) and arg.startswith("@"):
            val = self.ref(arg)
        else:
            val = evaluate(arg, self.env)
        if not isinstance(val, bool):
            raise SchemaError(f"{arg!r} is not a boolean")
        return val

    def names(self, arg: Any) -> list[str]:
        return expand_names(arg, self.env)

    def dmax(self, step: dict) -> int:
        return self.integer(step.get("dmax", "dmax"))


def _step_ring(run: _Run, step: dict) -> RingCtx:
    return run.ring(step.get("ring"))


def _op_p_power(run, step):
    return derivation.p_power(run.derivation(step["derivation"], _step_ring(run, step)))


def _op_p_closed(run, step):
    return derivation.is_p_closed(run.derivation(step["derivation"], _step_ring(run, step)))


def _op_pclosed_scalar(run, step):
    h = derivation.is_p_closed(run.derivation(step["derivation"], _step_ring(run, step)))
    scalar = h.is_constant() and not h.is_zero()
    return {"h": h, "nonzero_scalar": scalar, "value": h.constant_term() if scalar else None}


def _op_multiplicative(run, step):
    ctx = _step_ring(run, step)
    D = run.derivation(step["derivation"], ctx)
    units = [run.poly(u, D.ctx) for u in step.get("units", [])]
    return derivation.is_multiplicative(D, units)


def _op_bracket(run, step):
    ctx = _step_ring(run, step)
    return derivation.bracket(run.derivation(step["left"], ctx), run.derivation(step["right"], ctx))


def _op_apply(run, step):
    ctx = _step_ring(run, step)
    D = run.derivation(step["derivation"], ctx)
    return D.apply(run.poly(step["poly"], D.ctx))


def _op_chart(run, step):
    ctx = _step_ring(run, step)
    kind = step.get("kind", "standard")
    target = step.get("target_vars")
    rename = run.names(target) if target is not None else None
    if kind == "monomial":
        tctx = ctx.renamed(rename) if rename is not None else ctx
        images = {}
        for entry in step["images"]:
            if "for" in entry:
                var, rng = parse_range(entry["for"], run.env)
                envs = [{**run.env, var: i} for i in rng]
            else:
                envs = [run.env]
            for env in envs:
                images[expand(entry["var"], env)] = expand(entry["image"], env)
        return blowup.monomial_chart(ctx, tctx, images)
    center = run.names(step["center"])
    chart_var = expand(step["chart"], run.env)
    if kind == "standard":
        return blowup.standard_chart(ctx, center, chart_var, rename)
    if kind == "weighted":
        spec = step["weights"]
        if isinstance(spec, dict):
            default = spec.get("default", 1)
            weights = [run.integer(spec.get(v, default)) for v in center]
        else:
            weights = [run.integer(w) for w in spec]
        return blowup.weighted_chart(ctx, center, weights, chart_var, rename)
    raise SchemaError(f"unknown chart kind {kind!r}")


def _op_compose(run, step):
    charts = [run.chart(c) for c in step["charts"]]
    if not charts:
        raise SchemaError("compose needs at least one chart")
    acc = charts[0]
    for c in charts[1:]:
        acc = blowup.compose(acc, c)
    return acc


def _op_jacobian(run, step):
    from .ringcore import jacobian_det

    return jacobian_det(run.chart(step["chart"]))


def _op_pullback(run, step):
    m = run.chart(step["chart"])
    return blowup.pullback_derivation(run.derivation(step["derivation"], m.source), m)


def _op_saturate(run, step):
    ctx = _step_ring(run, step)
    D = run.derivation(step["derivation"], ctx)
    k, S = derivation.saturate(D, expand(step["var"], run.env))
    return {"k": k, "S": S, "a_fol": -k}


def _op_invariant(run, step):
    D = run.derivation(step["derivation"], _step_ring(run, step))
    return derivation.is_invariant_divisor(D, expand(step["var"], run.env))


def _op_strict_transform(run, step):
    m = run.chart(step["chart"])
    strict, mult = blowup.strict_transform(run.poly(step["poly"], m.source), m, expand(step["var"], run.env))
    return {"strict": strict, "mult": mult}


def _divisors(run, entries, ctx) -> DivisorSpec:
    return DivisorSpec(
        (expand(e["name"], run.env), run.number(e["coeff"]), run.poly(e["poly"], ctx)) for e in entries
    )


def _op_chart_discrepancy(run, step):
    m = run.chart(step["chart"])
    delta = _divisors(run, step.get("divisors", []), m.source)
    return blowup.chart_discrepancy(m, delta, expand(step["var"], run.env))


def _op_quotient_discrepancy(run, step):
    p = run.integer(step.get("p", "p"))
    rec = ledger.DiscrepancyRecord.build(
        expand(step.get("name", step["id"]), run.env),
        run.number(step["a_pair"]),
        run.number(step["a_fol"]),
        run.boolean(step["invariant"]),
        p,
    )
    return {**rec.as_dict(), "integral": rec.integral}


def _op_image_coefficient(run, step):
    return ledger.image_divisor_coefficient(
        run.number(step["coeff"]), run.boolean(step["invariant"]), run.integer(step.get("p", "p"))
    )


def _op_classify(run, step):
    v = ledger.classify_quadratic_quotient(run.integer(step.get("n", "n")), run.integer(step.get("p", "p")))
    return {"label": str(v.label), "a_F": v.metadata["a_F"], "bound": v.metadata["bound"], "witness": v.witness}


def _records_table(records, verdict) -> dict:
    return {
        "names": [r.name for r in records],
        "a_pair": [r.a_pair for r in records],
        "a_fol": [r.a_fol for r in records],
        "invariant": [r.invariant for r in records],
        "a_quotient": [r.a_quotient for r in records],
        "lc": verdict.is_lc,
        "witness": verdict.witness,
    }


def _op_family_cascade(run, step):
    records, verdict = ledger.family_cascade(
        run.integer(step.get("n", "n")), run.integer(step.get("p", "p")), run.integer(step.get("m", "m"))
    )
    return _records_table(records, verdict)


def _op_char3_cascade(run, step):
    records, verdict = ledger.char3_cascade(run.integer(step.get("p", "p")), run.integer(step.get("r", "r")))
    es = [r for r in records if r.name.startswith("E")]
    fs = [r for r in records if r.name.startswith("F")]
    return {
        "a_pair_E": [r.a_pair for r in es],
        "a_pair_F": [r.a_pair for r in fs],
        "a_fol_E": [r.a_fol for r in es],
        "a_fol_F": [r.a_fol for r in fs],
        "a_quotient_E": [r.a_quotient for r in es],
        "a_quotient_F": [r.a_quotient for r in fs],
        "lc": verdict.is_lc,
        "witness": verdict.witness,
    }


def _op_stable_volume(run, step):
    args = [run.integer(step.get(k, k)) for k in ("n", "p", "r", "s")]
    return ledger.stable_volume(*args)


def _op_kernel(run, step):
    D = run.derivation(step["derivation"], _step_ring(run, step))
    kb = quotient.truncated_kernel(D, run.dmax(step))
    return {"dims": list(kb.dims), "dim": len(kb.basis), "basis": list(kb.basis)}


def _op_in_kernel(run, step):
    D = run.derivation(step["derivation"], _step_ring(run, step))
    return all(not D.apply(run.poly(g, D.ctx)) for g in step["polys"])


def _op_hilbert_match(run, step):
    D = run.derivation(step["derivation"], _step_ring(run, step))
    gens = [run.poly(g, D.ctx) for g in step["gens"]]
    table = quotient.subalgebra_hilbert_match(gens, D, run.dmax(step))
    return {"table": [table[d] for d in sorted(table)], "all": all(table.values())}


def _op_lift_invariant(run, step):
    D = run.derivation(step["derivation"], _step_ring(run, step))
    out = quotient.lift_invariant(D, run.poly(step["poly"], D.ctx), expand(step["var"], run.env), run.dmax(step))
    return out


def _op_mprimary(run, step):
    D = run.derivation(step["derivation"], _step_ring(run, step))
    return quotient.mprimary_image_check(D, run.names(step["vars"]))


def _op_poly(run, step):
    return run.poly(step["expr"], _step_ring(run, step))


def _op_substitute(run, step):
    src = _step_ring(run, step)
    dst = run.ring(step.get("target"))
    f = run.poly(step["poly"], src)
    images = {expand(k, run.env): run.poly(v, dst) for k, v in step["images"].items()}
    from .ringcore import substitute

    return substitute(f, images, dst)


def _op_value(run, step):
    return run.number(step["expr"])


def _op_equal(run, step):
    vals = [run.ref(v) if isinstance(v, str) and v.startswith("@") else v for v in step["values"]]
    return all(v == vals[0] for v in vals[1:])


OPS: dict[str, Callable[[_Run, dict], Any]] = {
    "p_power": _op_p_power,
    "p_closed": _op_p_closed,
    "pclosed_scalar": _op_pclosed_scalar,
    "multiplicative": _op_multiplicative,
    "bracket": _op_bracket,
    "apply": _op_apply,
    "chart": _op_chart,
    "compose": _op_compose,
    "jacobian": _op_jacobian,
    "pullback": _op_pullback,
    "saturate": _op_saturate,
    "invariant": _op_invariant,
    "strict_transform": _op_strict_transform,
    "chart_discrepancy": _op_chart_discrepancy,
    "quotient_discrepancy": _op_quotient_discrepancy,
    "image_coefficient": _op_image_coefficient,
    "classify": _op_classify,
    "family_cascade": _op_family_cascade,
    "char3_cascade": _op_char3_cascade,
    "stable_volume": _op_stable_volume,
    "kernel": _op_kernel,
    "in_kernel": _op_in_kernel,
    "hilbert_match": _op_hilbert_match,
    "lift_invariant": _op_lift_invariant,
    "mprimary": _op_mprimary,
    "poly": _op_poly,
    "substitute": _op_substitute,
    "equal": _op_equal,
    "value": _op_value,
}


# ---------------------------------------------------------------------------
# expectations


def _lookup(run: _Run, target: str) -> Any:
    key, _, fieldname = target.partition(".")
    val = run.values[key]
    if fieldname:
        if isinstance(val, ErrorValue):
            return val
        if not isinstance(val, dict) or fieldname not in val:
            raise SchemaError(f"expectation target {target!r}: no such field")
        val = val[fieldname]
    return val


def _expected_value(run: _Run, exp: dict, computed: Any) -> Any:
    """Build the expected value in the same type as the computed one."""
    spec = exp["value"]
    if isinstance(spec, dict) and "cases" in spec:
        for case in spec["cases"]:
            if run.boolean(case["when"]):
                return _expected_value(run, {"value": case["value"]}, computed)
        raise SchemaError("no case matched in expectation")
    if isinstance(spec, dict) and "for" in spec:
        var, rng = parse_range(spec["for"], run.env)
        items = computed if isinstance(computed, list) else [None] * len(rng)
        out = []
        for i, item in zip(rng, list(items) + [None] * max(0, len(rng) - len(items))):
            sub = _Run.__new__(_Run)
            sub.__dict__.update(run.__dict__)
            sub.env = {**run.env, var: i}
            out.append(_expected_value(sub, {"value": spec["value"]}, item))
        return out
    if isinstance(spec, dict) and "error" in spec:
        return ErrorValue(spec["error"], "")
    if isinstance(computed, Poly):
        return parse_poly(expand(str(spec), run.env), computed.ctx)
    if isinstance(computed, Derivation):
        return Derivation.parse(expand(str(spec), run.env), computed.ctx)
    if isinstance(computed, bool):
        return run.boolean(spec)
    if isinstance(computed, (int, Fraction)):
        return run.number(spec)
    if computed is None:
        return None if spec == INCONCLUSIVE else run.boolean(spec)
    if isinstance(computed, quotient.NoSolutionUpTo):
        return computed if spec == "no_solution" else spec
    if isinstance(computed, list):
        if not isinstance(spec, list):
            raise SchemaError("list value needs a list or a 'for' expectation")
        return [
            _expected_value(run, {"value": s}, c)
            for s, c in zip(spec, computed + [None] * (len(spec) - len(computed)))
        ]
    if isinstance(computed, str):
        return expand(str(spec), run.env)
    return spec


def _compare(run: _Run, exp: dict, computed: Any) -> Check:
    target = exp["step"]
    note = exp.get("note", "")
    if isinstance(computed, ErrorValue):
        spec = exp["value"]
        ok = isinstance(spec, dict) and spec.get("error") == computed.kind
        return Check(target, render(spec), "pass" if ok else "fail", note)
    expected = _expected_value(run, exp, computed)
    if computed is None and expected is not None:
        return Check(target, render(expected), "inconclusive", note)
    status = "pass" if expected == computed and type(expected) is type(computed) or _num_eq(expected, computed) else "fail"
    return Check(target, render(expected), status, note)


def _num_eq(a: Any, b: Any) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return False
    if isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)):
        return Fraction(a) == Fraction(b)
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(x == y or _num_eq(x, y) for x, y in zip(a, b))
    return False


def run_scenario(source: str | Path | dict, overrides: dict[str, Any] | None = None) -> Report:
    """Execute a scenario (file path, corpus name or parsed document)."""
    doc = source if isinstance(source, dict) else load_scenario(source)
    if isinstance(source, dict):
        validate_scenario(doc)
    env = resolve_params(doc, overrides)
    try:
        run = _Run(doc, env)
    except AlgebraError as exc:
        raise SchemaError(f"scenario {doc['name']!r}: {exc}") from exc
    steps = {s["id"]: s for s in doc["steps"]}
    order_index = {s["id"]: i for i, s in enumerate(doc["steps"])}
    sorter = graphlib.TopologicalSorter({sid: _references(s) for sid, s in steps.items()})
    # deterministic topological order: always the earliest ready step in file order
    try:
        sorter.prepare()
    except graphlib.CycleError as exc:
        raise SchemaError(f"steps form a cycle: {exc.args[1]}") from None
    order: list[str] = []
    ready: list[int] = []
    while sorter.is_active():
        for sid in sorter.get_ready():
            heapq.heappush(ready, order_index[sid])
        sid = doc["steps"][heapq.heappop(ready)]["id"]
        order.append(sid)
        sorter.done(sid)
    by_step: dict[str, list[dict]] = {}
    for exp in doc["expect"]:
        by_step.setdefault(exp["step"].split(".", 1)[0], []).append(exp)
    outcomes = []
    for sid in order:
        step = steps[sid]
        t0 = time.perf_counter()
        try:
            value = OPS[step["op"]](run, step)
        except AlgebraError as exc:
            expected_errors = {
                e["value"].get("error")
                for e in by_step.get(sid, [])
                if isinstance(e["value"], dict) and "error" in e["value"]
            }
            if type(exc).__name__ not in expected_errors:
                raise StepError(sid, exc) from exc
            value = ErrorValue(type(exc).__name__, str(exc))
        except SchemaError as exc:
            raise SchemaError(f"step {sid!r}: {exc}") from exc
        except (ValueError, ArithmeticError) as exc:
            raise StepError(sid, exc) from exc
        elapsed = time.perf_counter() - t0
        run.values[sid] = value
        checks = []
        for exp in by_step.get(sid, []):
            if "when" in exp and not run.boolean(exp["when"]):
                continue
            checks.append(_compare(run, exp, _lookup(run, exp["step"])))
        statuses = {c.status for c in checks}
        if "fail" in statuses:
            status = "fail"
        elif "inconclusive" in statuses:
            status = "inconclusive"
        elif checks:
            status = "pass"
        else:
            status = "computed"
        outcomes.append(StepOutcome(sid, step["op"], render(value), status, elapsed, checks))
    overall = "fail" if any(o.status == "fail" for o in outcomes) else "pass"
    return Report(doc["name"], doc.get("source", ""), dict(sorted(env.items())), outcomes, overall)


def list_scenarios() -> list[dict]:
    """Catalog of the bundled corpus with parameter ranges."""
    out = []
    for path in corpus_paths():
        doc = load_scenario(path)
        params = {}
        for k, spec in scenario_params(doc).items():
            params[k] = {key: spec[key] for key in ("default", "min", "max", "choices") if key in spec}
        out.append({"name": doc["name"], "source": doc.get("source", ""), "path": path.name, "params": params})
    return out
