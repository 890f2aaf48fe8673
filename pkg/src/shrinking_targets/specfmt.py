"""Text format for theta and phi specs.

A spec is written as a call expression with keyword arguments, e.g.::

    constant(a=1)
    explicit(prefix=[1, 54, 148], tail=constant(a=1))
    shifted(base=logstack(depth=1), floor=4)
    power(eps="1/2")

Rationals are given as integers or quoted ``"p/q"`` strings.  Parsing uses
``ast`` and never evaluates code.
"""

from __future__ import annotations

import ast
from fractions import Fraction
from typing import Any, Callable, Dict

from . import cf_core, phi_funcs
from .errors import ConfigError, ValidationError


def _literal(node: ast.AST, where: str) -> Any:
    if isinstance(node, ast.Call):
        return node
    if isinstance(node, ast.List):
        return [_literal(e, where) for e in node.elts]
    if isinstance(node, ast.Name):
        return node.id
    try:
        return ast.literal_eval(node)
    except ValueError:
        raise ConfigError(f"{where}: unsupported value {ast.dump(node)}") from None


def _rational(x: Any, key: str) -> Fraction:
    if isinstance(x, bool):
        raise ConfigError(f"{key}: expected a rational, got {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse rational {x!r}") from None
    raise ConfigError(f"{key}: expected integer or \"p/q\" string, got {x!r}")


def _int(x: Any, key: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ConfigError(f"{key}: expected integer, got {x!r}")
    return x


def _parse_call(text: str, what: str) -> ast.Call:
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"{what}: cannot parse {text!r}: {exc.msg}") from None
    node = tree.body
    if isinstance(node, ast.Name):
        node = ast.Call(func=node, args=[], keywords=[])
    if not isinstance(node, ast.Call) or not isinstance(node.func, ast.Name):
        raise ConfigError(f"{what}: expected kind(key=value, ...), got {text!r}")
    return node


def _kwargs(node: ast.Call, allowed: set, what: str) -> Dict[str, Any]:
    if node.args:
        raise ConfigError(f"{what}: use keyword arguments only")
    out = {}
    for kw in node.keywords:
        if kw.arg not in allowed:
            raise ConfigError(f"{what}: unknown key {kw.arg!r} for {node.func.id}")
        out[kw.arg] = _literal(kw.value, what)
    return out


def _theta_from_node(node: ast.Call) -> cf_core.IrrationalSpec:
    kind = node.func.id
    what = f"theta {kind}"
    builders: Dict[str, Callable[[Dict[str, Any]], cf_core.IrrationalSpec]] = {
        "constant": lambda kw: cf_core.ConstantQuotient(_int(kw["a"], "a")),
        "golden": lambda kw: cf_core.ConstantQuotient(1),
        "linear": lambda kw: cf_core.LinearQuotient(),
        "prop2": lambda kw: cf_core.PaperProp2(),
        "custom": lambda kw: cf_core.Custom.named(str(kw["rule"])),
        "explicit": lambda kw: cf_core.ExplicitList(
            tuple(_int(a, "prefix") for a in kw["prefix"]),
            _theta_from_node(kw["tail"]) if "tail" in kw else cf_core.ConstantQuotient(1),
        ),
    }
    keys = {"constant": {"a"}, "golden": set(), "linear": set(), "prop2": set(), "custom": {"rule"}, "explicit": {"prefix", "tail"}}
    if kind not in builders:
        raise ConfigError(f"unknown theta kind {kind!r}; known: {sorted(builders)}")
    kw = _kwargs(node, keys[kind], what)
    required = {"constant": {"a"}, "custom": {"rule"}, "explicit": {"prefix"}}.get(kind, set())
    for key in required - set(kw):
        raise ConfigError(f"{what}: missing key {key!r}")
    if "tail" in kw and not isinstance(kw["tail"], ast.Call):
        raise ConfigError(f"{what}: tail must be a theta spec")
    try:
        return builders[kind](kw)
    except ValidationError as exc:
        raise ConfigError(f"{what}: {exc}") from None


def _phi_from_node(node: ast.Call) -> phi_funcs.PhiSpec:
    kind = node.func.id
    what = f"phi {kind}"
    keys = {"constant": {"c"}, "logstack": {"depth"}, "power": {"eps"}, "table": {"values"}, "shifted": {"base", "floor"}}
    if kind not in keys:
        raise ConfigError(f"unknown phi kind {kind!r}; known: {sorted(keys)}")
    kw = _kwargs(node, keys[kind], what)
    required = {"constant": {"c"}, "logstack": {"depth"}, "power": {"eps"}, "table": {"values"}, "shifted": {"base"}}[kind]
    for key in required - set(kw):
        raise ConfigError(f"{what}: missing key {key!r}")
    try:
        if kind == "constant":
            return phi_funcs.Constant(_rational(kw["c"], "c"))
        if kind == "logstack":
            return phi_funcs.LogStack(_int(kw["depth"], "depth"))
        if kind == "power":
            return phi_funcs.Power(_rational(kw["eps"], "eps"))
        if kind == "table":
            return phi_funcs.Table(tuple(_rational(v, "values") for v in kw["values"]))
        if not isinstance(kw["base"], ast.Call):
            raise ConfigError(f"{what}: base must be a phi spec")
        floor = _rational(kw.get("floor", 4), "floor")
        return phi_funcs.Shifted(_phi_from_node(kw["base"]), floor)
    except ValidationError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{what}: {exc}") from None


def parse_theta(text: str) -> cf_core.IrrationalSpec:
    return _theta_from_node(_parse_call(text, "theta"))


def parse_phi(text: str) -> phi_funcs.PhiSpec:
    return _phi_from_node(_parse_call(text, "phi"))
