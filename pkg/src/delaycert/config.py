"""INI-style run configuration with a named-function registry.

Values are literals only: numbers, lists, strings, the names ``pi`` and
``inf``, and registry calls such as ``sine_plus_offset(amplitude=1, frequency=1,
phase=0, offset=0.5)``. Nothing is evaluated beyond that.

Sections (all optional, read by the commands that need them)::

    [kernel.E]       kind = exponential | coefficient_integral | scaled |
    [kernel.K1]             power_singular | future_exponential
    [kernel.K2]      M0, lam0 | a | base, b | C, alpha, beta | C, beta
    [inequality]     rho, r, y0, horizon
    [halanay]        alpha, beta, r, rho, y0
    [system]         kind = linear_lag (a, b, lag) | scalar_fde (a, b, lag, variant)
                     | superlinear (alpha0, alpha1, lag, p, forcing)
                     | periodic (a, beta, omega)
    [simulation]     tau, t_end, h, n_histories, radius
    [oracle]         t_max, n_grid, y0, n_members, a, b, lag
    [attractor]      t_star, radius, n_random, n_nodes, h, tol, burn_in, t_end, margin, n_test
    [sectorial]      alpha, beta, variant, M_sect, L, C0, C1
    [neural]         n_neurons, mesh_points, diffusion, b, T, delays, inputs, activation, t_end, h
    [demo]           name = neural | periodic | linear_lag | superlinear
"""

from __future__ import annotations

import ast
import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError
from .functions import REGISTRY, CoefficientFunction, Constant, make_function
from .kernels import (CoefficientIntegral, ExponentialScaled, FutureExponential, Kernel2, PowerSingular,
                      ScaledBy)

__all__ = ["Config", "load_config", "parse_config", "parse_value", "parse_function", "KERNEL_KINDS"]

_NAMES = {"pi": math.pi, "inf": math.inf, "true": True, "false": False, "True": True, "False": False}


def _literal(node, where):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, str, bool)):
        return node.value
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _literal(node.operand, where)
        if not isinstance(v, (int, float)):
            raise ParseError(f"{where}: sign applied to a non-number")
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, (ast.List, ast.Tuple)):
        return [_literal(e, where) for e in node.elts]
    if isinstance(node, ast.Call):
        return _call(node, where)
    raise ParseError(f"{where}: unsupported expression {ast.dump(node)[:60]}")


def _call(node, where):
    if not isinstance(node.func, ast.Name) or node.func.id not in REGISTRY:
        name = getattr(node.func, "id", "?")
        raise ParseError(f"{where}: unknown function {name!r}; known: {sorted(REGISTRY)}")
    if node.args:
        raise ParseError(f"{where}: function parameters must be given as key=value")
    params = {kw.arg: _literal(kw.value, where) for kw in node.keywords}
    try:
        return make_function(node.func.id, **params)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: {exc}") from None


def parse_value(text: str, where: str = "value"):
    text = text.strip()
    if not text:
        raise ParseError(f"{where}: empty value")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError:
        # bare words are strings
        if text.replace("_", "").replace("-", "").replace(".", "").isalnum():
            return text
        raise ParseError(f"{where}: cannot parse {text!r}") from None
    if isinstance(tree.body, ast.Name) and tree.body.id not in _NAMES:
        return tree.body.id
    return _literal(tree.body, where)


def parse_function(text: str, where: str = "function") -> CoefficientFunction:
    v = parse_value(text, where)
    if isinstance(v, CoefficientFunction):
        return v
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return Constant(float(v))
    raise ParseError(f"{where}: expected a number or a registry call, got {text!r}")


KERNEL_KINDS = ("exponential", "coefficient_integral", "scaled", "power_singular", "future_exponential")


@dataclass
class Config:
    sections: dict = field(default_factory=dict)
    source: str = "<memory>"

    def has(self, section: str) -> bool:
        return section in self.sections

    def raw(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def _where(self, section, key):
        return f"{self.source}: [{section}] {key}"

    def get(self, section: str, key: str, default=None):
        raw = self.raw(section, key)
        if raw is None:
            return default
        return parse_value(raw, self._where(section, key))

    def require(self, section: str, key: str):
        if self.raw(section, key) is None:
            raise ParseError(f"{self.source}: missing [{section}] {key}")
        return self.get(section, key)

    def get_float(self, section: str, key: str, default=None) -> float:
        if self.raw(section, key) is None and default is None:
            raise ParseError(f"{self.source}: missing [{section}] {key}")
        v = self.get(section, key, default)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ParseError(f"{self._where(section, key)}: expected a number, got {v!r}")
        return float(v)

    def get_int(self, section: str, key: str, default=None) -> int:
        v = self.get_float(section, key, default)
        if v != int(v):
            raise ParseError(f"{self._where(section, key)}: expected an integer, got {v!r}")
        return int(v)

    def get_str(self, section: str, key: str, default=None) -> str:
        raw = self.raw(section, key)
        if raw is None:
            if default is None:
                raise ParseError(f"{self.source}: missing [{section}] {key}")
            return default
        return raw.strip()

    def get_bool(self, section: str, key: str, default=False) -> bool:
        v = self.get(section, key, default)
        if not isinstance(v, bool):
            raise ParseError(f"{self._where(section, key)}: expected true or false")
        return v

    def get_function(self, section: str, key: str, default=None) -> CoefficientFunction:
        raw = self.raw(section, key)
        if raw is None:
            if default is None:
                raise ParseError(f"{self.source}: missing [{section}] {key}")
            return parse_function(str(default), self._where(section, key))
        return parse_function(raw, self._where(section, key))

    def get_list(self, section: str, key: str, default=None) -> list:
        v = self.get(section, key, default)
        if v is None:
            raise ParseError(f"{self.source}: missing [{section}] {key}")
        return v if isinstance(v, list) else [v]

    def kernel(self, name: str, _seen=()) -> Kernel2 | None:
        """Kernel defined in ``[kernel.<name>]``, or ``None`` when absent."""
        sec = f"kernel.{name}"
        if not self.has(sec):
            return None
        if name in _seen:
            raise ParseError(f"{self.source}: kernel {name!r} refers to itself")
        kind = self.get_str(sec, "kind")
        try:
            if kind == "exponential":
                return ExponentialScaled(self.get_float(sec, "M0", 1.0), self.get_float(sec, "lam0"))
            if kind == "coefficient_integral":
                return CoefficientIntegral(self.get_function(sec, "a"))
            if kind == "scaled":
                base_name = self.get_str(sec, "base")
                base = self.kernel(base_name, _seen + (name,))
                if base is None:
                    raise ParseError(f"{self._where(sec, 'base')}: no section [kernel.{base_name}]")
                return ScaledBy(base, self.get_function(sec, "b"))
            if kind == "power_singular":
                return PowerSingular(self.get_float(sec, "C", 1.0), self.get_float(sec, "alpha"),
                                     self.get_float(sec, "beta"))
            if kind == "future_exponential":
                return FutureExponential(self.get_float(sec, "C", 1.0), self.get_float(sec, "beta"))
        except ParseError:
            raise
        except ValueError as exc:
            raise ParseError(f"{self.source}: [{sec}] {exc}") from None
        raise ParseError(f"{self._where(sec, 'kind')}: unknown kernel kind {kind!r}; known: {list(KERNEL_KINDS)}")

    def apply_overrides(self, overrides) -> "Config":
        """``section.key=value`` strings; the section is everything before the last dot."""
        for item in overrides or ():
            if "=" not in item:
                raise ParseError(f"override {item!r} is not of the form section.key=value")
            lhs, value = item.split("=", 1)
            lhs = lhs.strip()
            if "." not in lhs:
                raise ParseError(f"override {item!r} lacks a section")
            section, key = lhs.rsplit(".", 1)
            self.sections.setdefault(section, {})[key.strip()] = value.strip()
        return self


def parse_config(text: str, source: str = "<memory>") -> Config:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ParseError(f"{source}: {exc}") from None
    return Config({s: dict(cp.items(s)) for s in cp.sections()}, source)


def load_config(path) -> Config:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read configuration {p}: {exc}") from None
    return parse_config(text, str(p))
