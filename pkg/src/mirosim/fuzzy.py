"""Fuzzy blending of the forward, backward and turn controllers.

Rules fire with the product of their antecedent memberships; the output is
the weight-averaged wheel command of the fired sub-controllers (zero-order
Takagi-Sugeno). Partition and rules are data, loaded from YAML.
"""

from __future__ import annotations

import bisect
import itertools
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping

import yaml

from .control import (V_MAX, ControlErrors, ControlGains, backward_control, compute_errors,
                      forward_control, saturate, turn_control)
from .geometry import normalize_angle
from .world import Pose, WheelCommand

CONSEQUENTS = ("forward", "backward", "turn", "turn_to_bearing", "hold")
INPUTS = ("distance", "heading", "bearing", "bearing_error", "heading_error")


class RuleTableError(ValueError):
    pass


class PiecewiseLinear:
    """Membership function through ``[x, mu]`` breakpoints, flat outside them."""

    def __init__(self, points):
        pts = [(float(x), float(mu)) for x, mu in points]
        if not pts:
            raise RuleTableError("membership function needs at least one breakpoint")
        xs = [p[0] for p in pts]
        if any(b < a for a, b in zip(xs, xs[1:])):
            raise RuleTableError(f"breakpoints not sorted: {xs}")
        if any(not 0.0 <= p[1] <= 1.0 for p in pts):
            raise RuleTableError(f"membership values must lie in [0, 1]: {pts}")
        self.xs = xs
        self.mus = [p[1] for p in pts]

    def __call__(self, x: float) -> float:
        xs, mus = self.xs, self.mus
        if x <= xs[0]:
            return mus[0]
        if x >= xs[-1]:
            return mus[-1]
        i = bisect.bisect_right(xs, x)
        x0, x1 = xs[i - 1], xs[i]
        if x1 == x0:
            return mus[i]
        t = (x - x0) / (x1 - x0)
        return mus[i - 1] + t * (mus[i] - mus[i - 1])


@dataclass(frozen=True)
class FuzzyVariable:
    name: str
    domain: tuple[float, float]
    labels: Mapping[str, PiecewiseLinear]

    def memberships(self, x: float) -> dict[str, float]:
        return {lab: f(x) for lab, f in self.labels.items()}

    def check_partition(self, samples: int = 721, tol: float = 1e-9) -> None:
        lo, hi = self.domain
        probes = {lo + (hi - lo) * i / (samples - 1) for i in range(samples)}
        for f in self.labels.values():
            probes.update(x for x in f.xs if lo <= x <= hi)
        for x in sorted(probes):
            total = sum(f(x) for f in self.labels.values())
            if abs(total - 1.0) > tol:
                raise RuleTableError(f"labels of {self.name!r} sum to {total} at {x}, not 1")


@dataclass(frozen=True)
class FuzzyRule:
    antecedent: Mapping[str, str]
    consequent: str


@dataclass(frozen=True)
class FuzzyPartition:
    variables: Mapping[str, FuzzyVariable]


class RuleBase:
    """Validated partition plus rule table."""

    def __init__(self, partition: FuzzyPartition, rules: list[FuzzyRule]):
        self.partition = partition
        self.rules = list(rules)
        self._validate()

    def _validate(self) -> None:
        errors = []
        vars_ = self.partition.variables
        for name in vars_:
            if name not in INPUTS:
                errors.append(f"unknown input variable {name!r}")
        for i, rule in enumerate(self.rules, 1):
            if rule.consequent not in CONSEQUENTS:
                errors.append(f"rule {i}: unknown consequent {rule.consequent!r}")
            for var, lab in rule.antecedent.items():
                if var not in vars_:
                    errors.append(f"rule {i}: unknown variable {var!r}")
                elif lab not in vars_[var].labels:
                    errors.append(f"rule {i}: {var!r} has no label {lab!r}")
        if errors:
            raise RuleTableError("; ".join(errors))
        for v in vars_.values():
            v.check_partition()
        # Labels partition each variable, so some label of every variable is
        # positive at any input. Covering every label combination is therefore
        # enough for at least one rule to fire everywhere.
        names = list(vars_)
        for combo in itertools.product(*(vars_[n].labels for n in names)):
            chosen = dict(zip(names, combo))
            if not any(all(chosen[v] == lab for v, lab in r.antecedent.items()) for r in self.rules):
                raise RuleTableError(f"rule table incomplete: nothing fires for {chosen}")

    def inputs(self, robot: Pose, target, target_heading: float) -> tuple[ControlErrors, dict[str, float]]:
        e = compute_errors(robot, target)
        return e, {
            "distance": e.d,
            "heading": robot.theta,
            "bearing": e.theta_T,
            "bearing_error": e.theta_e,
            "heading_error": normalize_angle(target_heading - robot.theta),
        }

    def weights(self, values: Mapping[str, float]) -> list[float]:
        """Firing strength of every rule, in table order."""
        mu = {name: var.memberships(values[name]) for name, var in self.partition.variables.items()}
        out = []
        for rule in self.rules:
            w = 1.0
            for var, lab in rule.antecedent.items():
                w *= mu[var][lab]
                if w == 0.0:
                    break
            out.append(w)
        return out

    def consequent_weights(self, values: Mapping[str, float]) -> dict[str, float]:
        agg = dict.fromkeys(CONSEQUENTS, 0.0)
        for rule, w in zip(self.rules, self.weights(values)):
            agg[rule.consequent] += w
        return agg


def _parse(doc: Mapping) -> RuleBase:
    unknown = set(doc) - {"variables", "rules"}
    if unknown:
        raise RuleTableError(f"unknown top-level keys: {sorted(unknown)}")
    variables = {}
    for name, spec in doc["variables"].items():
        extra = set(spec) - {"domain", "labels"}
        if extra:
            raise RuleTableError(f"variable {name!r}: unknown keys {sorted(extra)}")
        lo, hi = spec["domain"]
        labels = {str(lab): PiecewiseLinear(pts) for lab, pts in spec["labels"].items()}
        variables[name] = FuzzyVariable(name, (float(lo), float(hi)), labels)
    rules = []
    for i, r in enumerate(doc["rules"], 1):
        extra = set(r) - {"if", "then"}
        if extra:
            raise RuleTableError(f"rule {i}: unknown keys {sorted(extra)}")
        rules.append(FuzzyRule({k: str(v) for k, v in r["if"].items()}, str(r["then"])))
    return RuleBase(FuzzyPartition(variables), rules)


def load_rule_base(path: str | Path) -> RuleBase:
    return _parse(yaml.safe_load(Path(path).read_text()))


_DEFAULT: RuleBase | None = None


def default_rule_base() -> RuleBase:
    global _DEFAULT
    if _DEFAULT is None:
        text = resources.files("mirosim").joinpath("data/fuzzy_default.yaml").read_text()
        _DEFAULT = _parse(yaml.safe_load(text))
    return _DEFAULT


def fuzzy_control(robot: Pose, target, target_heading: float, rules: RuleBase | None = None,
                  gains: ControlGains = ControlGains(), v_max: float = V_MAX) -> WheelCommand:
    """Blend the sub-controllers toward ``target`` ending at ``target_heading``."""
    rules = rules or default_rule_base()
    e, values = rules.inputs(robot, target, target_heading)
    agg = rules.consequent_weights(values)
    total = sum(agg.values())
    if total <= 0.0:
        raise RuleTableError(f"no rule fired for inputs {values}")

    fired = [(c, w) for c, w in agg.items() if w > 0.0]
    outputs = {}
    for c, _ in fired:
        if c == "forward":
            outputs[c] = forward_control(e, gains, v_max)
        elif c == "backward":
            outputs[c] = backward_control(e, gains, v_max)
        elif c == "turn":
            outputs[c] = turn_control(robot.theta, target_heading, gains, v_max)
        elif c == "turn_to_bearing":
            outputs[c] = turn_control(robot.theta, e.theta_T, gains, v_max)
        else:
            outputs[c] = WheelCommand(0.0, 0.0)
    if len(fired) == 1:
        return outputs[fired[0][0]]
    v_l = sum(w * outputs[c].v_left for c, w in fired) / total
    v_r = sum(w * outputs[c].v_right for c, w in fired) / total
    return saturate(v_l, v_r, v_max)
