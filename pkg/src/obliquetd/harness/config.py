"""Experiment configuration: plain-text key = value lines under [section] headers.

Layout:

    [experiment]
    domain     = baird            ; baird | random-mdp | mountain-car
    sampling   = sequential       ; sequential | iid
    steps      = 5000
    runs       = 20
    seed       = 1234
    eval_every = 10
    out_dir    = results/baird

    [domain]                      ; optional per-domain overrides, see DOMAIN_KEYS
    n_states = 50

    [learners.0]                  ; one section per learner, consecutive from 0
    kind  = o2td
    alpha = 0.006
    beta  = 0.006                 ; gtd2 only, defaults to alpha

Validation happens before any work; problems raise ConfigError.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from ..errors import ConfigError
from ..online import LEARNER_KINDS

DOMAINS = ("baird", "random-mdp", "mountain-car")
SAMPLING_MODES = ("sequential", "iid")

# domain -> {key: (type, default)}
DOMAIN_KEYS = {
    "baird": {},
    "random-mdp": {
        "n_states": (int, 400),
        "n_actions": (int, 10),
        "n_features": (int, 201),
        "gamma": (float, 0.95),
        "seed": (int, 0),
    },
    "mountain-car": {
        "order": (int, 3),
        "gamma": (float, 0.99),
        "grid": (int, 20),
        "rollouts": (int, 1),
        "visit_episodes": (int, 50),
        "context_seed": (int, 0),
    },
}


@dataclass(frozen=True)
class LearnerSpec:
    kind: str
    alpha: float
    beta: float | None = None

    @property
    def name(self) -> str:
        return self.kind


@dataclass(frozen=True)
class ExperimentConfig:
    domain: str
    sampling: str
    steps: int
    runs: int
    seed: int
    out_dir: str
    eval_every: int = 10
    learners: tuple[LearnerSpec, ...] = ()
    domain_params: dict = field(default_factory=dict)


def _require(section, key, parser_section, cast, where):
    if key not in parser_section:
        raise ConfigError(f"missing key {key!r} in [{section}]")
    raw = parser_section[key]
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc


def _optional(section, key, parser_section, cast, default):
    if key not in parser_section:
        return default
    raw = parser_section[key]
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse and validate a configuration from its text."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    if "experiment" not in parser:
        raise ConfigError("missing [experiment] section")
    exp = parser["experiment"]

    domain = _require("experiment", "domain", exp, str, "")
    if domain not in DOMAINS:
        raise ConfigError(f"unknown domain {domain!r}; expected one of {DOMAINS}")
    sampling = _require("experiment", "sampling", exp, str, "")
    if sampling not in SAMPLING_MODES:
        raise ConfigError(f"unknown sampling mode {sampling!r}; expected one of {SAMPLING_MODES}")
    steps = _require("experiment", "steps", exp, int, "")
    if steps < 0:
        raise ConfigError("steps must be nonnegative")
    runs = _require("experiment", "runs", exp, int, "")
    if runs < 1:
        raise ConfigError("runs must be at least 1")
    seed = _require("experiment", "seed", exp, int, "")
    eval_every = _optional("experiment", "eval_every", exp, int, 10)
    if eval_every < 1:
        raise ConfigError("eval_every must be at least 1")
    out_dir = _require("experiment", "out_dir", exp, str, "")

    known = DOMAIN_KEYS[domain]
    params = {key: default for key, (_, default) in known.items()}
    if "domain" in parser:
        for key, raw in parser["domain"].items():
            if key not in known:
                raise ConfigError(
                    f"[domain] key {key!r} is not valid for domain {domain!r}; "
                    f"expected one of {sorted(known) or '(none)'}"
                )
            cast = known[key][0]
            try:
                params[key] = cast(raw)
            except ValueError as exc:
                raise ConfigError(f"[domain] {key} = {raw!r}: {exc}") from exc

    learners = []
    idx = 0
    while f"learners.{idx}" in parser:
        sec = parser[f"learners.{idx}"]
        kind = _require(f"learners.{idx}", "kind", sec, str, "")
        if kind not in LEARNER_KINDS:
            raise ConfigError(
                f"[learners.{idx}] unknown kind {kind!r}; expected one of {sorted(LEARNER_KINDS)}"
            )
        alpha = _require(f"learners.{idx}", "alpha", sec, float, "")
        if alpha <= 0:
            raise ConfigError(f"[learners.{idx}] alpha must be positive")
        beta = _optional(f"learners.{idx}", "beta", sec, float, None)
        if beta is not None and kind != "gtd2":
            raise ConfigError(f"[learners.{idx}] beta only applies to gtd2")
        if beta is not None and beta <= 0:
            raise ConfigError(f"[learners.{idx}] beta must be positive")
        learners.append(LearnerSpec(kind=kind, alpha=alpha, beta=beta))
        idx += 1
    stray = []
    for sec in parser.sections():
        if not sec.startswith("learners."):
            continue
        suffix = sec.split(".", 1)[1]
        if not suffix.isdigit() or int(suffix) >= idx:
            stray.append(sec)
    if stray:
        raise ConfigError(f"learner sections must be consecutive from 0; found {sorted(stray)}")
    if not learners:
        raise ConfigError("at least one [learners.N] section is required")

    if sampling == "iid" and any(spec.kind == "etd" for spec in learners):
        raise ConfigError("etd requires chained trajectories and refuses iid sampling")

    return ExperimentConfig(
        domain=domain,
        sampling=sampling,
        steps=steps,
        runs=runs,
        seed=seed,
        eval_every=eval_every,
        out_dir=out_dir,
        learners=tuple(learners),
        domain_params=params,
    )


def parse_config(path) -> ExperimentConfig:
    """Parse and validate a configuration file."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())
