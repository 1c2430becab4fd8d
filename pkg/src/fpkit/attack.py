"""Guessing attacks against a verifier configuration: brute force over the
attribute domain and dictionary submission of the most probable fingerprints,
under a per-account attempt budget.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Mapping, Sequence

from .model import AttributeValue, canonical_hash, AttributeDescriptor
from .verify import ACCEPT, MatchingConfig, verdict


@dataclass(frozen=True)
class AttackPolicy:
    """What the attacker submits and how often.

    ``domain_spec`` (brute force) maps each attribute to its candidate
    values; ``attacker_distribution`` (dictionary) lists fingerprints with
    their believed probabilities. ``exhaustive`` switches brute force from
    random sampling to full enumeration of the domain, capped by the budget.
    """

    strategy: str
    attempts_per_account: int
    seed: int = 0
    domain_spec: Mapping[str, Sequence[AttributeValue]] | None = None
    attacker_distribution: Sequence[tuple[Mapping[str, AttributeValue], float]] | None = None
    exhaustive: bool = False

    def __post_init__(self) -> None:
        if self.strategy not in ("brute-force", "dictionary"):
            raise ValueError(f"unknown strategy: {self.strategy!r}")
        if self.attempts_per_account < 1:
            raise ValueError("attempt budget must be at least 1")


@dataclass(frozen=True)
class AttackReport:
    strategy: str
    attempts_per_account: int
    target_count: int
    impersonated: int
    per_target: tuple[bool, ...]

    @property
    def rate(self) -> float:
        return self.impersonated / self.target_count if self.target_count else 0.0

    def to_json(self) -> dict:
        return {
            "strategy": self.strategy,
            "attempts_per_account": self.attempts_per_account,
            "targets": self.target_count,
            "impersonated": self.impersonated,
            "rate": self.rate,
        }


def _domain_order(domain: Mapping[str, Sequence[AttributeValue]]) -> list[str]:
    return list(domain.keys())


def brute_force(
    targets: Sequence[Mapping[str, AttributeValue]],
    policy: AttackPolicy,
    config: MatchingConfig,
    mode: str = "simple",
) -> AttackReport:
    """Submit fingerprints drawn uniformly from the attribute domain.

    Each target gets an independent, seed-derived attempt stream. In
    exhaustive mode the domain is enumerated in order instead, up to the
    attempt budget.
    """
    if policy.domain_spec is None:
        raise ValueError("brute force requires a domain specification")
    names = _domain_order(policy.domain_spec)
    domains = [list(policy.domain_spec[name]) for name in names]
    outcomes: list[bool] = []
    for t, target in enumerate(targets):
        success = False
        if policy.exhaustive:
            attempts = itertools.islice(
                itertools.product(*domains), policy.attempts_per_account
            )
            for combo in attempts:
                candidate = dict(zip(names, combo))
                if verdict(target, candidate, config, mode) == ACCEPT:
                    success = True
                    break
        else:
            rng = random.Random(policy.seed * 1_000_003 + t)
            for _ in range(policy.attempts_per_account):
                candidate = {
                    name: domain[rng.randrange(len(domain))]
                    for name, domain in zip(names, domains)
                }
                if verdict(target, candidate, config, mode) == ACCEPT:
                    success = True
                    break
        outcomes.append(success)
    return AttackReport(
        strategy="brute-force",
        attempts_per_account=policy.attempts_per_account,
        target_count=len(targets),
        impersonated=sum(outcomes),
        per_target=tuple(outcomes),
    )


def exact_match_success_probability(
    domain_spec: Mapping[str, Sequence[AttributeValue]], attempts: int
) -> float:
    """Probability that sampling-mode brute force hits one exact-match target
    within the budget: 1 - (1 - 1/|domain|)^attempts."""
    size = 1
    for values in domain_spec.values():
        size *= len(values)
    return 1.0 - (1.0 - 1.0 / size) ** attempts


def top_k_fingerprints(
    distribution: Sequence[tuple[Mapping[str, AttributeValue], float]],
    k: int,
    schema: Sequence[AttributeDescriptor] | None = None,
) -> list[Mapping[str, AttributeValue]]:
    """The k most probable fingerprints, ties broken deterministically by
    the canonical digest."""
    def sort_key(item: tuple[Mapping[str, AttributeValue], float]):
        fingerprint, probability = item
        if schema is not None:
            tie = canonical_hash(fingerprint, schema).hex
        else:
            tie = repr(sorted((k, repr(v)) for k, v in fingerprint.items()))
        return (-probability, tie)

    ranked = sorted(distribution, key=sort_key)
    return [fingerprint for fingerprint, _ in ranked[:k]]


def dictionary(
    targets: Sequence[Mapping[str, AttributeValue]],
    policy: AttackPolicy,
    config: MatchingConfig,
    mode: str = "simple",
    schema: Sequence[AttributeDescriptor] | None = None,
) -> AttackReport:
    """Submit the most probable fingerprints in descending probability."""
    if policy.attacker_distribution is None:
        raise ValueError("dictionary attack requires an attacker distribution")
    submissions = top_k_fingerprints(
        policy.attacker_distribution, policy.attempts_per_account, schema
    )
    outcomes = []
    for target in targets:
        outcomes.append(
            any(
                verdict(target, candidate, config, mode) == ACCEPT
                for candidate in submissions
            )
        )
    return AttackReport(
        strategy="dictionary",
        attempts_per_account=policy.attempts_per_account,
        target_count=len(targets),
        impersonated=sum(outcomes),
        per_target=tuple(outcomes),
    )


def run_attack(
    targets: Sequence[Mapping[str, AttributeValue]],
    policy: AttackPolicy,
    config: MatchingConfig,
    mode: str = "simple",
) -> AttackReport:
    if policy.strategy == "brute-force":
        return brute_force(targets, policy, config, mode)
    return dictionary(targets, policy, config, mode)
