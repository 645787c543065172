"""Service registry and broker: provider records, families, discovery.

Providers are grouped into families (interchangeable service contracts).
Discovery evaluates every discovery rule for a task against each provider's
attribute map; multiple rules are conjunctive. Proposals are ordered by
(family, id) so identical inputs always produce identical lists.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterable

from .errors import DuplicateProvider, NotFound, XmlSyntax
from .expr import eval_expr
from .rules import DiscoveryRule
from .xmlio import (
    XmlBuilder,
    child_elements,
    format_scalar,
    parse_document,
    parse_scalar,
    reject_children,
    require_attr,
)


@dataclass(frozen=True)
class Provider:
    id: str
    family: str
    endpoint: str
    attributes: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise XmlSyntax("provider id must be non-empty")
        if not self.family:
            raise XmlSyntax(f"provider {self.id}: family must be non-empty")


class Registry:
    """Provider store indexed by family; concurrent reads, exclusive writes."""

    def __init__(self, providers: Iterable[Provider] = ()):
        self._providers: dict[str, Provider] = {}
        self._by_family: dict[str, set[str]] = {}
        self._lock = threading.Lock()
        for provider in providers:
            self.register(provider)

    def register(self, provider: Provider) -> None:
        with self._lock:
            if provider.id in self._providers:
                raise DuplicateProvider(f"provider id {provider.id!r} already registered")
            self._providers[provider.id] = provider
            self._by_family.setdefault(provider.family, set()).add(provider.id)

    def get(self, provider_id: str) -> Provider:
        with self._lock:
            try:
                return self._providers[provider_id]
            except KeyError:
                raise NotFound(f"no provider with id {provider_id!r}") from None

    def by_family(self, family: str) -> list[Provider]:
        with self._lock:
            ids = sorted(self._by_family.get(family, ()))
            return [self._providers[i] for i in ids]

    def all(self) -> list[Provider]:
        with self._lock:
            return sorted(self._providers.values(), key=lambda p: (p.family, p.id))

    def families(self) -> list[str]:
        with self._lock:
            return sorted(self._by_family)

    def __len__(self) -> int:
        with self._lock:
            return len(self._providers)


def discover(registry: Registry, task_ref: str, rules: Iterable[DiscoveryRule]) -> list[Provider]:
    """Providers satisfying every discovery rule for the task, ordered by (family, id).

    With no applicable rule the proposal is unconstrained (all providers). An
    empty result is a valid proposal here; only binding treats it as an error.
    """
    applicable = [r for r in rules if r.task_ref == task_ref]
    proposals = []
    for provider in registry.all():
        ok = True
        for rule in applicable:
            if rule.required_family is not None and provider.family != rule.required_family:
                ok = False
                break
            if not eval_expr(rule.predicate, provider.attributes):
                ok = False
                break
        if ok:
            proposals.append(provider)
    return proposals


# -- XML fixtures ---------------------------------------------------------
#
# <providers><provider id family endpoint><attr path=".." type="..">v</attr>..</provider></providers>

def load_providers(text: str) -> list[Provider]:
    root = parse_document(text, "providers")
    providers: list[Provider] = []
    for elem in child_elements(root):
        if elem.tag != "provider":
            raise XmlSyntax(f"unexpected element <{elem.tag}> inside <providers>")
        attributes: dict = {}
        for attr_elem in child_elements(elem):
            if attr_elem.tag != "attr":
                raise XmlSyntax(f"unexpected element <{attr_elem.tag}> inside <provider>")
            reject_children(attr_elem)
            path = require_attr(attr_elem, "path")
            attributes[path] = parse_scalar(require_attr(attr_elem, "type"),
                                            attr_elem.text, f"<attr path={path!r}>")
        providers.append(Provider(
            id=require_attr(elem, "id"),
            family=require_attr(elem, "family"),
            endpoint=require_attr(elem, "endpoint"),
            attributes=attributes,
        ))
    return providers


def serialize_providers(providers: Iterable[Provider]) -> str:
    builder = XmlBuilder()
    builder.open("providers")
    for provider in providers:
        attrs = [("id", provider.id), ("family", provider.family), ("endpoint", provider.endpoint)]
        if provider.attributes:
            builder.open("provider", attrs)
            for path, value in provider.attributes.items():
                type_name, text = format_scalar(value)
                builder.text_leaf("attr", [("path", path), ("type", type_name)], text)
            builder.close("provider")
        else:
            builder.leaf("provider", attrs)
    builder.close("providers")
    return builder.done()


def provider_to_json(provider: Provider) -> dict:
    return {
        "id": provider.id,
        "family": provider.family,
        "endpoint": provider.endpoint,
        "attributes": dict(provider.attributes),
    }
