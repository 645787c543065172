"""Canonical XML writing and strict parsing helpers.

Parsing goes through :mod:`xml.etree.ElementTree`; serialization is a small
hand-rolled writer so the byte layout is fully pinned: 2-space indent, fixed
attribute order (callers pass ordered pairs), double-quoted attributes,
self-closing empty elements, LF line endings, single trailing newline, no XML
declaration. Golden-file tests rely on this never drifting.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

from .errors import MissingAttribute, XmlSyntax


def escape_text(value: str) -> str:
    return value.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def escape_attr(value: str) -> str:
    return escape_text(value).replace('"', "&quot;")


class XmlBuilder:
    """Accumulates canonical XML lines; attrs are (name, value) pairs, None values skipped."""

    def __init__(self):
        self._lines: list[str] = []
        self._depth = 0

    def _attrs(self, attrs):
        parts = []
        for name, value in attrs:
            if value is None:
                continue
            parts.append(f' {name}="{escape_attr(str(value))}"')
        return "".join(parts)

    def open(self, tag: str, attrs=()) -> None:
        self._lines.append(f"{'  ' * self._depth}<{tag}{self._attrs(attrs)}>")
        self._depth += 1

    def close(self, tag: str) -> None:
        self._depth -= 1
        self._lines.append(f"{'  ' * self._depth}</{tag}>")

    def leaf(self, tag: str, attrs=()) -> None:
        self._lines.append(f"{'  ' * self._depth}<{tag}{self._attrs(attrs)}/>")

    def text_leaf(self, tag: str, attrs, text: str) -> None:
        pad = "  " * self._depth
        self._lines.append(f"{pad}<{tag}{self._attrs(attrs)}>{escape_text(text)}</{tag}>")

    def done(self) -> str:
        return "\n".join(self._lines) + "\n"


def parse_document(text: str, expected_root: str | None = None) -> ET.Element:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise XmlSyntax(f"not well-formed XML: {exc}") from exc
    if expected_root is not None and root.tag != expected_root:
        raise XmlSyntax(f"expected root element <{expected_root}>, found <{root.tag}>")
    return root


def require_attr(elem: ET.Element, name: str) -> str:
    value = elem.get(name)
    if value is None:
        raise MissingAttribute(name, where=elem.tag)
    return value


def child_elements(elem: ET.Element) -> list[ET.Element]:
    """Children of an element that must not carry stray (non-whitespace) text."""
    if elem.text is not None and elem.text.strip():
        raise XmlSyntax(f"unexpected text content inside <{elem.tag}>")
    out = []
    for child in elem:
        if child.tail is not None and child.tail.strip():
            raise XmlSyntax(f"unexpected text content after <{child.tag}>")
        out.append(child)
    return out


def reject_children(elem: ET.Element) -> None:
    if len(elem) > 0:
        raise XmlSyntax(f"<{elem.tag}> does not allow child elements")


def format_scalar(value) -> tuple[str, str]:
    """Scalar -> (type name, canonical text) as used by <const>, <attr> and <set>."""
    if isinstance(value, bool):
        return "bool", "true" if value else "false"
    if isinstance(value, int):
        return "num", str(value)
    if isinstance(value, float):
        return "num", repr(value)
    if isinstance(value, str):
        return "str", value
    raise XmlSyntax(f"unsupported scalar type {type(value).__name__!r}")


def parse_scalar(type_name: str, text: str | None, where: str):
    text = text if text is not None else ""
    if type_name == "bool":
        if text == "true":
            return True
        if text == "false":
            return False
        raise XmlSyntax(f"{where}: bool value must be 'true' or 'false', got {text!r}")
    if type_name == "num":
        stripped = text.strip()
        try:
            if _INT_SHAPE(stripped):
                return int(stripped)
            return float(stripped)
        except ValueError:
            raise XmlSyntax(f"{where}: invalid number {text!r}") from None
    if type_name == "str":
        return text
    raise XmlSyntax(f"{where}: unknown scalar type {type_name!r}")


def _INT_SHAPE(s: str) -> bool:
    body = s[1:] if s[:1] in "+-" else s
    return body.isdigit()
