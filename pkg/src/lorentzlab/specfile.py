"""Parser for ``.spacetime`` chart files.

File format (whitespace-insensitive, ``#`` starts a comment):

    spacetime "half-plane" {
      coords: t, x;
      domain: t in [-4, 4], x in [0.05, 4];
      g_tt = -1 / (x * x);
      g_tx = 0;
      g_xx = 1 / (x * x);
    }

Exactly two coordinates (time first), one domain interval per
coordinate, and all three metric components are required.  Errors are
reported with line and column.
"""

from __future__ import annotations

from .exprs import (
    ParseError,
    TokenStream,
    free_vars,
    parse_expression,
    pretty,
    tokenize,
)
from .geometry import SpacetimeSpec

_COMPONENT_KEYS = ("g_tt", "g_tx", "g_xx")


def parse_spec(source):
    """Parse one spacetime block into a SpacetimeSpec."""
    stream = TokenStream(tokenize(source))
    tok = stream.next()
    if tok.text != "spacetime":
        raise ParseError("expected 'spacetime'", tok.line, tok.column, tok.text)
    name_tok = stream.next()
    if name_tok.kind != "string":
        raise ParseError(
            "expected a quoted name", name_tok.line, name_tok.column, name_tok.text
        )
    name = name_tok.text[1:-1]
    stream.expect("{")

    coords = None
    domain = {}
    components = {}
    while stream.peek().text != "}":
        key_tok = stream.next()
        if key_tok.kind != "name":
            raise ParseError(
                "expected a field name", key_tok.line, key_tok.column, key_tok.text
            )
        key = key_tok.text
        if key == "coords":
            stream.expect(":")
            coords = _parse_coords(stream, key_tok)
        elif key == "domain":
            stream.expect(":")
            if coords is None:
                raise ParseError(
                    "coords must be declared before domain",
                    key_tok.line,
                    key_tok.column,
                )
            domain = _parse_domain(stream, coords)
        elif key in _COMPONENT_KEYS:
            stream.expect("=")
            if key in components:
                raise ParseError(
                    f"duplicate component {key}", key_tok.line, key_tok.column
                )
            components[key] = (key_tok, parse_expression(stream))
        else:
            raise ParseError(
                f"unknown field {key!r}", key_tok.line, key_tok.column, key
            )
        stream.expect(";")
    stream.expect("}")
    if stream.peek().kind != "end":
        stream.error("unexpected input after the spacetime block")

    if coords is None:
        raise ParseError("missing coords declaration", 1, 1)
    for cname in coords:
        if cname not in domain:
            raise ParseError(f"missing domain for coordinate {cname!r}", 1, 1)
    for key in _COMPONENT_KEYS:
        if key not in components:
            raise ParseError(f"missing component {key}", 1, 1)

    allowed = set(coords)
    for key, (key_tok, expr) in components.items():
        extra = free_vars(expr) - allowed
        if extra:
            raise ParseError(
                f"{key} references undeclared names: {sorted(extra)}",
                key_tok.line,
                key_tok.column,
            )

    return SpacetimeSpec(
        name=name,
        coords=tuple(coords),
        domain=(tuple(domain[coords[0]]), tuple(domain[coords[1]])),
        g_tt=components["g_tt"][1],
        g_tx=components["g_tx"][1],
        g_xx=components["g_xx"][1],
    )


def _parse_coords(stream, key_tok):
    names = []
    while True:
        tok = stream.next()
        if tok.kind != "name":
            raise ParseError("expected a coordinate name", tok.line, tok.column, tok.text)
        names.append(tok.text)
        if stream.peek().text != ",":
            break
        stream.next()
    if len(names) != 2 or names[0] == names[1]:
        raise ParseError(
            "exactly two distinct coordinates required (time first)",
            key_tok.line,
            key_tok.column,
        )
    return names


def _parse_domain(stream, coords):
    domain = {}
    while True:
        tok = stream.next()
        if tok.kind != "name" or tok.text not in coords:
            raise ParseError(
                "expected a declared coordinate name", tok.line, tok.column, tok.text
            )
        cname = tok.text
        if cname in domain:
            raise ParseError(f"duplicate domain for {cname!r}", tok.line, tok.column)
        kw = stream.next()
        if kw.text != "in":
            raise ParseError("expected 'in'", kw.line, kw.column, kw.text)
        stream.expect("[")
        lo = _parse_signed_number(stream)
        stream.expect(",")
        hi = _parse_signed_number(stream)
        stream.expect("]")
        if not lo < hi:
            raise ParseError(
                f"empty interval for {cname!r}: [{lo}, {hi}]", tok.line, tok.column
            )
        domain[cname] = (lo, hi)
        if stream.peek().text != ",":
            break
        stream.next()
    return domain


def _parse_signed_number(stream):
    sign = 1.0
    tok = stream.peek()
    if tok.text == "-":
        stream.next()
        sign = -1.0
    tok = stream.next()
    if tok.kind != "number":
        raise ParseError("expected a number", tok.line, tok.column, tok.text)
    return sign * float(tok.text)


def format_spec(spec):
    """Render a SpacetimeSpec back to file syntax (parses to the same spec)."""
    t, x = spec.coords
    (tlo, thi), (xlo, xhi) = spec.domain
    return (
        f'spacetime "{spec.name}" {{\n'
        f"  coords: {t}, {x};\n"
        f"  domain: {t} in [{tlo!r}, {thi!r}], {x} in [{xlo!r}, {xhi!r}];\n"
        f"  g_tt = {pretty(spec.g_tt)};\n"
        f"  g_tx = {pretty(spec.g_tx)};\n"
        f"  g_xx = {pretty(spec.g_xx)};\n"
        f"}}\n"
    )
