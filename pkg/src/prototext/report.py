"""Rendering of explanation reports: each input sentence with its selected
words highlighted, paired with the top prototypes' source sentences and
their highlighted words."""

from __future__ import annotations

import html as html_lib

from .rationale import SampleExplanation

ANSI_ON = "\x1b[7m"   # inverse video
ANSI_OFF = "\x1b[27m"

_HTML_HEADER = """<!doctype html>
<html>
<head>
<meta charset="utf-8">
<title>Explanation report</title>
<style>
body { font-family: sans-serif; max-width: 60em; margin: 2em auto; }
mark.rationale { background: #ffd54d; padding: 0 0.1em; }
p.prototype { color: #444; margin-left: 2em; }
.contribution { color: #888; font-size: 0.85em; }
</style>
</head>
<body>
<h1>Explanation report</h1>
"""


def _highlight_ansi(text: str, spans: list[tuple[int, int]]) -> str:
    parts = []
    cursor = 0
    for start, end in sorted(spans):
        parts.append(text[cursor:start])
        parts.append(ANSI_ON + text[start:end] + ANSI_OFF)
        cursor = end
    parts.append(text[cursor:])
    return "".join(parts)


def _highlight_html(text: str, spans: list[tuple[int, int]]) -> str:
    parts = []
    cursor = 0
    for start, end in sorted(spans):
        parts.append(html_lib.escape(text[cursor:start]))
        parts.append('<mark class="rationale">' + html_lib.escape(text[start:end]) + "</mark>")
        cursor = end
    parts.append(html_lib.escape(text[cursor:]))
    return "".join(parts)


def render_report(explanations: list[SampleExplanation], format: str = "ansi") -> str:
    """Readable report for a batch of explained samples.

    ANSI uses inverse video on the selected spans; HTML wraps them in
    <mark class="rationale"> and escapes everything else.
    """
    if not explanations:
        raise ValueError("no explanations to render")
    if format == "ansi":
        lines = []
        for exp in explanations:
            lines.append(f"[class {exp.predicted_class}] {_highlight_ansi(exp.text, exp.union_spans)}")
            for entry in exp.prototypes:
                rationale = entry.abstractive
                proto_text = rationale.sentence if rationale else None
                if rationale is not None:
                    rendered = _highlight_ansi(proto_text, rationale.spans)
                else:
                    rendered = entry.extractive.prototype_text or "<unprojected prototype>"
                lines.append(
                    f"    prototype {entry.prototype_index} "
                    f"(contribution {entry.contribution:.4f}): {rendered}"
                )
            lines.append("")
        return "\n".join(lines)
    if format == "html":
        chunks = [_HTML_HEADER]
        for exp in explanations:
            chunks.append("<section>\n")
            chunks.append(
                f'<p class="sample">[class {exp.predicted_class}] '
                f"{_highlight_html(exp.text, exp.union_spans)}</p>\n"
            )
            for entry in exp.prototypes:
                rationale = entry.abstractive
                if rationale is not None:
                    rendered = _highlight_html(rationale.sentence, rationale.spans)
                else:
                    rendered = html_lib.escape(entry.extractive.prototype_text or "<unprojected prototype>")
                chunks.append(
                    f'<p class="prototype">prototype {entry.prototype_index} '
                    f'<span class="contribution">(contribution {entry.contribution:.4f})</span>: '
                    f"{rendered}</p>\n"
                )
            chunks.append("</section>\n")
        chunks.append("</body>\n</html>\n")
        return "".join(chunks)
    raise ValueError(f"unknown report format: {format}")


def explanation_to_dict(exp: SampleExplanation) -> dict:
    """JSON-ready record mirroring the rendered report."""

    def rationale_dict(r):
        if r is None:
            return None
        return {
            "kind": r.kind,
            "tokens": r.tokens,
            "token_indices": r.token_indices,
            "spans": [list(span) for span in r.spans],
            "explained_fraction": r.explained_fraction,
        }

    return {
        "text": exp.text,
        "predicted_class": exp.predicted_class,
        "union_token_indices": exp.union_token_indices,
        "union_spans": [list(span) for span in exp.union_spans],
        "prototypes": [
            {
                "prototype_index": entry.prototype_index,
                "contribution": entry.contribution,
                "source_text": entry.extractive.prototype_text,
                "extractive": rationale_dict(entry.extractive),
                "abstractive": rationale_dict(entry.abstractive),
            }
            for entry in exp.prototypes
        ],
    }
