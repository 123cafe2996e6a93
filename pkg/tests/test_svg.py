import xml.etree.ElementTree as ET

from hypothesis import given
from hypothesis import strategies as st

from swarmsim.svg import Chart, nice_ticks


def test_nice_ticks():
    assert nice_ticks(0, 10) == [0, 2, 4, 6, 8, 10]
    assert nice_ticks(0.0, 1.0) == [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
    assert nice_ticks(3, 3) == [3]


@given(st.floats(-1e4, 1e4), st.floats(1e-3, 1e4))
def test_nice_ticks_inside_range(lo, span):
    ticks = nice_ticks(lo, lo + span)
    assert 1 <= len(ticks) <= 12
    assert all(lo - 1e-6 * span <= t <= lo + span + 1e-6 * span for t in ticks)


def chart():
    c = Chart("T <1>", "x", "y", (0, 10), (-1, 1))
    c.polyline([0, 5, 10], [0, 1, -1], "#ff0000", label="a & b", dash="2,2")
    c.hline(0.5)
    c.rect(1, -0.5, 2, 0.5)
    c.circle(5, 0, 0.5)
    c.marker(3, 0.2, "#00ff00")
    c.note("hi")
    return c.render()


def test_render_is_valid_and_deterministic():
    text = chart()
    root = ET.fromstring(text)
    assert root.tag.endswith("svg")
    assert text == chart()
    assert "T &lt;1&gt;" in text and "a &amp; b" in text
    assert "-0.00" not in text


def test_equal_aspect_scales_match():
    c = Chart("p", "x", "y", (0, 100), (0, 10), equal_aspect=True)
    sx = c.px(1) - c.px(0)
    sy = c.py(0) - c.py(1)
    assert abs(sx - sy) < 1e-9
