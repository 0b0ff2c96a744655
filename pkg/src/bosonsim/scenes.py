"""Reference scene descriptions used by the examples and acceptance tests."""

from __future__ import annotations


def _rect(x0, y0, x1, y1):
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


def nanobridge_config(n: int = 128, dx: float = 25.0, bridge_width: float = 200.0,
                      bridge_tc: float = 7.8, bulk_tc: float = 8.5,
                      defects: bool = True, bridge_length: float = 1000.0) -> dict:
    """Bow-tie Nb strip with a central weak-link bridge, no hBN.

    Only the apex hotspot heats the film (far-field and edge fields off), as
    for transition-edge mapping.
    """
    L = n * dx
    cy = L / 2
    cx = L / 2
    half_w = bridge_width / 2
    bridge_len = bridge_length
    strip = (0.125 * L, 0.875 * L)
    bx0, bx1 = cx - bridge_len / 2, cx + bridge_len / 2
    cfg = {
        "name": "nanobridge",
        "grid": {"nx": n, "ny": n, "dx": dx},
        "conductor": {
            "polygons": [_rect(0, strip[0], L, strip[1])],
            "cutouts": [_rect(bx0, cy + half_w, bx1, strip[1]),
                        _rect(bx0, strip[0], bx1, cy - half_w)],
            "tc": bulk_tc,
        },
        "bridges": [{"polygon": _rect(bx0, cy - half_w, bx1, cy + half_w), "tc": bridge_tc}],
        "electrodes": {"source": [[0, strip[0]], [0, strip[1]]],
                       "drain": [[L, strip[0]], [L, strip[1]]]},
        "conditions": {"bias_current": 1.0, "bath_temperature": 8.0, "magnetic_field": 0.0},
        "optics": {"E_F0": 0.0, "E_edge": 0.0, "hotspot": 0.05},
    }
    if defects:
        cfg["defects"] = [
            {"center": [cx - 120, cy + half_w - 30], "radius": 40.0, "depth": 0.15},
            {"center": [cx + 120, cy - half_w + 30], "radius": 40.0, "depth": 0.15},
        ]
    return cfg


def hbn_on_nb_config(n: int = 256, dx: float = 10.0, thickness: float = 50.0,
                     bridge_tc: float = 8.0, bulk_tc: float = 8.5) -> dict:
    """Nb film patterned by 100 nm trenches into an active bow-tie with a
    250 nm bridge, covered by an hBN flake whose natural edge runs along
    x = 0.94 L. The upper inactive film ends at y = 0.9 L, giving a straight
    Nb edge under the flake.

    The bridge sits in the lower part of the window so that long linecuts
    toward it stay over hBN on Nb.
    """
    L = n * dx
    s = L / 2560.0
    trench = 100.0 * s
    film_top = 2300.0 * s
    pad_lo, pad_hi = 300.0 * s, 1300.0 * s
    bx0, bx1 = 1030.0 * s, 1530.0 * s
    by0, by1 = 675.0 * s, 925.0 * s
    active = [[0, pad_lo], [bx0, pad_lo], [bx0, by0], [bx1, by0], [bx1, pad_lo], [L, pad_lo],
              [L, pad_hi], [bx1, pad_hi], [bx1, by1], [bx0, by1], [bx0, pad_hi], [0, pad_hi]]
    upper = [[0, pad_hi + trench], [bx0 - trench, pad_hi + trench], [bx0 - trench, by1 + trench],
             [bx1 + trench, by1 + trench], [bx1 + trench, pad_hi + trench], [L, pad_hi + trench],
             [L, film_top], [0, film_top]]
    lower = [[0, 0], [L, 0], [L, pad_lo - trench], [bx1 + trench, pad_lo - trench],
             [bx1 + trench, by0 - trench], [bx0 - trench, by0 - trench],
             [bx0 - trench, pad_lo - trench], [0, pad_lo - trench]]
    return {
        "name": "hbn_on_nb",
        "grid": {"nx": n, "ny": n, "dx": dx},
        "conductor": {"polygons": [active, upper, lower], "tc": bulk_tc},
        "bridges": [{"polygon": _rect(bx0, by0, bx1, by1), "tc": bridge_tc}],
        "hbn": [{"polygon": _rect(0, 0, 2400.0 * s, L), "thickness": thickness}],
        "electrodes": {"source": [[0, pad_lo], [0, pad_hi]], "drain": [[L, pad_lo], [L, pad_hi]]},
        "conditions": {"bias_current": 10.0, "bath_temperature": 7.77, "magnetic_field": 0.0},
    }


def strip_config(width: float = 8500.0, length: float = 20000.0, n: int = 64,
                 tc: float = 8.5) -> dict:
    """Uniform rectangular strip filling the grid width-wise (far-field device)."""
    dx = length / n
    ny = max(int(round(width / dx)) + 4, 2)
    y0 = 2 * dx
    return {
        "name": "strip",
        "grid": {"nx": n, "ny": ny, "dx": dx},
        "conductor": {"polygons": [_rect(0, y0, length, y0 + width)], "tc": tc},
        "electrodes": {"source": [[0, y0], [0, y0 + width]],
                       "drain": [[length, y0], [length, y0 + width]]},
    }
