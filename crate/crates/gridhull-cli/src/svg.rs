//! Deterministic SVG writer for layered 2D polygon plots on a fixed
//! 800×600 canvas. Output bytes depend only on the input data: no clocks,
//! no randomness, fixed-precision coordinates.

/// One legend entry's worth of geometry: every polygon shares the layer
/// color; `faint` polygons are drawn as light outlines (used for outer
/// approximations behind their certified inner hulls).
pub struct Layer {
    pub label: String,
    pub polygons: Vec<Polygon>,
}

pub struct Polygon {
    /// Vertex ring in data coordinates (GW), already in drawing order.
    pub points: Vec<(f64, f64)>,
    pub faint: bool,
}

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;

const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 62.0;

const PALETTE: [&str; 6] = [
    "#c23b3b", "#d9a514", "#3f9d42", "#3566a5", "#8a5bb8", "#b06a3b",
];

pub fn render(x_label: &str, y_label: &str, layers: &[Layer]) -> String {
    let (xr, yr) = data_ranges(layers);
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let px = |x: f64| MARGIN_L + (x - xr.0) / (xr.1 - xr.0) * plot_w;
    let py = |y: f64| MARGIN_T + plot_h - (y - yr.0) / (yr.1 - yr.0) * plot_h;

    let mut out = String::with_capacity(16 * 1024);
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"Helvetica, Arial, sans-serif\">\n"
    ));
    out.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>\n"
    ));

    // Grid and tick labels.
    for (t, label) in ticks(xr.0, xr.1) {
        let x = px(t);
        out.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            MARGIN_T,
            MARGIN_T + plot_h
        ));
        out.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"13\" fill=\"#333333\" \
             text-anchor=\"middle\">{}</text>\n",
            MARGIN_T + plot_h + 20.0,
            esc(&label)
        ));
    }
    for (t, label) in ticks(yr.0, yr.1) {
        let y = py(t);
        out.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            MARGIN_L,
            MARGIN_L + plot_w
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" fill=\"#333333\" \
             text-anchor=\"end\">{}</text>\n",
            MARGIN_L - 8.0,
            y + 4.5,
            esc(&label)
        ));
    }
    out.push_str(&format!(
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n"
    ));

    // Axis titles.
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"15\" fill=\"#111111\" \
         text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 14.0,
        esc(x_label)
    ));
    let ym = MARGIN_T + plot_h / 2.0;
    out.push_str(&format!(
        "<text x=\"18\" y=\"{ym:.2}\" font-size=\"15\" fill=\"#111111\" text-anchor=\"middle\" \
         transform=\"rotate(-90 18 {ym:.2})\">{}</text>\n",
        esc(y_label)
    ));

    // Layers, bottom to top in input order.
    for (li, layer) in layers.iter().enumerate() {
        let color = PALETTE[li % PALETTE.len()];
        for poly in &layer.polygons {
            let mapped: Vec<(f64, f64)> =
                poly.points.iter().map(|&(x, y)| (px(x), py(y))).collect();
            match mapped.len() {
                0 => {}
                1 => out.push_str(&format!(
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{color}\"/>\n",
                    mapped[0].0, mapped[0].1
                )),
                2 => out.push_str(&format!(
                    "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
                     stroke=\"{color}\" stroke-width=\"2.5\"/>\n",
                    mapped[0].0, mapped[0].1, mapped[1].0, mapped[1].1
                )),
                _ => {
                    let pts: Vec<String> =
                        mapped.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                    let style = if poly.faint {
                        format!(
                            "fill=\"{color}\" fill-opacity=\"0.12\" stroke=\"{color}\" \
                             stroke-width=\"1.5\" stroke-dasharray=\"6 4\""
                        )
                    } else {
                        format!(
                            "fill=\"{color}\" fill-opacity=\"0.45\" stroke=\"{color}\" \
                             stroke-width=\"1.5\""
                        )
                    };
                    out.push_str(&format!(
                        "<polygon points=\"{}\" {style}/>\n",
                        pts.join(" ")
                    ));
                }
            }
        }
    }

    // Legend, top-right inside the plot area.
    let legend_w = 190.0;
    let legend_h = 12.0 + 24.0 * layers.len() as f64;
    let lx = MARGIN_L + plot_w - legend_w - 10.0;
    let ly = MARGIN_T + 10.0;
    out.push_str(&format!(
        "<rect x=\"{lx:.2}\" y=\"{ly:.2}\" width=\"{legend_w}\" height=\"{legend_h:.2}\" \
         fill=\"#ffffff\" fill-opacity=\"0.85\" stroke=\"#888888\" stroke-width=\"1\"/>\n"
    ));
    for (li, layer) in layers.iter().enumerate() {
        let color = PALETTE[li % PALETTE.len()];
        let ey = ly + 10.0 + 24.0 * li as f64;
        out.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{ey:.2}\" width=\"15\" height=\"15\" fill=\"{color}\" \
             fill-opacity=\"0.45\" stroke=\"{color}\"/>\n",
            lx + 9.0
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" fill=\"#111111\">{}</text>\n",
            lx + 31.0,
            ey + 12.0,
            esc(&layer.label)
        ));
    }

    out.push_str("</svg>\n");
    out
}

/// Padded data ranges covering every vertex; a degenerate or empty range
/// falls back to a unit span so the canvas mapping stays finite.
fn data_ranges(layers: &[Layer]) -> ((f64, f64), (f64, f64)) {
    let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
    let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
    for layer in layers {
        for poly in &layer.polygons {
            for &(x, y) in &poly.points {
                xs = (xs.0.min(x), xs.1.max(x));
                ys = (ys.0.min(y), ys.1.max(y));
            }
        }
    }
    (pad(xs), pad(ys))
}

fn pad((lo, hi): (f64, f64)) -> (f64, f64) {
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    let span = hi - lo;
    if span < 1e-9 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo - 0.05 * span, hi + 0.05 * span)
}

/// Round-numbered tick positions with printed labels, about five per axis.
fn ticks(lo: f64, hi: f64) -> Vec<(f64, String)> {
    let step = nice_step((hi - lo) / 5.0);
    let decimals = (-(step.log10().floor() as i32)).clamp(0, 3) as usize;
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        // Avoid "-0.0" labels.
        let v = if t.abs() < step * 1e-9 { 0.0 } else { t };
        out.push((v, format!("{v:.decimals$}")));
        t += step;
    }
    out
}

/// Step of the form {1, 2, 5}·10^k nearest to `raw`.
fn nice_step(raw: f64) -> f64 {
    let raw = raw.max(1e-12);
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let n = if norm < 1.5 {
        1.0
    } else if norm < 3.0 {
        2.0
    } else if norm < 7.0 {
        5.0
    } else {
        10.0
    };
    n * mag
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
