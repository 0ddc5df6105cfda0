//! Self-contained polyline SVG line charts.
//!
//! No external renderer and no timestamps: identical data renders to
//! identical bytes, which keeps every chart golden-file testable. The y
//! axis can be logarithmic (decade ticks), the usual choice for |Z|.

use std::fmt::Write as _;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub width: u32,
    pub height: u32,
    pub series: Vec<Series>,
}

impl LineChart {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: "f / Hz".into(),
            y_label: String::new(),
            log_y: false,
            width: 900,
            height: 540,
            series: Vec::new(),
        }
    }

    fn usable_y(&self, y: f64) -> Option<f64> {
        if !y.is_finite() {
            return None;
        }
        if self.log_y {
            if y <= 0.0 {
                None
            } else {
                Some(y.log10())
            }
        } else {
            Some(y)
        }
    }

    pub fn to_svg(&self) -> String {
        let (ml, mr, mt, mb) = (74.0, 24.0, 46.0, 56.0);
        let pw = self.width as f64 - ml - mr;
        let ph = self.height as f64 - mt - mb;

        let mut x_min = f64::INFINITY;
        let mut x_max = f64::NEG_INFINITY;
        let mut y_min = f64::INFINITY;
        let mut y_max = f64::NEG_INFINITY;
        for s in &self.series {
            for &(x, y) in &s.points {
                if !x.is_finite() {
                    continue;
                }
                if let Some(y) = self.usable_y(y) {
                    x_min = x_min.min(x);
                    x_max = x_max.max(x);
                    y_min = y_min.min(y);
                    y_max = y_max.max(y);
                }
            }
        }
        if !(x_min < x_max) {
            x_max = x_min + 1.0;
        }
        if !(y_min < y_max) {
            y_max = y_min + 1.0;
        }
        // breathing room on the value axis
        let pad = 0.05 * (y_max - y_min);
        let (y_lo, y_hi) = (y_min - pad, y_max + pad);

        let sx = move |x: f64| ml + (x - x_min) / (x_max - x_min) * pw;
        let sy = move |y: f64| mt + (y_hi - y) / (y_hi - y_lo) * ph;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
            w = self.width,
            h = self.height
        );
        let _ = writeln!(
            out,
            r#"<rect width="{}" height="{}" fill="white"/>"#,
            self.width, self.height
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="24" font-size="15" text-anchor="middle">{}</text>"#,
            ml + pw / 2.0,
            xml_escape(&self.title)
        );

        // y ticks: decades on log axes, five even steps otherwise
        let y_ticks: Vec<(f64, String)> = if self.log_y {
            let lo = y_lo.floor() as i64;
            let hi = y_hi.ceil() as i64;
            (lo..=hi)
                .filter(|d| (*d as f64) >= y_lo && (*d as f64) <= y_hi)
                .map(|d| (d as f64, format!("1e{d}")))
                .collect()
        } else {
            (0..=4)
                .map(|i| {
                    let v = y_lo + (y_hi - y_lo) * i as f64 / 4.0;
                    (v, format_tick(v))
                })
                .collect()
        };
        for (v, label) in &y_ticks {
            let y = sy(*v);
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
                ml,
                ml + pw
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
                ml - 6.0,
                y + 4.0
            );
        }

        for i in 0..=5 {
            let v = x_min + (x_max - x_min) * i as f64 / 5.0;
            let x = sx(v);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
                mt,
                mt + ph
            );
            let _ = writeln!(
                out,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                mt + ph + 18.0,
                format_tick(v)
            );
        }

        let _ = writeln!(
            out,
            r##"<rect x="{ml:.2}" y="{mt:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#444444"/>"##
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            ml + pw / 2.0,
            mt + ph + 40.0,
            xml_escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            mt + ph / 2.0,
            mt + ph / 2.0,
            xml_escape(&self.y_label)
        );

        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            // split at unplottable points so log axes never see y <= 0
            let mut segment: Vec<(f64, f64)> = Vec::new();
            let flush = |seg: &mut Vec<(f64, f64)>, out: &mut String| {
                if seg.len() >= 2 {
                    let pts: String = seg
                        .iter()
                        .map(|&(x, y)| format!("{:.2},{:.2} ", sx(x), sy(y)))
                        .collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1.3" points="{}"/>"#,
                        pts.trim_end()
                    );
                }
                seg.clear();
            };
            for &(x, y) in &s.points {
                match (x.is_finite(), self.usable_y(y)) {
                    (true, Some(yv)) => segment.push((x, yv)),
                    _ => flush(&mut segment, &mut out),
                }
            }
            flush(&mut segment, &mut out);
        }

        // legend only while it stays readable
        if self.series.len() <= 8 {
            for (i, s) in self.series.iter().enumerate() {
                let color = PALETTE[i % PALETTE.len()];
                let y = mt + 14.0 + 16.0 * i as f64;
                let x = ml + pw - 150.0;
                let _ = writeln!(
                    out,
                    r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#,
                    x + 22.0
                );
                let _ = writeln!(
                    out,
                    r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                    x + 28.0,
                    y + 4.0,
                    xml_escape(&s.label)
                );
            }
        }

        out.push_str("</svg>\n");
        out
    }
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (0.01..1e5).contains(&a) {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
