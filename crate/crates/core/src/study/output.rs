use std::fmt::Write;

use super::StudyReport;

pub const CSV_HEADER: &str = "h,error,M1,M2,M3,M4";

fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

impl StudyReport {
    /// Error table with 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for (i, (&h, &e)) in self.h.iter().zip(&self.errors).enumerate() {
            let m = self.monitors.get(i).map(|m| m.values()).unwrap_or([f64::NAN; 4]);
            let cells: Vec<String> = [h, e].into_iter().chain(m).map(sig12).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 60.0;

/// Log-log plot of error against `h` with the fitted line and an `h^{2/3}`
/// guide through the first point.
pub fn render_svg(report: &StudyReport) -> String {
    let pts: Vec<(f64, f64)> = report.pairs().into_iter().filter(|&(h, e)| h > 0.0 && e > 0.0).collect();
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{} ({} reference)</text>"#,
        W / 2.0,
        report.problem,
        report.reference
    );
    if pts.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">no positive errors</text></svg>"#,
            W / 2.0,
            H / 2.0
        );
        return svg;
    }
    let lx: Vec<f64> = pts.iter().map(|p| p.0.log10()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.log10()).collect();
    let span = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo < 1e-9 {
            (lo - 0.5, hi + 0.5)
        } else {
            let m = 0.08 * (hi - lo);
            (lo - m, hi + m)
        }
    };
    let (x0, x1) = span(&lx);
    let (y0, y1) = span(&ly);
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let _ = writeln!(
        svg,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for (x, y) in lx.iter().zip(&ly) {
        let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="steelblue"/>"#, sx(*x), sy(*y));
    }
    let poly = |slope: f64, icpt: f64| {
        let (ya, yb) = (icpt + slope * x0, icpt + slope * x1);
        format!("{:.2},{:.2} {:.2},{:.2}", sx(x0), sy(ya), sx(x1), sy(yb))
    };
    if let Some(fit) = &report.rate {
        let icpt = fit.intercept / std::f64::consts::LN_10;
        let _ = writeln!(svg, r#"<polyline points="{}" stroke="steelblue" fill="none"/>"#, poly(fit.rate, icpt));
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13">fitted slope {:.3}</text>"#,
            PAD + 8.0,
            PAD + 18.0,
            fit.rate
        );
    }
    let guide = ly[0] - 2.0 / 3.0 * lx[0];
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" stroke="gray" stroke-dasharray="6,4" fill="none"/>"#,
        poly(2.0 / 3.0, guide)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" fill="gray">slope 2/3</text>"#,
        PAD + 8.0,
        PAD + 36.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">log10 h</text>"#,
        W / 2.0,
        H - 18.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" transform="rotate(-90 18 {})" text-anchor="middle" font-family="sans-serif" font-size="13">log10 error</text>"#,
        H / 2.0,
        H / 2.0
    );
    svg.push_str("</svg>\n");
    svg
}
