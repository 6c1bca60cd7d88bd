//! Standalone SVG bar charts.
//!
//! Output is a pure function of the input: fixed palette, fixed geometry, numbers printed
//! with a fixed number of significant digits. Empty input yields a "no data" placeholder.

use std::fmt::Write as _;

const PALETTE: [&str; 8] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f"];
const FONT: &str = "font-family=\"Helvetica, Arial, sans-serif\"";

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Three significant digits, no exponent, trailing zeros kept for alignment.
pub fn format_value(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return "0".into();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (2 - magnitude).clamp(0, 8) as usize;
    format!("{v:.decimals$}")
}

fn f(x: f64) -> String {
    format!("{x:.2}")
}

fn header(width: f64, height: f64, title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n\
         <text x=\"{cx}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" {FONT}>{t}</text>\n",
        w = f(width),
        h = f(height),
        cx = f(width / 2.0),
        t = escape(title)
    )
}

pub fn placeholder(title: &str) -> String {
    let mut s = header(480.0, 200.0, title);
    s.push_str(&format!(
        "<text x=\"240.00\" y=\"110.00\" text-anchor=\"middle\" font-size=\"14\" fill=\"#666666\" {FONT}>no data</text>\n</svg>\n"
    ));
    s
}

/// One group of bars per category, one bar per series, with a legend.
pub fn grouped_bar_chart(title: &str, categories: &[String], series: &[Series]) -> String {
    let has_data = !categories.is_empty() && series.iter().any(|s| !s.values.is_empty());
    if !has_data {
        return placeholder(title);
    }
    let bar_w = 18.0;
    let gap = 16.0;
    let group_w = bar_w * series.len() as f64 + gap;
    let (left, top, plot_h, label_h) = (70.0, 60.0, 280.0, 150.0);
    let width = left + group_w * categories.len() as f64 + 160.0;
    let height = top + plot_h + label_h;
    let max = series.iter().flat_map(|s| s.values.iter().copied()).fold(0.0_f64, f64::max);
    let scale = if max > 0.0 { plot_h / max } else { 0.0 };
    let base = top + plot_h;

    let mut s = header(width, height, title);
    let _ = writeln!(s, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\"/>", f(left), f(base), f(width - 150.0), f(base));
    let _ = writeln!(s, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\"/>", f(left), f(top), f(left), f(base));
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"10\" {FONT}>{}</text>",
        f(left - 6.0),
        f(top + 4.0),
        format_value(max)
    );
    for (ci, cat) in categories.iter().enumerate() {
        let gx = left + gap / 2.0 + group_w * ci as f64;
        for (si, ser) in series.iter().enumerate() {
            let v = ser.values.get(ci).copied().unwrap_or(0.0);
            let h = v.max(0.0) * scale;
            let x = gx + bar_w * si as f64;
            let _ = writeln!(
                s,
                "<rect class=\"bar\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"><title>{}: {}</title></rect>",
                f(x),
                f(base - h),
                f(bar_w - 2.0),
                f(h),
                PALETTE[si % PALETTE.len()],
                escape(&format!("{} / {}", ser.name, cat)),
                format_value(v)
            );
            let _ = writeln!(
                s,
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"8\" transform=\"rotate(-90 {} {})\" {FONT}>{}</text>",
                f(x + 11.0),
                f(base - h - 3.0),
                f(x + 11.0),
                f(base - h - 3.0),
                format_value(v)
            );
        }
        let lx = gx + bar_w * series.len() as f64 / 2.0;
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"10\" transform=\"rotate(-40 {} {})\" {FONT}>{}</text>",
            f(lx),
            f(base + 14.0),
            f(lx),
            f(base + 14.0),
            escape(cat)
        );
    }
    for (si, ser) in series.iter().enumerate() {
        let y = top + 18.0 * si as f64;
        let x = width - 140.0;
        let _ = writeln!(s, "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>", f(x), f(y), PALETTE[si % PALETTE.len()]);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"11\" {FONT}>{}</text>", f(x + 18.0), f(y + 10.0), escape(&ser.name));
    }
    s.push_str("</svg>\n");
    s
}

/// Horizontal bars, largest first (ties by label).
pub fn horizontal_bar_chart(title: &str, items: &[(String, f64)]) -> String {
    if items.is_empty() {
        return placeholder(title);
    }
    let mut items = items.to_vec();
    items.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let (left, top, bar_h, plot_w) = (200.0, 50.0, 22.0, 400.0);
    let width = left + plot_w + 80.0;
    let height = top + bar_h * items.len() as f64 + 20.0;
    let max = items.iter().map(|i| i.1).fold(0.0_f64, f64::max);
    let scale = if max > 0.0 { plot_w / max } else { 0.0 };
    let mut s = header(width, height, title);
    for (i, (label, v)) in items.iter().enumerate() {
        let y = top + bar_h * i as f64;
        let w = v.max(0.0) * scale;
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"11\" {FONT}>{}</text>",
            f(left - 8.0),
            f(y + 14.0),
            escape(label)
        );
        let _ = writeln!(
            s,
            "<rect class=\"bar\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"><title>{}: {}</title></rect>",
            f(left),
            f(y + 2.0),
            f(w),
            f(bar_h - 4.0),
            PALETTE[0],
            escape(label),
            format_value(*v)
        );
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"10\" {FONT}>{}</text>", f(left + w + 4.0), f(y + 14.0), format_value(*v));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bars(svg: &str) -> usize {
        svg.matches("<rect class=\"bar\"").count()
    }

    #[test]
    fn grouped_shape() {
        let cats: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let series: Vec<Series> = ["US", "UK", "ME"]
            .iter()
            .enumerate()
            .map(|(i, r)| Series { name: r.to_string(), values: vec![0.01 * (i + 1) as f64, 0.0, 0.002, 0.5] })
            .collect();
        let svg = grouped_bar_chart("Indicators", &cats, &series);
        assert_eq!(bars(&svg), 12);
        assert!(svg.contains(">0.0100<") && svg.contains(">0.500<"));
        assert_eq!(svg, grouped_bar_chart("Indicators", &cats, &series));
    }

    #[test]
    fn horizontal_order() {
        let svg = horizontal_bar_chart("Targets", &[("israel".into(), 6.0), ("hamas".into(), 10.0)]);
        assert_eq!(bars(&svg), 2);
        assert!(svg.find(">hamas<").unwrap() < svg.find(">israel<").unwrap());
        let (ten, six) = (svg.find(">10.0<").unwrap(), svg.find(">6.00<").unwrap());
        assert!(ten < six);
    }

    #[test]
    fn empty_is_placeholder() {
        assert!(horizontal_bar_chart("T", &[]).contains("no data"));
        assert!(grouped_bar_chart("T", &[], &[]).contains("no data"));
        assert_eq!(bars(&grouped_bar_chart("T", &["x".into()], &[])), 0);
    }

    #[test]
    fn text_is_escaped() {
        let svg = horizontal_bar_chart("A & B", &[("<x>".into(), 1.0)]);
        assert!(svg.contains("A &amp; B") && svg.contains("&lt;x&gt;"));
    }

    #[test]
    fn value_format() {
        assert_eq!(format_value(0.0123456), "0.0123");
        assert_eq!(format_value(861.0), "861");
        assert_eq!(format_value(0.5), "0.500");
        assert_eq!(format_value(0.0), "0");
    }
}
