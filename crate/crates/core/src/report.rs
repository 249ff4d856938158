//! JSON, CSV and SVG renderings of results. Every artifact carries the
//! metadata document it was produced with.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::case_file::SCHEMA_VERSION;
use crate::pipeline::{Analysis, SweepPoint};
use crate::sensitivity::SensitivityReport;
use crate::spectral::MERW_OPERATOR;
use crate::swing::Trajectory;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
    "#393b79",
];

/// `{schema_version, merw_operator, config}`.
pub fn meta(config: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "merw_operator": MERW_OPERATOR,
        "config": config,
    })
}

fn csv_header(meta: &Value) -> String {
    format!("# meta {meta}\n")
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace("--", "-&#45;")
}

pub fn zones_value(a: &Analysis, meta: &Value) -> Value {
    let zr = &a.zones;
    let zones: Vec<Value> = (0..zr.k)
        .map(|z| {
            json!({
                "zone": z,
                "buses": zr.members(z),
                "sep": zr.seps[z],
                "sed": zr.sed[z],
                "zone_weight": zr.zone_weight[z],
            })
        })
        .collect();
    let rows = a.features.rows();
    let buses: Vec<Value> = zr
        .bus_order
        .iter()
        .zip(&zr.assignment)
        .map(|(&bus, &z)| {
            let i = a.features.bus_order.iter().position(|&b| b == bus).expect("bus has features");
            json!({
                "bus_id": bus,
                "zone": z,
                "dnw": a.dnw.weight(bus),
                "features": rows[i],
            })
        })
        .collect();
    json!({
        "schema_version": SCHEMA_VERSION,
        "meta": meta,
        "k": zr.k,
        "converged": zr.converged,
        "iterations": zr.iterations,
        "seeding": {
            "centroid_buses": a.init.centroid_buses,
            "spreads": a.init.spreads,
        },
        "system_sep": zr.system_sep,
        "zones": zones,
        "buses": buses,
    })
}

pub fn zones_json(a: &Analysis, meta: &Value) -> String {
    let mut s = serde_json::to_string_pretty(&zones_value(a, meta)).expect("zones serialize");
    s.push('\n');
    s
}

pub fn zones_csv(a: &Analysis, meta: &Value) -> String {
    let zr = &a.zones;
    let mut s = csv_header(meta);
    s.push_str("bus_id,zone,dnw,sed_of_zone\n");
    for (&bus, &z) in zr.bus_order.iter().zip(&zr.assignment) {
        let dnw = a.dnw.weight(bus).unwrap_or(f64::NAN);
        let _ = writeln!(s, "{bus},{z},{dnw},{}", zr.sed[z]);
    }
    s
}

pub fn dnw_csv(a: &Analysis, meta: &Value) -> String {
    let mut s = csv_header(meta);
    s.push_str("bus_id,dnw\n");
    for &bus in &a.zones.bus_order {
        let _ = writeln!(s, "{bus},{}", a.dnw.weight(bus).unwrap_or(f64::NAN));
    }
    s
}

struct Frame {
    width: f64,
    height: f64,
    margin: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        self.margin + v * (self.width - 2.0 * self.margin)
    }

    fn y(&self, v: f64) -> f64 {
        self.height - self.margin - v * (self.height - 2.0 * self.margin)
    }

    fn open(&self, s: &mut String, meta: &Value, title: &str) {
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
            w = self.width,
            h = self.height
        );
        let _ = writeln!(s, "<metadata>{}</metadata>", xml_escape(&meta.to_string()));
        let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="20" font-size="14" text-anchor="middle">{}</text>"#,
            self.width / 2.0,
            xml_escape(title)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{m}" y="{m}" width="{:.1}" height="{:.1}" fill="none" stroke="#888888"/>"##,
            self.width - 2.0 * self.margin,
            self.height - 2.0 * self.margin,
            m = self.margin
        );
    }
}

/// Scatter of buses in the plane of the first two feature columns, colored
/// by zone, sized by `1 / DNW`; zone SEPs as red crosses and the system SEP
/// as a filled dot.
pub fn zones_svg(a: &Analysis, meta: &Value) -> String {
    let f = Frame { width: 640.0, height: 640.0, margin: 50.0 };
    let zr = &a.zones;
    let cols = a.features.data.ncols();
    let (cx, cy) = (0, if cols > 1 { 1 } else { 0 });
    let rows = a.features.rows();
    let mut s = String::new();
    f.open(&mut s, meta, &format!("inertia zones (k = {})", zr.k));
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">feature {cx}</text>"#,
        f.width / 2.0,
        f.height - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 15 {:.1})">feature {cy}</text>"#,
        f.height / 2.0,
        f.height / 2.0
    );

    let inv: Vec<f64> = zr.bus_order.iter().map(|&b| 1.0 / a.dnw.weight(b).unwrap_or(f64::NAN)).collect();
    let inv_max = inv.iter().copied().fold(0.0, f64::max);
    for (i, (&bus, &z)) in zr.bus_order.iter().zip(&zr.assignment).enumerate() {
        let row = &rows[a.features.bus_order.iter().position(|&b| b == bus).expect("bus has features")];
        let radius = 2.5 + 6.0 * inv[i] / inv_max;
        let (x, y) = (f.x(row[cx]), f.y(row[cy]));
        let _ = writeln!(
            s,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{radius:.2}" fill="{}" fill-opacity="0.8"><title>bus {bus}, zone {z}</title></circle>"#,
            PALETTE[z % PALETTE.len()]
        );
        let _ =
            writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="9">{bus}</text>"#, x + radius + 1.0, y - 1.0);
    }
    for (z, sep) in zr.seps.iter().enumerate() {
        let (x, y) = (f.x(sep[cx]), f.y(sep[cy]));
        let _ = writeln!(
            s,
            r##"<path d="M{:.2} {:.2} L{:.2} {:.2} M{:.2} {:.2} L{:.2} {:.2}" stroke="#d62728" stroke-width="2.5"><title>SEP {z}, SED {}</title></path>"##,
            x - 7.0,
            y - 7.0,
            x + 7.0,
            y + 7.0,
            x - 7.0,
            y + 7.0,
            x + 7.0,
            y - 7.0,
            zr.sed[z]
        );
    }
    if !zr.system_sep.is_empty() {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="6" fill="#000000"><title>system SEP</title></circle>"##,
            f.x(zr.system_sep[cx]),
            f.y(zr.system_sep[cy])
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn sensitivity_csv(reports: &[SensitivityReport], meta: &Value) -> String {
    let n = reports.iter().map(|r| r.lambda1.len()).max().unwrap_or(0);
    let mut s = csv_header(meta);
    s.push_str("parameter,epsilon,targets,u1var");
    for i in 0..n {
        let _ = write!(s, ",lambda1_{i}");
    }
    s.push('\n');
    for r in reports {
        let _ = write!(s, "{},{},{},{}", r.parameter, r.epsilon, r.targets, r.u1var);
        for v in &r.lambda1 {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

/// Time, then one speed-deviation column per generator.
pub fn trajectory_csv(tr: &Trajectory, meta: &Value) -> String {
    let mut s = csv_header(meta);
    s.push_str("time");
    for bus in &tr.gen_order {
        let _ = write!(s, ",omega_{bus}");
    }
    s.push('\n');
    for (k, t) in tr.times.iter().enumerate() {
        let _ = write!(s, "{t}");
        for trace in &tr.omega {
            let _ = write!(s, ",{}", trace[k]);
        }
        s.push('\n');
    }
    s
}

/// Long format: one row per (h, bus).
pub fn sweep_csv(points: &[SweepPoint], meta: &Value) -> String {
    let mut s = csv_header(meta);
    s.push_str("h,bus_id,dnw,zone\n");
    for p in points {
        let zr = &p.analysis.zones;
        for (&bus, &z) in zr.bus_order.iter().zip(&zr.assignment) {
            let _ = writeln!(s, "{},{bus},{},{z}", p.h, p.analysis.dnw.weight(bus).unwrap_or(f64::NAN));
        }
    }
    s
}

/// DNW of every bus against the swept inertia.
pub fn sweep_svg(points: &[SweepPoint], meta: &Value, title: &str) -> String {
    let f = Frame { width: 720.0, height: 480.0, margin: 50.0 };
    let mut s = String::new();
    f.open(&mut s, meta, title);
    let Some(first) = points.first() else {
        s.push_str("</svg>\n");
        return s;
    };
    let buses = first.analysis.zones.bus_order.clone();
    let h_min = first.h;
    let h_max = points.last().map_or(h_min, |p| p.h);
    let h_span = if h_max > h_min { h_max - h_min } else { 1.0 };
    let values: Vec<Vec<f64>> = buses
        .iter()
        .map(|&b| points.iter().map(|p| p.analysis.dnw.weight(b).unwrap_or(f64::NAN)).collect())
        .collect();
    let d_max = values.iter().flatten().copied().fold(0.0, f64::max);
    let d_max = if d_max > 0.0 { d_max * 1.05 } else { 1.0 };
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">H (s): {h_min} to {h_max}</text>"#,
        f.width / 2.0,
        f.height - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 15 {:.1})">DNW (max {d_max:.4})</text>"#,
        f.height / 2.0,
        f.height / 2.0
    );
    for (i, (&bus, series)) in buses.iter().zip(&values).enumerate() {
        let mut d = String::new();
        for (j, (p, v)) in points.iter().zip(series).enumerate() {
            let x = f.x((p.h - h_min) / h_span);
            let y = f.y(v / d_max);
            let _ = write!(d, "{}{x:.2} {y:.2} ", if j == 0 { "M" } else { "L" });
        }
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.2"><title>bus {bus}</title></path>"#,
            d.trim_end()
        );
        if let (Some(p), Some(v)) = (points.last(), series.last()) {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="8" fill="{color}">{bus}</text>"#,
                f.x((p.h - h_min) / h_span) + 3.0,
                f.y(v / d_max) + 3.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
