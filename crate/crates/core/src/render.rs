//! Text, CSV, image and JSON emitters. Numbers are written with 17
//! significant digits so that every value parses back to the same `f64`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::atlas::{BesselReport, BoundaryCurve, Catalog, CellClass, PortraitGrid};
use crate::connection::ConstrictionSign;
use crate::error::{Error, Result};

/// `x` with 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::InvalidParams(format!("serialization failed: {e}")))
}

fn class_char(c: CellClass) -> char {
    match c {
        CellClass::Inside => 'I',
        CellClass::Boundary => 'B',
        CellClass::Outside => 'O',
        CellClass::Error => 'E',
    }
}

/// Header, a rotation-number matrix and a class matrix; the first matrix
/// row is the top of the window (largest `A`).
pub fn grid_text(g: &PortraitGrid) -> String {
    let s = &g.spec;
    let mut out = String::new();
    let _ = writeln!(out, "# omega {}", num(g.omega));
    let _ = writeln!(out, "# B {} {} {}", num(s.b_min), num(s.b_max), s.nb);
    let _ = writeln!(out, "# A {} {} {}", num(s.a_min), num(s.a_max), s.na);
    let _ = writeln!(out, "# method {:?} tol {}", g.method, num(g.tol));
    let _ = writeln!(out, "# rho");
    for j in (0..s.na).rev() {
        let row: Vec<String> = (0..s.nb).map(|i| num(g.cell(i, j).rho)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    let _ = writeln!(out, "# class");
    for j in (0..s.na).rev() {
        out.extend((0..s.nb).map(|i| class_char(g.cell(i, j).class)));
        out.push('\n');
    }
    out
}

pub fn grid_csv(g: &PortraitGrid) -> String {
    let mut out = String::from("i,j,B,A,rho,rho_error,lock_margin,class,error\n");
    for j in 0..g.spec.na {
        for i in 0..g.spec.nb {
            let c = g.cell(i, j);
            let _ = writeln!(
                out,
                "{i},{j},{},{},{},{},{},{:?},{}",
                num(g.spec.b_at(i)),
                num(g.spec.a_at(j)),
                num(c.rho),
                num(c.rho_error),
                num(c.lock_margin),
                c.class,
                csv_field(c.error.as_deref().unwrap_or(""))
            );
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

const PALETTE: [[u8; 3]; 8] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [188, 189, 34],
];

/// Categorical colour for locked cells, grey by fractional part otherwise.
pub fn cell_color(g: &PortraitGrid, i: usize, j: usize) -> [u8; 3] {
    let c = g.cell(i, j);
    match c.class {
        CellClass::Inside => PALETTE[(c.rho.round() as i64).rem_euclid(PALETTE.len() as i64) as usize],
        CellClass::Boundary => [0, 0, 0],
        CellClass::Error => [255, 0, 255],
        CellClass::Outside => {
            let f = c.rho - c.rho.floor();
            let v = (150.0 + 100.0 * (1.0 - 2.0 * (f - 0.5).abs())) as u8;
            [v, v, v]
        }
    }
}

/// Plain (ASCII) portable pixmap, one pixel per cell, top row = largest `A`.
pub fn grid_ppm(g: &PortraitGrid) -> String {
    let (nb, na) = (g.spec.nb, g.spec.na);
    let mut out = format!("P3\n{nb} {na}\n255\n");
    for j in (0..na).rev() {
        let row: Vec<String> = (0..nb)
            .map(|i| {
                let [r, gg, b] = cell_color(g, i, j);
                format!("{r} {gg} {b}")
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// SVG with one rectangle per horizontal run of equal colour.
pub fn grid_svg(g: &PortraitGrid) -> String {
    let (nb, na) = (g.spec.nb, g.spec.na);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{nb}\" height=\"{na}\" viewBox=\"0 0 {nb} {na}\" shape-rendering=\"crispEdges\">\n"
    );
    for j in (0..na).rev() {
        let y = na - 1 - j;
        let mut i = 0;
        while i < nb {
            let col = cell_color(g, i, j);
            let mut k = i + 1;
            while k < nb && cell_color(g, k, j) == col {
                k += 1;
            }
            let _ = writeln!(
                out,
                "<rect x=\"{i}\" y=\"{y}\" width=\"{}\" height=\"1\" fill=\"#{:02x}{:02x}{:02x}\"/>",
                k - i,
                col[0],
                col[1],
                col[2]
            );
            i = k;
        }
    }
    out.push_str("</svg>\n");
    out
}

pub fn boundary_csv(c: &BoundaryCurve) -> String {
    let mut out = String::from("r,side,A,B,residual,width\n");
    for s in &c.samples {
        let _ = writeln!(
            out,
            "{},{:?},{},{},{},{}",
            c.r,
            c.side,
            num(s.a),
            s.b.map(num).unwrap_or_default(),
            num(s.residual),
            num(s.width)
        );
    }
    out
}

pub fn bessel_csv(rep: &BesselReport) -> String {
    let mut out = String::from("r,side,A,g,model,deviation,scaled\n");
    for r in &rep.rows {
        let _ = writeln!(
            out,
            "{},{:?},{},{},{},{},{}",
            rep.r,
            rep.side,
            num(r.a),
            num(r.g),
            num(r.model),
            num(r.deviation),
            num(r.scaled)
        );
    }
    out
}

pub const CATALOG_HEADER: &str = "kind,r,B,A,sign,cb_ratio,xi,c0,c1,residuals,flags";

/// One row per constriction and per admissible root of `P_r`.
pub fn catalog_csv(cat: &Catalog) -> String {
    let mut out = format!("{CATALOG_HEADER}\n");
    for c in &cat.constrictions {
        let sign = match c.sign {
            ConstrictionSign::Positive => "positive",
            ConstrictionSign::Negative => "negative",
            ConstrictionSign::Undetermined => "undetermined",
        };
        let mut flags = Vec::new();
        if !c.agreement {
            flags.push("probe-disagreement");
        }
        let _ = writeln!(
            out,
            "constriction,{},{},{},{sign},{},{},{},{},{},{}",
            c.area,
            num(c.b),
            num(c.a),
            num(c.cb_ratio),
            num(c.xi),
            num(c.c0.re),
            num(c.c1.re),
            num(c.scalar_distance),
            flags.join(";")
        );
    }
    for s in &cat.simple_intersections {
        let rec = &s.record;
        let mut flags = Vec::new();
        if rec.higher {
            flags.push("higher");
        }
        if !rec.is_simple() {
            flags.push("bounds-lower-area");
        }
        let _ = writeln!(
            out,
            "simple,{},{},{},,,{},{},{},{},{}",
            rec.area,
            num(rec.b),
            num(rec.a),
            num(rec.xi),
            num(s.c0),
            num(s.c1),
            num(rec.margin.abs()),
            flags.join(";")
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{sweep, GridSpec, SweepMethod};

    #[test]
    fn numbers_round_trip() {
        for &x in &[0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 1.0 - f64::EPSILON] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(f64::NAN), "NaN");
    }

    #[test]
    fn emitters_shapes() {
        let g = sweep(2.0, &GridSpec::new((-3.0, 3.0), (0.0, 2.0), 5, 3), SweepMethod::Mobius, 1e-9).unwrap();
        let t = grid_text(&g);
        assert_eq!(t.lines().filter(|l| !l.starts_with('#')).count(), 6);
        let rows: Vec<&str> = t.lines().filter(|l| !l.starts_with('#')).collect();
        let back: f64 = rows[2].split(' ').next().unwrap().parse().unwrap();
        assert_eq!(back, g.cell(0, 0).rho);
        let ppm = grid_ppm(&g);
        assert!(ppm.starts_with("P3\n5 3\n255\n"));
        assert_eq!(ppm.split_whitespace().count(), 4 + 5 * 3 * 3);
        let svg = grid_svg(&g);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        let csv = grid_csv(&g);
        assert_eq!(csv.lines().count(), 16);
        assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 9));
    }
}
