//! CSV and JSON artifacts. Every float is printed with 17 significant digits
//! so that equal results give byte-equal files and parsing gives back the
//! same bits.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::bo::NuclearSolution;
use crate::clamped::ElectronicField;
use crate::diagnostics::ComparisonReport;

/// `d.dddddddddddddddde±x`
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "nan".into()
    }
}

/// Pretty JSON with fixed-precision floats; non-finite floats become `null`.
struct FixedFloat<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFloat<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_vec<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut out, FixedFloat(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    to_json_vec(value).map(|v| String::from_utf8(v).expect("serde_json emits UTF-8"))
}

fn csv_row<W: Write>(w: &mut W, cells: impl IntoIterator<Item = String>) -> io::Result<()> {
    let line: Vec<String> = cells.into_iter().collect();
    writeln!(w, "{}", line.join(","))
}

pub const PES_HEADER_PREFIX: &str = "x1";

/// `x1,lambda_0,...,lambda_{A-1}`, one row per nuclear grid point.
pub fn write_pes_csv<W: Write>(w: &mut W, field: &ElectronicField) -> io::Result<()> {
    let a = field.n_surfaces();
    csv_row(
        w,
        std::iter::once(PES_HEADER_PREFIX.to_string()).chain((0..a).map(|k| format!("lambda_{k}"))),
    )?;
    let g = field.grid1();
    for i in 0..g.n() {
        csv_row(
            w,
            std::iter::once(format_f64(g.point(i)))
                .chain((0..a).map(|k| format_f64(field.lambda(k, i)))),
        )?;
    }
    Ok(())
}

/// `x1,theta_<a>_<n>,...` over every surface and level given.
pub fn write_theta_csv<W: Write>(w: &mut W, nuclear: &[NuclearSolution]) -> io::Result<()> {
    let Some(first) = nuclear.first().and_then(|s| s.levels.first()) else {
        return csv_row(w, [PES_HEADER_PREFIX.to_string()]);
    };
    let grid = first.theta.grid;
    let columns: Vec<(String, &[f64])> = nuclear
        .iter()
        .flat_map(|s| {
            s.levels
                .iter()
                .enumerate()
                .map(move |(n, lv)| (format!("theta_{}_{n}", s.surface), lv.theta.values.as_slice()))
        })
        .collect();
    csv_row(
        w,
        std::iter::once(PES_HEADER_PREFIX.to_string()).chain(columns.iter().map(|c| c.0.clone())),
    )?;
    for i in 0..grid.n() {
        csv_row(
            w,
            std::iter::once(format_f64(grid.point(i)))
                .chain(columns.iter().map(|c| format_f64(c.1[i]))),
        )?;
    }
    Ok(())
}

pub const SCALING_HEADER: &str =
    "ratio,kappa,bo_energy,exact_energy,relative_error,heavy_ratio,min_uncertainty_product";

/// One row per mass ratio; `heavy_ratio` is empty without a second surface.
pub fn write_scaling_csv<W: Write>(w: &mut W, report: &ComparisonReport) -> io::Result<()> {
    writeln!(w, "{SCALING_HEADER}")?;
    for r in &report.rows {
        csv_row(
            w,
            [
                format_f64(r.mass_ratio),
                format_f64(r.kappa),
                format_f64(r.bo_energy),
                format_f64(r.exact_energy),
                format_f64(r.relative_error),
                r.heavy.map(|h| format_f64(h.ratio)).unwrap_or_default(),
                format_f64(r.min_uncertainty_product),
            ],
        )?;
    }
    Ok(())
}
