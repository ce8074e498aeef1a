//! Time-series persistence: functional records plus run metadata as CSV.
//!
//! Values are written with 17 significant digits so a read-write round trip
//! reproduces every f64 bit-exactly; metadata rides in leading `# key =
//! value` comment lines so the `check` subcommand can evaluate the
//! constant-bearing inequalities from the file alone.

use std::fmt::Write as _;
use std::path::Path;

use crate::diagnostics::FunctionalRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesMeta {
    pub dim: usize,
    pub nx: usize,
    pub nxi: usize,
    pub x_extent: f64,
    pub xi_extent: f64,
    pub gamma: f64,
    pub delta: f64,
    pub m_drag: f64,
    pub alpha: f64,
    pub beta: f64,
    pub rho_inf: f64,
    pub density_floor: f64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub meta: SeriesMeta,
    pub records: Vec<FunctionalRecord>,
}

impl TimeSeries {
    /// Strictly increasing, uniformly spaced record times.
    pub fn validate(&self) -> Result<()> {
        if self.records.len() >= 2 {
            let dt = self.records[1].t - self.records[0].t;
            if !(dt > 0.0) {
                return Err(Error::SeriesFormat {
                    row: 2,
                    msg: "record times must be strictly increasing".into(),
                });
            }
            for (k, w) in self.records.windows(2).enumerate() {
                let step = w[1].t - w[0].t;
                if !(step > 0.0) || (step - dt).abs() > 1e-9 * dt.max(1.0) {
                    return Err(Error::SeriesFormat {
                        row: k + 3,
                        msg: format!("non-uniform record spacing ({step} vs {dt})"),
                    });
                }
            }
        }
        Ok(())
    }
}

const AXES: [&str; 3] = ["x", "y", "z"];

/// Column header for a given dimension: `12 + 2*dim` columns, momentum
/// vectors expanded per axis.
pub fn csv_header(dim: usize) -> String {
    let mut h = String::from("t,m_rho,m_f");
    for a in 0..dim {
        write!(h, ",M_rho_{}", AXES[a]).unwrap();
    }
    for a in 0..dim {
        write!(h, ",M_f_{}", AXES[a]).unwrap();
    }
    h.push_str(",W_rho,W_f,I_rho,I_f,E_k,E_i,E_f,dissipation,J");
    h
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn series_to_string(series: &TimeSeries) -> String {
    let m = &series.meta;
    let mut out = String::new();
    out.push_str("# vlasov-spray series v1\n");
    writeln!(out, "# config_hash = {}", m.config_hash).unwrap();
    writeln!(out, "# dim = {}", m.dim).unwrap();
    writeln!(out, "# nx = {}", m.nx).unwrap();
    writeln!(out, "# nxi = {}", m.nxi).unwrap();
    writeln!(out, "# x_extent = {}", fmt(m.x_extent)).unwrap();
    writeln!(out, "# xi_extent = {}", fmt(m.xi_extent)).unwrap();
    writeln!(out, "# gamma = {}", fmt(m.gamma)).unwrap();
    writeln!(out, "# delta = {}", fmt(m.delta)).unwrap();
    writeln!(out, "# m = {}", fmt(m.m_drag)).unwrap();
    writeln!(out, "# alpha = {}", fmt(m.alpha)).unwrap();
    writeln!(out, "# beta = {}", fmt(m.beta)).unwrap();
    writeln!(out, "# rho_inf = {}", fmt(m.rho_inf)).unwrap();
    writeln!(out, "# density_floor = {}", fmt(m.density_floor)).unwrap();
    out.push_str(&csv_header(m.dim));
    out.push('\n');
    for r in &series.records {
        let mut row = vec![fmt(r.t), fmt(r.mass_rho), fmt(r.mass_f)];
        for a in 0..m.dim {
            row.push(fmt(r.mom_rho[a]));
        }
        for a in 0..m.dim {
            row.push(fmt(r.mom_f[a]));
        }
        for v in [r.w_rho, r.w_f, r.i_rho, r.i_f, r.e_k, r.e_i, r.e_f, r.dissipation, r.j] {
            row.push(fmt(v));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_series(series: &TimeSeries, path: &Path) -> Result<()> {
    std::fs::write(path, series_to_string(series))?;
    Ok(())
}

fn meta_value<'a>(map: &'a std::collections::BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    map.get(key).map(|s| s.as_str()).ok_or_else(|| Error::SeriesFormat {
        row: 0,
        msg: format!("missing metadata key `{key}`"),
    })
}

fn parse_meta_f64(map: &std::collections::BTreeMap<String, String>, key: &str) -> Result<f64> {
    meta_value(map, key)?.parse().map_err(|_| Error::SeriesFormat {
        row: 0,
        msg: format!("metadata key `{key}` is not a number"),
    })
}

pub fn parse_series(text: &str) -> Result<TimeSeries> {
    let mut meta_map = std::collections::BTreeMap::new();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((_, line)) = lines.peek() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                meta_map.insert(k.trim().to_string(), v.trim().to_string());
            }
            lines.next();
        } else {
            break;
        }
    }
    let dim = meta_value(&meta_map, "dim")?
        .parse::<usize>()
        .map_err(|_| Error::SeriesFormat { row: 0, msg: "bad dim".into() })?;
    if dim != 1 && dim != 3 {
        return Err(Error::SeriesFormat { row: 0, msg: format!("dim must be 1 or 3, got {dim}") });
    }
    let meta = SeriesMeta {
        dim,
        nx: meta_value(&meta_map, "nx")?
            .parse()
            .map_err(|_| Error::SeriesFormat { row: 0, msg: "bad nx".into() })?,
        nxi: meta_value(&meta_map, "nxi")?
            .parse()
            .map_err(|_| Error::SeriesFormat { row: 0, msg: "bad nxi".into() })?,
        x_extent: parse_meta_f64(&meta_map, "x_extent")?,
        xi_extent: parse_meta_f64(&meta_map, "xi_extent")?,
        gamma: parse_meta_f64(&meta_map, "gamma")?,
        delta: parse_meta_f64(&meta_map, "delta")?,
        m_drag: parse_meta_f64(&meta_map, "m")?,
        alpha: parse_meta_f64(&meta_map, "alpha")?,
        beta: parse_meta_f64(&meta_map, "beta")?,
        rho_inf: parse_meta_f64(&meta_map, "rho_inf")?,
        density_floor: parse_meta_f64(&meta_map, "density_floor")?,
        config_hash: meta_value(&meta_map, "config_hash")?.to_string(),
    };

    let (header_row, header) = lines
        .next()
        .ok_or(Error::SeriesFormat { row: 0, msg: "missing header".into() })?;
    let expected = csv_header(dim);
    if header.trim() != expected {
        return Err(Error::SeriesFormat {
            row: header_row + 1,
            msg: format!("unexpected header `{header}` (expected `{expected}`)"),
        });
    }
    let ncols = 12 + 2 * dim;
    let mut records = Vec::new();
    for (idx, line) in lines {
        let row = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != ncols {
            return Err(Error::SeriesFormat {
                row,
                msg: format!("expected {ncols} columns, found {}", fields.len()),
            });
        }
        let nums: Vec<f64> = fields
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.trim().parse::<f64>().map_err(|_| Error::SeriesFormat {
                    row,
                    msg: format!("column {} is not a number: `{s}`", i + 1),
                })
            })
            .collect::<Result<_>>()?;
        let mut it = nums.into_iter();
        let t = it.next().unwrap();
        let mass_rho = it.next().unwrap();
        let mass_f = it.next().unwrap();
        let mom_rho: Vec<f64> = (0..dim).map(|_| it.next().unwrap()).collect();
        let mom_f: Vec<f64> = (0..dim).map(|_| it.next().unwrap()).collect();
        let rest: Vec<f64> = it.collect();
        records.push(FunctionalRecord {
            t,
            mass_rho,
            mass_f,
            mom_rho,
            mom_f,
            w_rho: rest[0],
            w_f: rest[1],
            i_rho: rest[2],
            i_f: rest[3],
            e_k: rest[4],
            e_i: rest[5],
            e_f: rest[6],
            dissipation: rest[7],
            j: rest[8],
        });
    }
    let series = TimeSeries { meta, records };
    series.validate()?;
    Ok(series)
}

pub fn read_series(path: &Path) -> Result<TimeSeries> {
    parse_series(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> SeriesMeta {
        SeriesMeta {
            dim: 1,
            nx: 64,
            nxi: 64,
            x_extent: 4.0,
            xi_extent: 5.0,
            gamma: 1.4,
            delta: 1.2,
            m_drag: 2.0,
            alpha: 0.05,
            beta: 0.02,
            rho_inf: 0.2,
            density_floor: 1e-10,
            config_hash: "deadbeefdeadbeef".into(),
        }
    }

    fn record(t: f64, seed: f64) -> FunctionalRecord {
        FunctionalRecord {
            t,
            mass_rho: 1.0 + seed,
            mass_f: 0.5 * seed,
            mom_rho: vec![seed * 0.3],
            mom_f: vec![-seed * 0.1],
            w_rho: seed.sin(),
            w_f: seed.cos() * 0.01,
            i_rho: 2.0 + seed,
            i_f: 0.1,
            e_k: seed * seed,
            e_i: 0.7,
            e_f: 0.3,
            dissipation: 0.001 * seed,
            j: 3.0 - seed,
        }
    }

    #[test]
    fn empty_series_is_header_only() {
        let s = TimeSeries { meta: meta(), records: vec![] };
        let text = series_to_string(&s);
        let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines, vec![csv_header(1).as_str()]);
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let records: Vec<FunctionalRecord> =
            (0..100).map(|k| record(k as f64 * 0.125, (k as f64 * 0.7).fract() + 0.1)).collect();
        let s = TimeSeries { meta: meta(), records };
        let text = series_to_string(&s);
        let back = parse_series(&text).unwrap();
        assert_eq!(back, s);
        // and the re-serialization is byte-identical
        assert_eq!(series_to_string(&back), text);
    }

    #[test]
    fn column_count_matches_dimension() {
        assert_eq!(csv_header(1).split(',').count(), 12 + 2);
        assert_eq!(csv_header(3).split(',').count(), 12 + 6);
    }

    #[test]
    fn malformed_rows_name_the_row() {
        let s = TimeSeries { meta: meta(), records: vec![record(0.0, 0.1), record(0.5, 0.2)] };
        let mut text = series_to_string(&s);
        text.push_str("1.0,2.0\n");
        match parse_series(&text) {
            Err(Error::SeriesFormat { row, .. }) => assert!(row > 0),
            other => panic!("expected SeriesFormat error, got {other:?}"),
        }
    }

    #[test]
    fn non_uniform_spacing_rejected() {
        let s = TimeSeries {
            meta: meta(),
            records: vec![record(0.0, 0.1), record(0.5, 0.2), record(1.2, 0.3)],
        };
        assert!(s.validate().is_err());
    }
}
