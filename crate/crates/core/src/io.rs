//! Text formats for channel sets, FD precoders and hybrid precoders.
//!
//! All three share the same layout: a magic line, `key value` header lines,
//! then whitespace-separated numeric rows. Reals are written with 17
//! significant digits so every `f64` round-trips exactly. Lines starting
//! with `#` and blank lines are ignored on read.
//!
//! Channel set (`mhp-channels 1`): header keys `N`, `G`, `K` (one size per
//! group), `L`, `spacing`, `noise_power`, `seed`; then one row per UE in
//! group-major order: `j k re_0 im_0 … re_{N−1} im_{N−1}`.
//!
//! FD precoder (`mhp-fd-precoder 1`): header `N`, `G`; then `N` rows of `G`
//! interleaved `re im` pairs.
//!
//! Hybrid precoder (`mhp-hybrid 1`): header `N`, `n_rf`, `G`, `family`,
//! `bits`; then a `phases_a` line and `N` rows of `n_rf` angles, a
//! `phases_b` line and `N` rows, a `digital` line and `n_rf` rows of `G`
//! `re im` pairs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::channel::{ChannelSet, SystemConfig};
use crate::error::{Error, Result};
use crate::fd::FdPrecoder;
use crate::hybrid::{HybridPrecoder, PhaseFamily, Resolution};
use crate::linalg::{CMatrix, CVector, C64};

const CHANNEL_MAGIC: &str = "mhp-channels 1";
const PRECODER_MAGIC: &str = "mhp-fd-precoder 1";
const HYBRID_MAGIC: &str = "mhp-hybrid 1";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn push_row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    let row: Vec<String> = values.into_iter().map(num).collect();
    out.push_str(&row.join(" "));
    out.push('\n');
}

fn complex_row(out: &mut String, values: impl IntoIterator<Item = C64>) {
    push_row(out, values.into_iter().flat_map(|c| [c.re, c.im]));
}

/// Line cursor with position-aware errors.
struct Lines<'a> {
    label: &'a str,
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, label: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#')),
        );
        Lines {
            label,
            inner: it.peekable(),
            last: 0,
        }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.label.to_string(),
            line,
            message: message.into(),
        }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((n, l)) => {
                self.last = n;
                Ok((n, l))
            }
            None => Err(self.err(self.last + 1, format!("unexpected end of file, expected {what}"))),
        }
    }

    fn expect_exact(&mut self, text: &str) -> Result<()> {
        let (n, l) = self.next(text)?;
        if l != text {
            return Err(self.err(n, format!("expected `{text}`, found `{l}`")));
        }
        Ok(())
    }

    /// Reads `key v1 v2 …` and returns the values.
    fn key(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (n, l) = self.next(key)?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(key) {
            return Err(self.err(n, format!("expected header `{key}`, found `{l}`")));
        }
        Ok((n, parts.collect()))
    }

    fn key_value<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let (n, vals) = self.key(key)?;
        if vals.len() != 1 {
            return Err(self.err(n, format!("`{key}` takes exactly one value")));
        }
        vals[0]
            .parse()
            .map_err(|_| self.err(n, format!("bad value `{}` for `{key}`", vals[0])))
    }

    fn reals(&mut self, count: usize, what: &str) -> Result<(usize, Vec<f64>)> {
        let (n, l) = self.next(what)?;
        let vals = parse_reals(l).map_err(|m| self.err(n, m))?;
        if vals.len() != count {
            return Err(self.err(n, format!("{what}: expected {count} values, found {}", vals.len())));
        }
        Ok((n, vals))
    }

    fn finish(&mut self) -> Result<()> {
        if let Some((n, l)) = self.inner.next() {
            return Err(self.err(n, format!("trailing content `{l}`")));
        }
        Ok(())
    }
}

fn parse_reals(line: &str) -> std::result::Result<Vec<f64>, String> {
    line.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| format!("bad number `{t}`")))
        .collect()
}

fn pairs(vals: &[f64]) -> impl Iterator<Item = C64> + '_ {
    vals.chunks_exact(2).map(|p| C64::new(p[0], p[1]))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn format_channels(set: &ChannelSet) -> String {
    let cfg = &set.config;
    let mut out = String::new();
    let _ = writeln!(out, "{CHANNEL_MAGIC}");
    let _ = writeln!(out, "N {}", cfg.n_antennas);
    let _ = writeln!(out, "G {}", cfg.groups());
    let sizes: Vec<String> = cfg.group_sizes.iter().map(usize::to_string).collect();
    let _ = writeln!(out, "K {}", sizes.join(" "));
    let _ = writeln!(out, "L {}", cfg.n_paths);
    let _ = writeln!(out, "spacing {}", num(cfg.spacing_ratio));
    let _ = writeln!(out, "noise_power {}", num(cfg.noise_power));
    let _ = writeln!(out, "seed {}", set.seed);
    for (j, k, h) in set.iter() {
        let _ = write!(out, "{j} {k} ");
        complex_row(&mut out, h.iter().copied());
    }
    out
}

pub fn parse_channels(text: &str, label: &str) -> Result<ChannelSet> {
    let mut lines = Lines::new(text, label);
    lines.expect_exact(CHANNEL_MAGIC)?;
    let n: usize = lines.key_value("N")?;
    let g: usize = lines.key_value("G")?;
    let (kline, kvals) = lines.key("K")?;
    let sizes: Vec<usize> = kvals
        .iter()
        .map(|v| v.parse().map_err(|_| lines.err(kline, format!("bad group size `{v}`"))))
        .collect::<Result<_>>()?;
    if sizes.len() != g {
        return Err(lines.err(kline, format!("`K` lists {} groups but `G` is {g}", sizes.len())));
    }
    let l: usize = lines.key_value("L")?;
    let spacing: f64 = lines.key_value("spacing")?;
    let noise: f64 = lines.key_value("noise_power")?;
    let seed: u64 = lines.key_value("seed")?;
    let mut config = SystemConfig::new(n, sizes.clone(), l).map_err(|e| lines.err(kline, e.to_string()))?;
    config.spacing_ratio = spacing;
    config.noise_power = noise;
    config.validate().map_err(|e| lines.err(kline, e.to_string()))?;

    let mut channels = Vec::with_capacity(g);
    for (j, &kj) in sizes.iter().enumerate() {
        let mut group = Vec::with_capacity(kj);
        for k in 0..kj {
            let (ln, row) = lines.next("channel row")?;
            let mut tokens = row.split_whitespace();
            let idx: Vec<Option<usize>> = (0..2).map(|_| tokens.next().and_then(|t| t.parse().ok())).collect();
            if idx != [Some(j), Some(k)] {
                return Err(lines.err(ln, format!("expected row for group {j} UE {k}")));
            }
            let rest: Vec<&str> = tokens.collect();
            let vals = parse_reals(&rest.join(" ")).map_err(|m| lines.err(ln, m))?;
            if vals.len() != 2 * n {
                return Err(lines.err(ln, format!("expected {} values, found {}", 2 * n, vals.len())));
            }
            group.push(CVector::from_iterator(n, pairs(&vals)));
        }
        channels.push(group);
    }
    lines.finish()?;
    ChannelSet::from_vectors(config, seed, channels)
}

pub fn write_channels(set: &ChannelSet, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &format_channels(set))
}

pub fn read_channels(path: impl AsRef<Path>) -> Result<ChannelSet> {
    let path = path.as_ref();
    parse_channels(&read_file(path)?, &path.display().to_string())
}

pub fn format_precoder(w: &FdPrecoder) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{PRECODER_MAGIC}");
    let _ = writeln!(out, "N {}", w.n_antennas());
    let _ = writeln!(out, "G {}", w.groups());
    for row in w.w.row_iter() {
        complex_row(&mut out, row.iter().copied());
    }
    out
}

pub fn parse_precoder(text: &str, label: &str) -> Result<FdPrecoder> {
    let mut lines = Lines::new(text, label);
    lines.expect_exact(PRECODER_MAGIC)?;
    let n: usize = lines.key_value("N")?;
    let g: usize = lines.key_value("G")?;
    let mut w = CMatrix::zeros(n, g);
    for r in 0..n {
        let (_, vals) = lines.reals(2 * g, "precoder row")?;
        for (c, v) in pairs(&vals).enumerate() {
            w[(r, c)] = v;
        }
    }
    lines.finish()?;
    Ok(FdPrecoder::new(w))
}

pub fn write_precoder(w: &FdPrecoder, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &format_precoder(w))
}

pub fn read_precoder(path: impl AsRef<Path>) -> Result<FdPrecoder> {
    let path = path.as_ref();
    parse_precoder(&read_file(path)?, &path.display().to_string())
}

pub fn format_hybrid(h: &HybridPrecoder) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{HYBRID_MAGIC}");
    let _ = writeln!(out, "N {}", h.n_antennas());
    let _ = writeln!(out, "n_rf {}", h.n_rf());
    let _ = writeln!(out, "G {}", h.groups());
    let _ = writeln!(out, "family {}", h.family);
    let _ = writeln!(out, "bits {}", h.resolution);
    for (name, m) in [("phases_a", &h.phases_a), ("phases_b", &h.phases_b)] {
        let _ = writeln!(out, "{name}");
        for row in m.row_iter() {
            push_row(&mut out, row.iter().copied());
        }
    }
    let _ = writeln!(out, "digital");
    for row in h.digital.row_iter() {
        complex_row(&mut out, row.iter().copied());
    }
    out
}

pub fn parse_hybrid(text: &str, label: &str) -> Result<HybridPrecoder> {
    let mut lines = Lines::new(text, label);
    lines.expect_exact(HYBRID_MAGIC)?;
    let n: usize = lines.key_value("N")?;
    let n_rf: usize = lines.key_value("n_rf")?;
    let g: usize = lines.key_value("G")?;
    let family: PhaseFamily = lines.key_value("family")?;
    let resolution: Resolution = lines.key_value("bits")?;
    if n_rf == 0 {
        return Err(lines.err(lines.last, "`n_rf` must be positive"));
    }
    let mut phases = Vec::with_capacity(2);
    for name in ["phases_a", "phases_b"] {
        lines.expect_exact(name)?;
        let mut m = DMatrix::zeros(n, n_rf);
        for r in 0..n {
            let (_, vals) = lines.reals(n_rf, name)?;
            for (c, v) in vals.into_iter().enumerate() {
                m[(r, c)] = v;
            }
        }
        phases.push(m);
    }
    lines.expect_exact("digital")?;
    let mut digital = CMatrix::zeros(n_rf, g);
    for r in 0..n_rf {
        let (_, vals) = lines.reals(2 * g, "digital row")?;
        for (c, v) in pairs(&vals).enumerate() {
            digital[(r, c)] = v;
        }
    }
    lines.finish()?;
    let phases_b = phases.pop().expect("two phase banks");
    let phases_a = phases.pop().expect("two phase banks");
    Ok(HybridPrecoder {
        phases_a,
        phases_b,
        digital,
        family,
        resolution,
    })
}

pub fn write_hybrid(h: &HybridPrecoder, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &format_hybrid(h))
}

pub fn read_hybrid(path: impl AsRef<Path>) -> Result<HybridPrecoder> {
    let path = path.as_ref();
    parse_hybrid(&read_file(path)?, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::generate_channels;
    use crate::hybrid::{decompose, quantize_phases, DecomposeOptions};

    fn sample_w() -> FdPrecoder {
        FdPrecoder::new(CMatrix::from_fn(5, 2, |r, c| {
            C64::new((r as f64 + 0.1).sin() / 3.0, (c as f64 * 1.7 - r as f64).cos() * 1e-7)
        }))
    }

    #[test]
    fn channels_round_trip_bit_exact() {
        let mut cfg = SystemConfig::new(6, vec![2, 3], 4).unwrap();
        cfg.noise_power = 0.3;
        let set = generate_channels(&cfg, 99).unwrap();
        let text = format_channels(&set);
        let back = parse_channels(&text, "mem").unwrap();
        assert_eq!(back.config, set.config);
        assert_eq!(back.seed, 99);
        assert_eq!(back.channels, set.channels);
        assert_eq!(format_channels(&back), text);
    }

    #[test]
    fn precoder_round_trip_bit_exact() {
        let w = sample_w();
        let back = parse_precoder(&format_precoder(&w), "mem").unwrap();
        assert_eq!(back.w, w.w);
    }

    #[test]
    fn hybrid_round_trip_bit_exact() {
        let h = decompose(&sample_w(), DecomposeOptions::default());
        for hy in [h.clone(), quantize_phases(&h, Resolution::Bits(3))] {
            let back = parse_hybrid(&format_hybrid(&hy), "mem").unwrap();
            assert_eq!(back, hy);
        }
    }

    #[test]
    fn numbers_carry_17_significant_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
    }

    #[test]
    fn errors_report_line_numbers() {
        let text = "mhp-fd-precoder 1\nN 2\nG 1\n1 0\n1 zz\n";
        match parse_precoder(text, "w.txt") {
            Err(Error::Parse { line, path, .. }) => {
                assert_eq!(line, 5);
                assert_eq!(path, "w.txt");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_precoder("mhp-fd-precoder 1\nN 2\nG 1\n1 0\n", "x"), Err(Error::Parse { line: 5, .. })));
        assert!(parse_channels("garbage", "x").is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_channels("/nonexistent/dir/ch.txt").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent/dir/ch.txt"));
    }
}
