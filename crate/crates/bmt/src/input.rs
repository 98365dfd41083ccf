use std::path::Path;
use std::str::FromStr;

use bmt_core::catalog;
use bmt_core::likelihood::{sample_covariance, SampleCovariance};
use bmt_core::{parse_newick, BigInt, BigRational, PhyloTree};

use crate::CliError;

/// A Newick string, or the name of a catalog tree (`fig1`, `star4`, ...).
pub fn resolve_tree(spec: &str) -> Result<PhyloTree, CliError> {
    let spec = spec.trim();
    if spec.contains('(') {
        return parse_newick(spec).map_err(|e| CliError::Usage(format!("bad tree {spec:?}: {e}")));
    }
    catalog::find(spec)
        .map(|c| c.tree())
        .ok_or_else(|| CliError::Usage(format!("{spec:?} is neither Newick nor a catalog name")))
}

/// Exact value of a decimal (`-1.25e-3`), integer or fraction (`3/7`).
pub fn parse_rational(text: &str) -> Result<BigRational, CliError> {
    let t = text.trim();
    let bad = || CliError::Usage(format!("not a number: {t:?}"));
    if t.contains('/') {
        return BigRational::from_str(t).map_err(|_| bad());
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty()
        || !(int.chars().chain(frac.chars())).all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let all = format!("{int}{frac}");
    let mut num = BigInt::from_str(if all.is_empty() { "0" } else { &all }).map_err(|_| bad())?;
    if neg {
        num = -num;
    }
    let shift = exp - frac.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if shift >= 0 {
        BigRational::from_integer(num * ten.pow(shift as u32))
    } else {
        BigRational::new(num, ten.pow((-shift) as u32))
    };
    Ok(value)
}

fn read_rows(path: &Path) -> Result<Vec<Vec<BigRational>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_path(path)?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push(
            rec.iter()
                .map(parse_rational)
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    Ok(rows)
}

/// A square covariance matrix, one row per line.
pub fn read_covariance(path: &Path) -> Result<SampleCovariance, CliError> {
    let rows = read_rows(path)?;
    if rows.iter().any(|r| r.len() != rows.len()) {
        return Err(CliError::Usage(format!(
            "{} is not a square matrix",
            path.display()
        )));
    }
    Ok(SampleCovariance::new(rows)?)
}

/// Samples, one observation per line; the covariance uses mean zero.
pub fn read_samples(path: &Path) -> Result<SampleCovariance, CliError> {
    Ok(sample_covariance(&read_rows(path)?)?)
}
