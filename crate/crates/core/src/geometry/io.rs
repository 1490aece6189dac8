//! Lattice file formats.
//!
//! Binary layout (little endian): magic `AFSC1`, `u32 n`, `u32 m`, target
//! code, then per axis `f64 lower, f64 upper, u64 resolution`, then the
//! values. Target codes are a tag byte followed by parameters:
//! `0 q` (ℓ_q^m), `1 q` (averaged), `2 blocks block_len inner outer`
//! (mixed). Exponents are `f64` with `+inf` for ∞.
//!
//! The CSV form starts with `# target <json>`, then a header
//! `x0,..,x{n-1},f0,..,f{m-1}` and one row per node.

use std::io::{Read, Write};
use std::path::Path;

use super::{GridFunction, TargetNorm};
use crate::{Error, Result};

const MAGIC: &[u8; 5] = b"AFSC1";

fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}
fn put_u64(w: &mut impl Write, v: u64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}
fn put_f64(w: &mut impl Write, v: f64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}
fn get<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated lattice file: {e}")))?;
    Ok(b)
}
fn get_u32(r: &mut impl Read) -> Result<u32> {
    Ok(u32::from_le_bytes(get(r)?))
}
fn get_u64(r: &mut impl Read) -> Result<u64> {
    Ok(u64::from_le_bytes(get(r)?))
}
fn get_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_le_bytes(get(r)?))
}

pub fn write_grid_binary(g: &GridFunction, mut w: impl Write) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u32(&mut w, g.dim() as u32)?;
    put_u32(&mut w, g.m() as u32)?;
    match *g.target() {
        TargetNorm::Lq { q, .. } => {
            w.write_all(&[0])?;
            put_f64(&mut w, q)?;
        }
        TargetNorm::Averaged { q, .. } => {
            w.write_all(&[1])?;
            put_f64(&mut w, q)?;
        }
        TargetNorm::Mixed { blocks, block_len, inner, outer } => {
            w.write_all(&[2])?;
            put_u32(&mut w, blocks as u32)?;
            put_u32(&mut w, block_len as u32)?;
            put_f64(&mut w, inner)?;
            put_f64(&mut w, outer)?;
        }
    }
    for a in 0..g.dim() {
        put_f64(&mut w, g.lower()[a])?;
        put_f64(&mut w, g.upper()[a])?;
        put_u64(&mut w, g.resolution()[a] as u64)?;
    }
    for v in g.values() {
        put_f64(&mut w, *v)?;
    }
    Ok(())
}

pub fn read_grid_binary(mut r: impl Read) -> Result<GridFunction> {
    let magic: [u8; 5] = get(&mut r)?;
    if &magic != MAGIC {
        return Err(Error::Format("not an AFSC1 lattice file".into()));
    }
    let n = get_u32(&mut r)? as usize;
    let m = get_u32(&mut r)? as usize;
    let [tag] = get::<1>(&mut r)?;
    let target = match tag {
        0 => TargetNorm::Lq { m, q: get_f64(&mut r)? },
        1 => TargetNorm::Averaged { m, q: get_f64(&mut r)? },
        2 => {
            let blocks = get_u32(&mut r)? as usize;
            let block_len = get_u32(&mut r)? as usize;
            TargetNorm::Mixed { blocks, block_len, inner: get_f64(&mut r)?, outer: get_f64(&mut r)? }
        }
        t => return Err(Error::Format(format!("unknown target code {t}"))),
    };
    if target.m() != m {
        return Err(Error::Format(format!("target describes {} components, header says {m}", target.m())));
    }
    let (mut lower, mut upper, mut res) = (vec![], vec![], vec![]);
    for _ in 0..n {
        lower.push(get_f64(&mut r)?);
        upper.push(get_f64(&mut r)?);
        res.push(get_u64(&mut r)? as usize);
    }
    let count = res
        .iter()
        .try_fold(m, |acc: usize, r| acc.checked_mul(*r))
        .ok_or_else(|| Error::Format("lattice size overflows".into()))?;
    let mut values = Vec::with_capacity(count.min(1 << 24));
    for _ in 0..count {
        values.push(get_f64(&mut r)?);
    }
    GridFunction::new(lower, upper, res, values, target)
}

pub fn write_csv(g: &GridFunction, mut w: impl Write) -> Result<()> {
    writeln!(w, "# target {}", serde_json::to_string(g.target())?)?;
    let mut out = csv::Writer::from_writer(w);
    let header: Vec<String> =
        (0..g.dim()).map(|i| format!("x{i}")).chain((0..g.m()).map(|i| format!("f{i}"))).collect();
    out.write_record(&header)?;
    for i in 0..g.len() {
        let row: Vec<String> = g.node(i).iter().chain(g.value(i)).map(|v| format!("{v:?}")).collect();
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

fn unique_sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    let span = v.last().unwrap_or(&0.0) - v.first().unwrap_or(&0.0);
    let tol = 1e-9 * span.abs().max(1e-300);
    let mut out: Vec<f64> = Vec::new();
    for x in v {
        if out.last().is_none_or(|l| x - l > tol) {
            out.push(x);
        }
    }
    out
}

pub fn read_csv(mut r: impl Read) -> Result<GridFunction> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let (first, rest) = text.split_once('\n').ok_or_else(|| Error::Format("empty CSV".into()))?;
    let json = first
        .trim()
        .strip_prefix("# target")
        .ok_or_else(|| Error::Format("CSV must start with `# target <json>`".into()))?;
    let target: TargetNorm = serde_json::from_str(json.trim())?;
    target.validate()?;
    let m = target.m();

    let mut rd = csv::Reader::from_reader(rest.as_bytes());
    let headers = rd.headers()?.clone();
    let n = headers.iter().filter(|h| h.starts_with('x')).count();
    if n == 0 || headers.len() != n + m {
        return Err(Error::Format(format!("expected {m} value columns after the coordinates")));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Format(format!("bad number {s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let axes: Vec<Vec<f64>> = (0..n).map(|a| unique_sorted(rows.iter().map(|r| r[a]).collect())).collect();
    let res: Vec<usize> = axes.iter().map(Vec::len).collect();
    let total: usize = res.iter().product();
    if total != rows.len() {
        return Err(Error::Format(format!("{} rows do not fill a {res:?} lattice", rows.len())));
    }
    let lower: Vec<f64> = axes.iter().map(|a| a[0]).collect();
    let upper: Vec<f64> = axes.iter().map(|a| *a.last().unwrap()).collect();
    let probe = GridFunction::new(lower.clone(), upper.clone(), res.clone(), vec![0.0; total * m], target.clone())?;
    let strides = probe.strides();
    let mut values = vec![f64::NAN; total * m];
    for row in &rows {
        let mut flat = 0;
        for a in 0..n {
            let i = axes[a].partition_point(|v| *v < row[a] - 1e-9 * (upper[a] - lower[a]));
            flat += i.min(res[a] - 1) * strides[a];
        }
        values[flat * m..(flat + 1) * m].copy_from_slice(&row[n..]);
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Format("CSV rows are not a regular lattice".into()));
    }
    GridFunction::new(lower, upper, res, values, target)
}

/// Read a lattice from disk, choosing the format by extension (`.csv` or binary).
pub fn read_grid(path: &Path) -> Result<GridFunction> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_csv(file)
    } else {
        read_grid_binary(file)
    }
}
