//! Synthetic instance generation, LIBSVM-format ingestion, group files, and
//! report serialization.
//!
//! All randomness flows through a single ChaCha8 stream keyed by the seed
//! (matrix entries first, then group sizes, then noise), so generated
//! instances are bit-reproducible across runs and platforms. File formats
//! are 1-based on disk and translated to 0-based indices at this boundary.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SglError};
use crate::float::FloatT;
use crate::model::{DesignMatrix, GroupPartition, SolveReport, WeightMode};

/// A generated problem instance together with its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticInstance<T> {
    pub a: DesignMatrix<T>,
    pub b: Vec<T>,
    pub group_sizes: Vec<usize>,
    pub truth: Vec<T>,
}

/// Draws `g` contiguous group sizes summing to `n`: uniform in
/// `[n/g - n/(4g), n/g + n/(4g)]` with the last group absorbing the
/// remainder (clamped so every group keeps at least one index).
pub fn draw_group_sizes(n: usize, g: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    if g < 1 || n < g {
        return Err(SglError::InvalidArgument(format!(
            "need 1 <= g <= n, got g = {g}, n = {n}"
        )));
    }
    let base = n / g;
    let jitter = n / (4 * g);
    let lo = base.saturating_sub(jitter).max(1);
    let hi = base + jitter;
    let mut sizes = Vec::with_capacity(g);
    let mut left = n;
    for l in 0..g - 1 {
        let groups_after = g - l - 1;
        let cap = left - groups_after; // keep >= 1 for each remaining group
        let s = rng.gen_range(lo..=hi).min(cap).max(1);
        sizes.push(s);
        left -= s;
    }
    sizes.push(left);
    Ok(sizes)
}

/// Greedy contiguous partition with sizes uniform around the requested
/// average, used by the auto-grouping CLI path.
pub fn draw_sizes_by_average(n: usize, avg: usize, seed: u64) -> Result<Vec<usize>> {
    if avg < 1 || n < 1 {
        return Err(SglError::InvalidArgument(format!(
            "need avg >= 1 and n >= 1, got avg = {avg}, n = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = avg / 4;
    let lo = avg.saturating_sub(jitter).max(1);
    let hi = avg + jitter;
    let mut sizes = Vec::new();
    let mut left = n;
    while left > 0 {
        let s = rng.gen_range(lo..=hi).min(left);
        sizes.push(s);
        left -= s;
    }
    Ok(sizes)
}

/// Generates the standard synthetic family: a standard-normal dense design
/// matrix, contiguous groups with randomized sizes around `n/g`, a ground
/// truth carrying `(1, 2, ..., 10, 0, ...)` in each of the first ten groups,
/// and `b = A x + noise`.
pub fn gen_synthetic<T: FloatT>(
    m: usize,
    n: usize,
    g: usize,
    seed: u64,
    noise_std: f64,
) -> Result<SyntheticInstance<T>> {
    if m < 1 {
        return Err(SglError::InvalidArgument("m must be positive".into()));
    }
    if g < 1 || n < g {
        return Err(SglError::InvalidArgument(format!(
            "need 1 <= g <= n, got g = {g}, n = {n}"
        )));
    }
    if noise_std < 0.0 {
        return Err(SglError::InvalidArgument(
            "noise_std must be nonnegative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut data = Vec::with_capacity(m * n);
    for _ in 0..m * n {
        let v: f64 = rng.sample(StandardNormal);
        data.push(T::from_f64(v).unwrap());
    }
    let a = DesignMatrix::dense(m, n, data)?;

    let group_sizes = draw_group_sizes(n, g, &mut rng)?;

    let mut truth = vec![T::zero(); n];
    let mut start = 0usize;
    for (l, &size) in group_sizes.iter().enumerate() {
        if l < 10 {
            for j in 0..size.min(10) {
                truth[start + j] = T::from_usize(j + 1).unwrap();
            }
        }
        start += size;
    }

    let mut b = a.matvec(&truth);
    if noise_std > 0.0 {
        for bi in &mut b {
            let e: f64 = rng.sample(StandardNormal);
            *bi += T::from_f64(noise_std * e).unwrap();
        }
    }

    Ok(SyntheticInstance {
        a,
        b,
        group_sizes,
        truth,
    })
}

/// Parses a LIBSVM-format file: each line `label idx:val ...` with 1-based,
/// strictly ascending indices. `n` is the largest index observed, or
/// `n_min` if that is larger.
pub fn read_libsvm<T: FloatT>(path: &Path) -> Result<(DesignMatrix<T>, Vec<T>)> {
    read_libsvm_min_cols(path, 0)
}

pub fn read_libsvm_min_cols<T: FloatT>(
    path: &Path,
    n_min: usize,
) -> Result<(DesignMatrix<T>, Vec<T>)> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut labels: Vec<T> = Vec::new();
    let mut rows: Vec<Vec<(usize, T)>> = Vec::new();
    let mut n = n_min;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let mut tokens = line.split_whitespace();
        let label_tok = match tokens.next() {
            Some(t) => t,
            None => continue, // blank line
        };
        let label = label_tok.parse::<T>().map_err(|_| SglError::Parse {
            line: lineno,
            msg: format!("bad label {label_tok:?}"),
        })?;
        let mut row: Vec<(usize, T)> = Vec::new();
        let mut prev_idx = 0usize;
        for tok in tokens {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| SglError::Parse {
                line: lineno,
                msg: format!("expected idx:val, got {tok:?}"),
            })?;
            let idx = idx_s.parse::<usize>().map_err(|_| SglError::Parse {
                line: lineno,
                msg: format!("bad index {idx_s:?}"),
            })?;
            if idx < 1 {
                return Err(SglError::Parse {
                    line: lineno,
                    msg: "indices are 1-based".into(),
                });
            }
            if idx <= prev_idx {
                return Err(SglError::Parse {
                    line: lineno,
                    msg: format!("indices not ascending at {idx}"),
                });
            }
            let val = val_s.parse::<T>().map_err(|_| SglError::Parse {
                line: lineno,
                msg: format!("bad value {val_s:?}"),
            })?;
            prev_idx = idx;
            n = n.max(idx);
            row.push((idx - 1, val));
        }
        labels.push(label);
        rows.push(row);
    }

    let m = rows.len();
    let a = DesignMatrix::from_sparse_rows(m, n, &rows)?;
    Ok((a, labels))
}

/// Writes a dense or sparse matrix with labels in LIBSVM format. Values use
/// shortest round-trip decimal formatting, so a write/read cycle reproduces
/// them exactly.
pub fn write_libsvm<T: FloatT>(a: &DesignMatrix<T>, b: &[T], path: &Path) -> Result<()> {
    let dense = a.to_dense();
    let mut w = BufWriter::new(File::create(path)?);
    for i in 0..a.nrows() {
        let mut line = format!("{}", b[i]);
        for j in 0..a.ncols() {
            let v = dense[(i, j)];
            if v != T::zero() {
                line.push_str(&format!(" {}:{}", j + 1, v));
            }
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a group file: one 1-based group id per line, `n` lines. Ids need
/// not be contiguous; they are normalized densely in order of first
/// appearance. Weights follow the requested mode.
pub fn read_groups<T: FloatT>(path: &Path, n: usize, mode: WeightMode) -> Result<GroupPartition<T>> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut id_order: Vec<u64> = Vec::new();
    let mut count = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let tok = line.trim();
        if tok.is_empty() {
            return Err(SglError::Parse {
                line: lineno,
                msg: "empty line in group file".into(),
            });
        }
        let id = tok.parse::<u64>().map_err(|_| SglError::Parse {
            line: lineno,
            msg: format!("bad group id {tok:?}"),
        })?;
        if id < 1 {
            return Err(SglError::Parse {
                line: lineno,
                msg: "group ids are 1-based".into(),
            });
        }
        if count >= n {
            return Err(SglError::Parse {
                line: lineno,
                msg: format!("more than {n} lines in group file"),
            });
        }
        let slot = match id_order.iter().position(|&known| known == id) {
            Some(s) => s,
            None => {
                id_order.push(id);
                groups.push(Vec::new());
                groups.len() - 1
            }
        };
        groups[slot].push(count);
        count += 1;
    }
    if count != n {
        return Err(SglError::Parse {
            line: count,
            msg: format!("group file has {count} lines, expected {n}"),
        });
    }
    GroupPartition::with_weight_mode(groups, mode, n)
}

/// Writes per-index 1-based group ids for a contiguous partition.
pub fn write_groups(sizes: &[usize], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (l, &size) in sizes.iter().enumerate() {
        for _ in 0..size {
            writeln!(w, "{}", l + 1)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes one value per line with shortest round-trip formatting.
pub fn write_vector<T: FloatT>(v: &[T], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for x in v {
        writeln!(w, "{x}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vector<T: FloatT>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let tok = line.trim();
        if tok.is_empty() {
            continue;
        }
        out.push(tok.parse::<T>().map_err(|_| SglError::Parse {
            line: lineno + 1,
            msg: format!("bad number {tok:?}"),
        })?);
    }
    Ok(out)
}

/// On-disk report: the solver summary plus the fully resolved configuration
/// that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportDocument {
    #[serde(flatten)]
    pub report: SolveReport,
    pub config: serde_json::Value,
}

/// Serializes a report with its configuration echo as pretty JSON. Float
/// fields keep full round-trip precision.
pub fn write_report(report: &SolveReport, config: serde_json::Value, path: &Path) -> Result<()> {
    let doc = ReportDocument {
        report: report.clone(),
        config,
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &doc)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<ReportDocument> {
    let file = File::open(path)?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_is_deterministic() {
        let a: SyntheticInstance<f64> = gen_synthetic(10, 30, 4, 7, 1.0).unwrap();
        let b: SyntheticInstance<f64> = gen_synthetic(10, 30, 4, 7, 1.0).unwrap();
        assert_eq!(a.b, b.b);
        assert_eq!(a.group_sizes, b.group_sizes);
        assert_eq!(a.truth, b.truth);
        let da = a.a.to_dense();
        let db = b.a.to_dense();
        for i in 0..10 {
            for j in 0..30 {
                assert_eq!(da[(i, j)].to_bits(), db[(i, j)].to_bits());
            }
        }
    }

    #[test]
    fn synthetic_truth_respects_noiseless_fit() {
        let inst: SyntheticInstance<f64> = gen_synthetic(8, 40, 4, 3, 0.0).unwrap();
        let ax = inst.a.matvec(&inst.truth);
        for (u, v) in ax.iter().zip(&inst.b) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn synthetic_truth_has_expected_support() {
        let inst: SyntheticInstance<f64> = gen_synthetic(30, 3000, 100, 42, 1.0).unwrap();
        assert!(inst.group_sizes.iter().all(|&s| s >= 10));
        let nnz = inst.truth.iter().filter(|&&v| v != 0.0).count();
        assert_eq!(nnz, 100);
    }

    #[test]
    fn synthetic_rejects_bad_shapes() {
        assert!(gen_synthetic::<f64>(5, 3, 4, 0, 1.0).is_err());
        assert!(gen_synthetic::<f64>(5, 3, 0, 0, 1.0).is_err());
    }

    #[test]
    fn libsvm_grammar() {
        let dir = std::env::temp_dir().join(format!("sglasso-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("tiny.libsvm");
        std::fs::write(&path, "1.5 1:2.0 3:-1.0\n-0.25\n").unwrap();
        let (a, b): (DesignMatrix<f64>, Vec<f64>) = read_libsvm(&path).unwrap();
        assert_eq!(a.nrows(), 2);
        assert_eq!(a.ncols(), 3);
        assert_eq!(b, vec![1.5, -0.25]);
        let d = a.to_dense();
        assert_eq!(d[(0, 0)], 2.0);
        assert_eq!(d[(0, 2)], -1.0);
        // second row (empty feature list) is all zeros
        for j in 0..3 {
            assert_eq!(d[(1, j)], 0.0);
        }
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn libsvm_rejects_malformed_input() {
        let dir = std::env::temp_dir().join(format!("sglasso-io-bad-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        for (name, text) in [
            ("nonascending", "1.0 2:1.0 2:2.0\n"),
            ("zeroindex", "1.0 0:1.0\n"),
            ("badtoken", "1.0 3;2.0\n"),
            ("badvalue", "1.0 1:abc\n"),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, text).unwrap();
            let r: Result<(DesignMatrix<f64>, Vec<f64>)> = read_libsvm(&path);
            match r {
                Err(SglError::Parse { line, .. }) => assert_eq!(line, 1),
                other => panic!("expected parse error for {name}, got {other:?}"),
            }
            std::fs::remove_file(&path).unwrap();
        }
    }

    #[test]
    fn group_file_normalization() {
        let dir = std::env::temp_dir().join(format!("sglasso-grp-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("groups.txt");
        std::fs::write(&path, "1\n5\n1\n").unwrap();
        let part: GroupPartition<f64> = read_groups(&path, 3, WeightMode::One).unwrap();
        assert_eq!(part.num_groups(), 2);
        assert_eq!(part.group(0), &[0, 2]);
        assert_eq!(part.group(1), &[1]);
        // wrong line count
        assert!(read_groups::<f64>(&path, 4, WeightMode::One).is_err());
        std::fs::remove_file(&path).unwrap();
    }
}
