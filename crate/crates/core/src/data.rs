//! Datasets in LIBSVM sparse format, label normalization, batching and
//! synthetic problem generators.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::DataError;
use crate::objective::QuadraticSum;
use crate::{Matrix, Vector};

/// Sparse design matrix in compressed-row form plus binary labels.
///
/// Column indices are zero-based internally and ascending within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    labels: Vec<f64>,
    dim: usize,
    provenance: String,
}

impl Dataset {
    /// Builds a dataset from per-row `(column, value)` lists with zero-based columns.
    pub fn from_rows(
        rows: Vec<Vec<(usize, f64)>>,
        labels: Vec<f64>,
        dim: usize,
        provenance: impl Into<String>,
    ) -> Result<Self, DataError> {
        if rows.is_empty() {
            return Err(DataError::Empty);
        }
        assert_eq!(rows.len(), labels.len(), "one label per row");
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for (line, row) in rows.into_iter().enumerate() {
            let mut prev: Option<usize> = None;
            for (c, v) in row {
                if c >= dim {
                    return Err(DataError::DimensionOverflow { index: c + 1, dim });
                }
                if prev.is_some_and(|p| c <= p) {
                    return Err(DataError::Parse {
                        line: line + 1,
                        column: 0,
                        message: format!("feature index {} is not ascending", c + 1),
                    });
                }
                prev = Some(c);
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(Self { indptr, indices, values, labels, dim, provenance: provenance.into() })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    /// Divides every column by its largest absolute value (columns of zeros are left alone).
    pub fn scale_max_abs(&mut self) {
        let mut colmax = vec![0.0f64; self.dim];
        for (&c, &v) in self.indices.iter().zip(&self.values) {
            colmax[c] = colmax[c].max(v.abs());
        }
        for (&c, v) in self.indices.iter().zip(self.values.iter_mut()) {
            if colmax[c] > 0.0 {
                *v /= colmax[c];
            }
        }
    }
}

/// Parses LIBSVM text: one `label idx:val idx:val ...` record per line with
/// 1-based, strictly ascending feature indices.
///
/// The dimension is the largest index seen unless `dim_override` is given.
/// Blank lines and `#` comments are skipped.
pub fn parse_libsvm<R: BufRead>(reader: R, dim_override: Option<usize>, provenance: &str) -> Result<Dataset, DataError> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| DataError::Parse { line: lineno, column: 0, message: e.to_string() })?;
        let content = line.split('#').next().unwrap_or("");
        let mut tokens = tokens_with_columns(content);
        let Some((col, label_tok)) = tokens.next() else {
            continue;
        };
        let label: f64 = label_tok.parse().map_err(|_| DataError::Parse {
            line: lineno,
            column: col,
            message: format!("invalid label {label_tok:?}"),
        })?;
        let mut row = Vec::new();
        let mut prev = 0usize;
        for (col, tok) in tokens {
            let err = |message: String| DataError::Parse { line: lineno, column: col, message };
            let (idx, val) = tok.split_once(':').ok_or_else(|| err(format!("expected index:value, got {tok:?}")))?;
            let idx: usize = idx.parse().map_err(|_| err(format!("invalid feature index {idx:?}")))?;
            let val: f64 = val.parse().map_err(|_| err(format!("invalid feature value {val:?}")))?;
            if idx == 0 {
                return Err(err("feature indices are 1-based".into()));
            }
            if idx <= prev {
                return Err(err(format!("feature index {idx} does not follow {prev}")));
            }
            if let Some(dim) = dim_override {
                if idx > dim {
                    return Err(err(format!("feature index {idx} exceeds dimension {dim}")));
                }
            }
            prev = idx;
            max_index = max_index.max(idx);
            row.push((idx - 1, val));
        }
        rows.push(row);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(DataError::Empty);
    }
    let dim = dim_override.unwrap_or(max_index);
    Dataset::from_rows(rows, labels, dim, provenance)
}

fn tokens_with_columns(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = line;
    let mut offset = 0usize;
    std::iter::from_fn(move || {
        let trimmed = rest.trim_start();
        offset += rest.len() - trimmed.len();
        if trimmed.is_empty() {
            return None;
        }
        let end = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
        let tok = &trimmed[..end];
        let col = offset + 1;
        offset += end;
        rest = &trimmed[end..];
        Some((col, tok))
    })
}

/// Reads a LIBSVM file, transparently decompressing `*.gz`.
pub fn read_libsvm_file(path: &Path, dim_override: Option<usize>) -> Result<Dataset, DataError> {
    let io_err = |source| DataError::Io { path: path.to_path_buf(), source };
    let file = File::open(path).map_err(io_err)?;
    let reader: Box<dyn Read> =
        if path.extension().is_some_and(|e| e == "gz") { Box::new(GzDecoder::new(file)) } else { Box::new(file) };
    parse_libsvm(BufReader::new(reader), dim_override, &path.display().to_string())
}

/// Serializes a dataset back to LIBSVM text (1-based indices, shortest
/// round-trip float formatting).
pub fn to_libsvm(ds: &Dataset) -> String {
    let mut out = String::new();
    for i in 0..ds.n_rows() {
        write!(out, "{}", ds.labels[i]).unwrap();
        let (cols, vals) = ds.row(i);
        for (&c, &v) in cols.iter().zip(vals) {
            write!(out, " {}:{}", c + 1, v).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Mapping from raw label values to `{0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap(pub Vec<(f64, f64)>);

impl LabelMap {
    /// `{−1 → 0, +1 → 1}`
    pub fn signed() -> Self {
        Self(vec![(-1.0, 0.0), (1.0, 1.0)])
    }

    /// `{1 → 0, 2 → 1}`
    pub fn one_two() -> Self {
        Self(vec![(1.0, 0.0), (2.0, 1.0)])
    }

    /// Parses `"a:b,c:d"`.
    pub fn parse(spec: &str) -> Result<Self, String> {
        spec.split(',')
            .map(|pair| {
                let (from, to) = pair.split_once(':').ok_or_else(|| format!("expected from:to, got {pair:?}"))?;
                let from: f64 = from.trim().parse().map_err(|_| format!("invalid label {from:?}"))?;
                let to: f64 = to.trim().parse().map_err(|_| format!("invalid label {to:?}"))?;
                if to != 0.0 && to != 1.0 {
                    return Err(format!("labels must map into {{0,1}}, got {to}"));
                }
                Ok((from, to))
            })
            .collect::<Result<_, _>>()
            .map(Self)
    }

    fn lookup(&self, y: f64) -> Option<f64> {
        self.0.iter().find(|(from, _)| *from == y).map(|&(_, to)| to)
    }
}

/// Remaps every label through `map`; fails listing all unmapped values.
pub fn normalize_labels(mut ds: Dataset, map: &LabelMap) -> Result<Dataset, DataError> {
    let mut missing: Vec<f64> = Vec::new();
    for y in ds.labels.iter_mut() {
        match map.lookup(*y) {
            Some(to) => *y = to,
            None => {
                if !missing.contains(y) {
                    missing.push(*y);
                }
            }
        }
    }
    if missing.is_empty() {
        Ok(ds)
    } else {
        missing.sort_by(f64::total_cmp);
        Err(DataError::UnmappedLabels(missing))
    }
}

/// Batch size used for a fraction of `n`: `max(1, ⌈frac · n⌉)`.
pub fn batch_size(n: usize, batch_frac: f64) -> usize {
    ((batch_frac * n as f64).ceil() as usize).clamp(1, n.max(1))
}

/// Partitions `0..n` into contiguous batches of [`batch_size`] (the last one
/// possibly smaller), optionally after a seeded shuffle.
pub fn make_batches(n: usize, batch_frac: f64, shuffle_seed: Option<u64>) -> Vec<Vec<usize>> {
    assert!(batch_frac > 0.0 && batch_frac <= 1.0, "batch fraction must be in (0, 1]");
    let b = batch_size(n, batch_frac);
    let mut order: Vec<usize> = (0..n).collect();
    if let Some(seed) = shuffle_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    order.chunks(b).map(<[usize]>::to_vec).collect()
}

/// Random quadratic finite sum `f_i(x) = ½‖x − a_i‖²` with standard normal
/// centers, returned with its minimizer `mean(a_i)`.
pub fn synth_quadratic(n: usize, p: usize, seed: u64) -> (QuadraticSum, Vector) {
    assert!(n >= 1 && p >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = Matrix::from_fn(p, n, |_, _| standard_normal(&mut rng));
    let q = QuadraticSum::new(centers);
    let minimizer = q.minimizer();
    (q, minimizer)
}

/// Sparse binary classification data resembling one-hot encoded census
/// records: each row activates `active` random features with value 1 and the
/// label follows a logistic model with a random planted weight vector.
pub fn synth_binary_classification(n: usize, p: usize, active: usize, seed: u64) -> Dataset {
    assert!(active <= p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted: Vec<f64> = (0..p).map(|_| standard_normal(&mut rng)).collect();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut cols: Vec<usize> = (0..p).collect();
    for _ in 0..n {
        let (chosen, _) = cols.partial_shuffle(&mut rng, active);
        let mut row: Vec<usize> = chosen.to_vec();
        row.sort_unstable();
        let z: f64 = row.iter().map(|&c| planted[c]).sum::<f64>() / (active.max(1) as f64).sqrt();
        let y = if rng.random::<f64>() < crate::objective::sigmoid(2.0 * z) { 1.0 } else { 0.0 };
        rows.push(row.into_iter().map(|c| (c, 1.0)).collect());
        labels.push(y);
    }
    Dataset::from_rows(rows, labels, p, format!("synthetic-binary(n={n},p={p},active={active},seed={seed})"))
        .expect("generated rows are valid")
}

/// Box–Muller standard normal draw.
pub(crate) fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
