//! Reading and writing datasets, sign specifications, models and traces,
//! plus seeded synthetic generators.
//!
//! Everything here is dense: a file with `n` examples over `d` features
//! costs `n * d * 8` bytes once loaded.

use std::io::{BufRead, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::{DataMatrix, Labels};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::PrimalModel;
use crate::sign::{Sign, SignPattern};
use crate::trace::ConvergenceTrace;

/// Parses SVM-light text: one example per line,
/// `<label> <index>:<value> ...` with strictly increasing 1-based indices.
/// Text after `#` is ignored, as are blank lines. Missing features are 0,
/// `d` is the largest index seen (at least 1) and labels come back as
/// [`Labels::Real`] for the caller to narrow.
pub fn parse_svmlight<R: BufRead>(reader: R) -> Result<DataMatrix> {
    parse_svmlight_with_dim(reader, 0)
}

/// As [`parse_svmlight`], with `d` at least `min_dim`.
pub fn parse_svmlight_with_dim<R: BufRead>(reader: R, min_dim: usize) -> Result<DataMatrix> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut d = min_dim.max(1);
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let body = line.split('#').next().unwrap_or("");
        let mut tokens = body.split_whitespace();
        let Some(label) = tokens.next() else { continue };
        let y: f64 = label
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad label `{label}`")))?;
        if !y.is_finite() {
            return Err(Error::parse(lineno, "label is not finite"));
        }
        let mut row = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| Error::parse(lineno, format!("expected index:value, got `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad index `{idx}`")))?;
            if idx == 0 {
                return Err(Error::parse(lineno, "indices are 1-based"));
            }
            if idx <= last {
                return Err(Error::parse(
                    lineno,
                    format!("index {idx} does not increase after {last}"),
                ));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad value `{val}`")))?;
            if !val.is_finite() {
                return Err(Error::parse(lineno, "feature value is not finite"));
            }
            last = idx;
            row.push((idx, val));
        }
        d = d.max(last);
        rows.push(row);
        labels.push(y);
    }
    if rows.is_empty() {
        return Err(Error::InvalidData("no examples in input".into()));
    }
    let mut features = vec![0.0; d * rows.len()];
    for (i, row) in rows.iter().enumerate() {
        for &(h, v) in row {
            features[i * d + h - 1] = v;
        }
    }
    DataMatrix::new(d, rows.len(), features, Labels::real(labels)?)
}

pub fn read_svmlight_file(path: impl AsRef<Path>) -> Result<DataMatrix> {
    let file = std::fs::File::open(path)?;
    parse_svmlight(std::io::BufReader::new(file))
}

/// Writes SVM-light text with only non-zero features. Class labels are
/// written 1-based. Values use the shortest representation that parses
/// back to the same `f64`.
pub fn write_svmlight<W: Write>(data: &DataMatrix, mut out: W) -> Result<()> {
    for (i, x) in data.columns().enumerate() {
        match data.labels() {
            Labels::Binary(v) => write!(out, "{}", if v[i] > 0.0 { "+1" } else { "-1" })?,
            Labels::Real(v) => write!(out, "{}", v[i])?,
            Labels::Class { classes, .. } => write!(out, "{}", classes[i] + 1)?,
        }
        for (h, &v) in x.iter().enumerate() {
            if v != 0.0 {
                write!(out, " {}:{}", h + 1, v)?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Maps each original feature to its indices after [`split_variable`].
pub type IndexMap = Vec<Vec<usize>>;

/// Replaces feature `h` by `max(0, x_h − θ)` and `max(0, θ − x_h)`, placed
/// at `h` and `h + 1`; later features shift up by one.
pub fn split_variable(data: &DataMatrix, h: usize, threshold: f64) -> Result<(DataMatrix, IndexMap)> {
    let d = data.dim();
    if h >= d {
        return Err(Error::InvalidConfig(format!(
            "feature {h} out of range for d={d}"
        )));
    }
    let mut features = Vec::with_capacity((d + 1) * data.len());
    for x in data.columns() {
        features.extend_from_slice(&x[..h]);
        features.push((x[h] - threshold).max(0.0));
        features.push((threshold - x[h]).max(0.0));
        features.extend_from_slice(&x[h + 1..]);
    }
    let map = (0..d)
        .map(|j| match j.cmp(&h) {
            std::cmp::Ordering::Less => vec![j],
            std::cmp::Ordering::Equal => vec![h, h + 1],
            std::cmp::Ordering::Greater => vec![j + 1],
        })
        .collect();
    let out = DataMatrix::new(d + 1, data.len(), features, data.labels().clone())?;
    Ok((out, map))
}

/// Shuffles with a seeded Fisher–Yates permutation and splits off the
/// first `n_train` examples.
pub fn train_test_split(data: &DataMatrix, n_train: usize, seed: u64) -> Result<(DataMatrix, DataMatrix)> {
    if n_train == 0 || n_train >= data.len() {
        return Err(Error::InvalidConfig(format!(
            "training size must be in 1..{}, got {n_train}",
            data.len()
        )));
    }
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((data.subset(&idx[..n_train])?, data.subset(&idx[n_train..])?))
}

/// A weight vector whose constrained coordinates have magnitude in
/// `[0.5, 1.5]` with the required sign; free coordinates are standard
/// normal.
fn signed_truth(rng: &mut ChaCha8Rng, pattern: &SignPattern) -> Vec<f64> {
    pattern
        .signs()
        .iter()
        .map(|s| {
            let mag = rng.random_range(0.5..1.5);
            match s {
                Sign::Positive => mag,
                Sign::Negative => -mag,
                Sign::Free => rng.sample(StandardNormal),
            }
        })
        .collect()
}

fn gaussian(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Binary data from a planted separator `w*` that respects `pattern`:
/// `x_i ~ N(0, I)`, `y_i = sign(<w*, x_i> + noise ε_i)` with a zero
/// margin counted as +1.
pub fn synth_classification(seed: u64, n: usize, d: usize, pattern: &SignPattern, noise: f64) -> Result<DataMatrix> {
    synth_classification_with_truth(seed, n, d, pattern, noise).map(|(data, _)| data)
}

/// [`synth_classification`] that also returns `w*`.
pub fn synth_classification_with_truth(
    seed: u64,
    n: usize,
    d: usize,
    pattern: &SignPattern,
    noise: f64,
) -> Result<(DataMatrix, Vec<f64>)> {
    check_synth_pattern(pattern, d, 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = signed_truth(&mut rng, pattern);
    let features = gaussian(&mut rng, n * d);
    let labels = features
        .chunks_exact(d)
        .map(|x| {
            let e: f64 = rng.sample(StandardNormal);
            if linalg::dot(&truth, x) + noise * e >= 0.0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    Ok((DataMatrix::new(d, n, features, Labels::binary(labels)?)?, truth))
}

/// Real targets `y_i = <w*, x_i> + noise ε_i` with `w*` as in
/// [`synth_classification`].
pub fn synth_regression(seed: u64, n: usize, d: usize, pattern: &SignPattern, noise: f64) -> Result<DataMatrix> {
    check_synth_pattern(pattern, d, 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = signed_truth(&mut rng, pattern);
    let features = gaussian(&mut rng, n * d);
    let labels = features
        .chunks_exact(d)
        .map(|x| {
            let e: f64 = rng.sample(StandardNormal);
            linalg::dot(&truth, x) + noise * e
        })
        .collect();
    DataMatrix::new(d, n, features, Labels::real(labels)?)
}

/// Class data from a planted `W*` (`d × m`, respecting `pattern`):
/// `y_i = argmax_j (W*ᵀ x_i + noise ε_i)_j`.
pub fn synth_multiclass(
    seed: u64,
    n: usize,
    d: usize,
    m: usize,
    pattern: &SignPattern,
    noise: f64,
) -> Result<DataMatrix> {
    check_synth_pattern(pattern, d, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = signed_truth(&mut rng, pattern);
    let features = gaussian(&mut rng, n * d);
    let classes = features
        .chunks_exact(d)
        .map(|x| {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for j in 0..m {
                let e: f64 = rng.sample(StandardNormal);
                let s = linalg::dot(&truth[j * d..(j + 1) * d], x) + noise * e;
                if s > best_score {
                    best = j;
                    best_score = s;
                }
            }
            best
        })
        .collect();
    DataMatrix::new(d, n, features, Labels::class(classes, m)?)
}

fn check_synth_pattern(pattern: &SignPattern, d: usize, m: usize) -> Result<()> {
    if pattern.dim() != d || pattern.classes() != m {
        return Err(Error::DimensionMismatch {
            what: "sign pattern size",
            expected: d * m,
            found: pattern.len(),
        });
    }
    if d == 0 {
        return Err(Error::InvalidData("need d >= 1".into()));
    }
    Ok(())
}

/// Number of levels of each categorical attribute in
/// [`synth_phishing_like`]: 22 binary and 8 ternary attributes, 68 one-hot
/// columns in total.
const PHISHING_LEVELS: [usize; 30] = [
    2, 3, 2, 2, 3, 2, 2, 3, 2, 2, 2, 3, 2, 2, 3, 2, 2, 2, 3, 2, 2, 2, 3, 2, 2, 2, 2, 3, 2, 2,
];

/// A stand-in for the 68-column one-hot phishing-website data: 30
/// categorical attributes, each example has exactly one active level per
/// attribute (so `||x||² = 30`), and labels come from a noisy planted
/// linear rule over the levels.
pub fn synth_phishing_like(seed: u64, n: usize) -> Result<DataMatrix> {
    let d: usize = PHISHING_LEVELS.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let level_weight: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let mut features = vec![0.0; n * d];
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let x = &mut features[i * d..(i + 1) * d];
        let mut offset = 0;
        for &levels in &PHISHING_LEVELS {
            x[offset + rng.random_range(0..levels)] = 1.0;
            offset += levels;
        }
        let e: f64 = rng.sample(StandardNormal);
        let margin = linalg::dot(&level_weight, x) + 0.4 + 2.0 * e;
        labels.push(if margin >= 0.0 { 1.0 } else { -1.0 });
    }
    DataMatrix::new(d, n, features, Labels::binary(labels)?)
}

fn parse_index_list(list: &str, d: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || Error::InvalidConfig(format!("bad index range `{part}`"));
        let (a, b) = match part.split_once('-') {
            Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
            None => {
                let a: usize = part.parse().map_err(|_| bad())?;
                (a, a)
            }
        };
        if a == 0 || a > b || b > d {
            return Err(Error::InvalidConfig(format!(
                "index range `{part}` outside 1..={d}"
            )));
        }
        out.extend(a - 1..b);
    }
    Ok(out)
}

/// Parses an inline sign spec such as `pos=1,3-6;neg=2` (1-based, ranges
/// inclusive). Unlisted coordinates are free; `none` leaves all free.
pub fn parse_sign_spec(spec: &str, d: usize) -> Result<SignPattern> {
    let spec = spec.trim();
    let mut signs = vec![Sign::Free; d];
    if spec == "none" {
        return Ok(SignPattern::new(signs));
    }
    for clause in spec.split(';').map(str::trim).filter(|c| !c.is_empty()) {
        let (key, list) = clause
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("sign clause `{clause}` needs `=`")))?;
        let sign = match key.trim() {
            "pos" => Sign::Positive,
            "neg" => Sign::Negative,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown sign key `{other}`, expected pos or neg"
                )))
            }
        };
        for h in parse_index_list(list, d)? {
            if signs[h] != Sign::Free && signs[h] != sign {
                return Err(Error::InvalidConfig(format!(
                    "feature {} is both pos and neg",
                    h + 1
                )));
            }
            signs[h] = sign;
        }
    }
    Ok(SignPattern::new(signs))
}

/// Reads a sign file of `d` lines. Each line holds one entry in
/// {−1, 0, +1} (shared by all `m` columns) or `m` entries, one per class.
pub fn read_sign_file<R: BufRead>(reader: R, d: usize, m: usize) -> Result<SignPattern> {
    let mut rows: Vec<Vec<Sign>> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let row = body
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<i64>()
                    .map_err(|_| Error::parse(lineno + 1, format!("bad sign `{t}`")))
                    .and_then(|v| Sign::from_int(v).map_err(|e| Error::parse(lineno + 1, e.to_string())))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != 1 && row.len() != m {
            return Err(Error::parse(
                lineno + 1,
                format!("expected 1 or {m} sign entries, got {}", row.len()),
            ));
        }
        rows.push(row);
    }
    if rows.len() != d {
        return Err(Error::DimensionMismatch {
            what: "sign file lines",
            expected: d,
            found: rows.len(),
        });
    }
    let mut signs = Vec::with_capacity(d * m);
    for j in 0..m {
        for row in &rows {
            signs.push(if row.len() == 1 { row[0] } else { row[j] });
        }
    }
    SignPattern::matrix(d, m, signs)
}

/// Resolves a sign spec that is `none`, an inline `pos=…;neg=…` string, or
/// a path to a sign file, for `d` features and `m` columns.
pub fn load_sign_spec(spec: &str, d: usize, m: usize) -> Result<SignPattern> {
    if spec.trim() == "none" || spec.contains('=') {
        let p = parse_sign_spec(spec, d)?;
        return if m == 1 { Ok(p) } else { p.broadcast(m) };
    }
    let file = std::fs::File::open(spec)?;
    read_sign_file(std::io::BufReader::new(file), d, m)
}

/// Metadata stored in a model file header.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelHeader {
    pub lambda: f64,
    pub loss: String,
    pub seed: u64,
}

/// Writes `# lambda=<x> loss=<name> seed=<s>` (plus ` classes=<m>` for
/// multiclass models), then one `h c_h w_h` line per coordinate, or
/// `h j c_hj w_hj` for multiclass models. Indices are 1-based.
pub fn write_model<W: Write>(model: &PrimalModel, header: &ModelHeader, mut out: W) -> Result<()> {
    let m = model.outputs();
    write!(
        out,
        "# lambda={} loss={} seed={}",
        header.lambda, header.loss, header.seed
    )?;
    if m > 1 {
        write!(out, " classes={m}")?;
    }
    writeln!(out)?;
    let d = model.dim();
    for j in 0..m {
        for h in 0..d {
            let idx = j * d + h;
            let c = model.pattern().get(idx);
            let w = model.weights()[idx];
            if m > 1 {
                writeln!(out, "{} {} {} {}", h + 1, j + 1, c, w)?;
            } else {
                writeln!(out, "{} {} {}", h + 1, c, w)?;
            }
        }
    }
    Ok(())
}

/// Inverse of [`write_model`].
pub fn read_model<R: BufRead>(reader: R) -> Result<(PrimalModel, ModelHeader)> {
    let mut lines = reader.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty model file"))??;
    let head = first
        .strip_prefix('#')
        .ok_or_else(|| Error::parse(1, "missing `#` header"))?;
    let (mut lambda, mut loss, mut seed, mut classes) = (None, None, None, 1usize);
    for field in head.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| Error::parse(1, format!("bad header field `{field}`")))?;
        let bad = || Error::parse(1, format!("bad value in `{field}`"));
        match k {
            "lambda" => lambda = Some(v.parse::<f64>().map_err(|_| bad())?),
            "loss" => loss = Some(v.to_string()),
            "seed" => seed = Some(v.parse::<u64>().map_err(|_| bad())?),
            "classes" => classes = v.parse().map_err(|_| bad())?,
            _ => return Err(Error::parse(1, format!("unknown header field `{k}`"))),
        }
    }
    let header = ModelHeader {
        lambda: lambda.ok_or_else(|| Error::parse(1, "header lacks lambda"))?,
        loss: loss.ok_or_else(|| Error::parse(1, "header lacks loss"))?,
        seed: seed.ok_or_else(|| Error::parse(1, "header lacks seed"))?,
    };
    let mut entries: Vec<(usize, usize, Sign, f64)> = Vec::new();
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let line = line?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let expected = if classes > 1 { 4 } else { 3 };
        if toks.len() != expected {
            return Err(Error::parse(lineno, format!("expected {expected} fields")));
        }
        let num = |t: &str| t.parse::<usize>().map_err(|_| Error::parse(lineno, format!("bad index `{t}`")));
        let h = num(toks[0])?;
        let j = if classes > 1 { num(toks[1])? } else { 1 };
        let c: i64 = toks[expected - 2]
            .parse()
            .map_err(|_| Error::parse(lineno, "bad sign flag"))?;
        let w: f64 = toks[expected - 1]
            .parse()
            .map_err(|_| Error::parse(lineno, "bad weight"))?;
        if h == 0 || j == 0 || j > classes {
            return Err(Error::parse(lineno, "index out of range"));
        }
        entries.push((h - 1, j - 1, Sign::from_int(c)?, w));
    }
    let d = entries.iter().map(|e| e.0 + 1).max().unwrap_or(0);
    if d == 0 || entries.len() != d * classes {
        return Err(Error::InvalidData(format!(
            "model file has {} entries, expected d x {classes}",
            entries.len()
        )));
    }
    let mut signs = vec![Sign::Free; d * classes];
    let mut weights = vec![f64::NAN; d * classes];
    for (h, j, c, w) in entries {
        signs[j * d + h] = c;
        weights[j * d + h] = w;
    }
    if weights.iter().any(|w| w.is_nan()) {
        return Err(Error::InvalidData("model file has duplicate entries".into()));
    }
    let pattern = SignPattern::matrix(d, classes, signs)?;
    Ok((PrimalModel::new(weights, pattern)?, header))
}

/// Writes a trace as CSV with header `epoch,primal,dual,gap,wall_ms`;
/// absent values are empty fields.
pub fn write_trace_csv<W: Write>(trace: &ConvergenceTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["epoch", "primal", "dual", "gap", "wall_ms"]).map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in trace.rows() {
        w.write_record([
            r.epoch.to_string(),
            r.primal.to_string(),
            opt(r.dual),
            opt(r.gap),
            r.wall_ms.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dense CSV matrix whose first column is the label and whose
/// remaining columns are features, e.g. a precomputed similarity matrix.
pub fn read_dense_csv<R: Read>(input: R, has_header: bool) -> Result<DataMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut labels = Vec::new();
    let mut features = Vec::new();
    let mut d = None;
    for (k, record) in reader.records().enumerate() {
        let lineno = k + 1 + usize::from(has_header);
        let record = record.map_err(|e| Error::parse(lineno, e.to_string()))?;
        let values = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| Error::parse(lineno, format!("bad number `{f}`"))))
            .collect::<Result<Vec<_>>>()?;
        if values.len() < 2 {
            return Err(Error::parse(lineno, "need a label and at least one feature"));
        }
        match d {
            None => d = Some(values.len() - 1),
            Some(d) if d != values.len() - 1 => {
                return Err(Error::parse(lineno, format!("expected {} columns", d + 1)))
            }
            _ => {}
        }
        labels.push(values[0]);
        features.extend_from_slice(&values[1..]);
    }
    let d = d.ok_or_else(|| Error::InvalidData("no rows in CSV input".into()))?;
    DataMatrix::new(d, labels.len(), features, Labels::real(labels)?)
}
