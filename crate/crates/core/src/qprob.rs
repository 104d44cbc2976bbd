//! Joint distributions as pure states, their density matrices, and partial
//! traces onto either factor.
//!
//! Weights enter the state directly as amplitudes (normalized by the
//! Euclidean norm), not as square roots of probabilities. Three unit weights
//! therefore give amplitudes `1/√3` and reduced off-diagonals of `1/3`. The
//! Born machine in [`crate::qcbm`] uses the other reading.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const TOL: f64 = 1e-12;

/// Nonnegative weights over `rows × cols` label pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    rows: Vec<String>,
    cols: Vec<String>,
    weights: Vec<Vec<f64>>,
}

impl JointDistribution {
    pub fn new(rows: Vec<String>, cols: Vec<String>, weights: Vec<Vec<f64>>) -> Result<Self> {
        if weights.len() != rows.len() || weights.iter().any(|r| r.len() != cols.len()) {
            return Err(Error::arg(format!(
                "weight matrix shape does not match {} rows × {} columns",
                rows.len(),
                cols.len()
            )));
        }
        let flat = weights.iter().flatten();
        if flat.clone().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::arg("joint weights must be finite and nonnegative"));
        }
        if !flat.clone().any(|w| *w > 0.0) {
            return Err(Error::arg("joint distribution has no positive weight"));
        }
        Ok(JointDistribution { rows, cols, weights })
    }

    /// Builds the distribution from `(prefix, suffix, weight)` triples. Labels
    /// are indexed in first-appearance order; repeated pairs accumulate.
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S, f64)>,
        S: Into<String>,
    {
        let mut rows: Vec<String> = Vec::new();
        let mut cols: Vec<String> = Vec::new();
        let mut cells: Vec<(usize, usize, f64)> = Vec::new();
        for (p, s, w) in pairs {
            let (p, s) = (p.into(), s.into());
            let i = index_of(&mut rows, p);
            let j = index_of(&mut cols, s);
            cells.push((i, j, w));
        }
        let mut weights = vec![vec![0.0; cols.len()]; rows.len()];
        for (i, j, w) in cells {
            weights[i][j] += w;
        }
        JointDistribution::new(rows, cols, weights)
    }

    /// Reads `prefix,suffix,weight` CSV. A header row is tolerated.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut pairs = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = Some(n + 1);
            if rec.len() != 3 {
                return Err(Error::format(line, format!("expected 3 fields, found {}", rec.len())));
            }
            let weight = match rec[2].parse::<f64>() {
                Ok(w) => w,
                Err(_) if n == 0 => continue,
                Err(_) => return Err(Error::format(line, format!("bad weight {:?}", &rec[2]))),
            };
            pairs.push((rec[0].to_string(), rec[1].to_string(), weight));
        }
        if pairs.is_empty() {
            return Err(Error::format(None, "no pairs in joint distribution CSV"));
        }
        JointDistribution::from_pairs(pairs).map_err(|e| match e {
            Error::InvalidArgument(m) => Error::format(None, m),
            e => e,
        })
    }

    pub fn rows(&self) -> &[String] {
        &self.rows
    }

    pub fn cols(&self) -> &[String] {
        &self.cols
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }
}

fn index_of(labels: &mut Vec<String>, label: String) -> usize {
    match labels.iter().position(|l| *l == label) {
        Some(i) => i,
        None => {
            labels.push(label);
            labels.len() - 1
        }
    }
}

/// Unit-norm state over row-major label pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    rows: Vec<String>,
    cols: Vec<String>,
    amplitudes: Vec<f64>,
}

impl PureState {
    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, row: &str, col: &str) -> Option<f64> {
        let i = self.rows.iter().position(|r| r == row)?;
        let j = self.cols.iter().position(|c| c == col)?;
        Some(self.amplitudes[i * self.cols.len() + j])
    }

    pub fn pair_labels(&self) -> Vec<String> {
        pair_labels(&self.rows, &self.cols)
    }
}

fn pair_labels(rows: &[String], cols: &[String]) -> Vec<String> {
    rows.iter()
        .flat_map(|r| cols.iter().map(move |c| format!("{r} {c}")))
        .collect()
}

/// Flattens the weight matrix row-major and divides by its Euclidean norm.
pub fn flatten_normalize(d: &JointDistribution) -> Result<PureState> {
    let flat: Vec<f64> = d.weights.iter().flatten().copied().collect();
    let norm = flat.iter().map(|w| w * w).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::arg("cannot normalize an all-zero distribution"));
    }
    Ok(PureState {
        rows: d.rows.clone(),
        cols: d.cols.clone(),
        amplitudes: flat.into_iter().map(|w| w / norm).collect(),
    })
}

/// Square complex matrix with one label per basis element. A matrix over a
/// product space also carries its two factor label lists, which partial
/// traces need.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    labels: Vec<String>,
    factors: Option<(Vec<String>, Vec<String>)>,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(labels: Vec<String>, matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() != labels.len() {
            return Err(Error::arg(format!(
                "{}×{} matrix does not match {} labels",
                matrix.nrows(),
                matrix.ncols(),
                labels.len()
            )));
        }
        Ok(DensityMatrix {
            labels,
            factors: None,
            matrix,
        })
    }

    /// A matrix over `left ⊗ right`, basis ordered row-major.
    pub fn bipartite(
        left: Vec<String>,
        right: Vec<String>,
        matrix: DMatrix<Complex64>,
    ) -> Result<Self> {
        let mut dm = DensityMatrix::new(pair_labels(&left, &right), matrix)?;
        dm.factors = Some((left, right));
        Ok(dm)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn factors(&self) -> Option<(&[String], &[String])> {
        self.factors.as_ref().map(|(l, r)| (l.as_slice(), r.as_slice()))
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[(i, j)]
    }

    /// Entry addressed by labels.
    pub fn entry(&self, row: &str, col: &str) -> Option<Complex64> {
        let i = self.labels.iter().position(|l| l == row)?;
        let j = self.labels.iter().position(|l| l == col)?;
        Some(self.matrix[(i, j)])
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (i..n).all(|j| (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm() <= tol))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        // Symmetrize first so rounding noise cannot break the Hermitian solver.
        let h = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Hermitian, unit trace and positive semidefinite within the given tolerances.
    pub fn is_valid(&self, tol: f64, eig_tol: f64) -> bool {
        self.is_hermitian(tol)
            && (self.trace() - Complex64::new(1.0, 0.0)).norm() <= tol
            && self.min_eigenvalue() >= -eig_tol
    }

    fn require_factors(&self) -> Result<(&[String], &[String])> {
        let (l, r) = self
            .factors()
            .ok_or_else(|| Error::arg("partial trace needs a matrix over a product space"))?;
        if l.len() * r.len() != self.dim() {
            return Err(Error::arg(format!(
                "factor sizes {}×{} do not match dimension {}",
                l.len(),
                r.len(),
                self.dim()
            )));
        }
        Ok((l, r))
    }

    /// Writes a labeled CSV: a header of column labels, then one row per label.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![String::new()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (i, label) in self.labels.iter().enumerate() {
            let mut row = vec![label.clone()];
            row.extend((0..self.dim()).map(|j| format_complex(self.matrix[(i, j)])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV written by [`DensityMatrix::write_csv`]. Factor structure
    /// is not stored in the file.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let labels: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_string).collect();
        let n = labels.len();
        let mut data = Vec::with_capacity(n * n);
        let mut rows = 0;
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = Some(k + 2);
            if k >= n || rec.len() != n + 1 || rec[0] != labels[k] {
                return Err(Error::format(line, "density matrix row does not match header"));
            }
            for v in rec.iter().skip(1) {
                data.push(parse_complex(v).ok_or_else(|| Error::format(line, format!("bad entry {v:?}")))?);
            }
            rows += 1;
        }
        if rows != n {
            return Err(Error::format(None, format!("expected {n} rows, found {rows}")));
        }
        DensityMatrix::new(labels, DMatrix::from_row_slice(n, n, &data))
    }
}

fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

fn parse_complex(s: &str) -> Option<Complex64> {
    let s = s.trim();
    if let Ok(re) = s.parse::<f64>() {
        return Some(Complex64::new(re, 0.0));
    }
    let body = s.strip_suffix('i')?;
    // Split at the sign that starts the imaginary part (not an exponent sign).
    let bytes = body.as_bytes();
    let pos = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'))?;
    let re = body[..pos].parse().ok()?;
    let im = body[pos..].parse().ok()?;
    Some(Complex64::new(re, im))
}

/// `|ψ⟩⟨ψ|`.
pub fn density(psi: &PureState) -> DensityMatrix {
    let n = psi.amplitudes.len();
    let m = DMatrix::from_fn(n, n, |i, j| {
        Complex64::new(psi.amplitudes[i] * psi.amplitudes[j], 0.0)
    });
    DensityMatrix::bipartite(psi.rows.clone(), psi.cols.clone(), m)
        .expect("outer product dimension matches pair labels")
}

/// Traces out the right factor: `ρ_V[i][i′] = Σ_j ρ[(i,j)][(i′,j)]`.
pub fn partial_trace_right(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let (left, right) = rho.require_factors()?;
    let (n, m) = (left.len(), right.len());
    let out = DMatrix::from_fn(n, n, |i, k| {
        (0..m).map(|j| rho.matrix[(i * m + j, k * m + j)]).sum()
    });
    DensityMatrix::new(left.to_vec(), out)
}

/// Traces out the left factor: `ρ_W[j][j′] = Σ_i ρ[(i,j)][(i,j′)]`.
pub fn partial_trace_left(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let (left, right) = rho.require_factors()?;
    let (n, m) = (left.len(), right.len());
    let out = DMatrix::from_fn(m, m, |j, k| {
        (0..n).map(|i| rho.matrix[(i * m + j, i * m + k)]).sum()
    });
    DensityMatrix::new(right.to_vec(), out)
}

/// A nonzero off-diagonal entry of a reduced density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    pub first: String,
    pub second: String,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalReport {
    pub labels: Vec<String>,
    pub marginals: Vec<f64>,
    /// Upper-triangle entries with magnitude above 1e-12.
    pub correlations: Vec<Correlation>,
}

pub fn marginals_and_correlations(rho: &DensityMatrix) -> MarginalReport {
    let n = rho.dim();
    let marginals = (0..n).map(|i| rho.matrix[(i, i)].re).collect();
    let mut correlations = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let v = rho.matrix[(i, j)];
            if v.norm() > TOL {
                correlations.push(Correlation {
                    first: rho.labels[i].clone(),
                    second: rho.labels[j].clone(),
                    value: v,
                });
            }
        }
    }
    MarginalReport {
        labels: rho.labels.clone(),
        marginals,
        correlations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fruit() -> JointDistribution {
        JointDistribution::from_pairs([
            ("red", "apple", 1.0),
            ("green", "apple", 1.0),
            ("yellow", "banana", 1.0),
        ])
        .unwrap()
    }

    fn re(z: Complex64) -> f64 {
        assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-15);
        z.re
    }

    #[test]
    fn fruit_state_amplitudes() {
        let psi = flatten_normalize(&fruit()).unwrap();
        let a = 1.0 / 3f64.sqrt();
        assert_abs_diff_eq!(psi.amplitude("red", "apple").unwrap(), a, epsilon = 1e-15);
        assert_abs_diff_eq!(psi.amplitude("green", "apple").unwrap(), a, epsilon = 1e-15);
        assert_abs_diff_eq!(psi.amplitude("yellow", "banana").unwrap(), a, epsilon = 1e-15);
        assert_eq!(psi.amplitude("red", "banana").unwrap(), 0.0);
        assert_eq!(psi.amplitudes().len(), 6);
    }

    #[test]
    fn single_pair_and_uniform() {
        let psi = flatten_normalize(&JointDistribution::from_pairs([("a", "b", 2.5)]).unwrap()).unwrap();
        assert_eq!(psi.amplitudes(), &[1.0]);
        let u = JointDistribution::from_pairs([("a", "x", 1.0), ("a", "y", 1.0), ("b", "x", 1.0), ("b", "y", 1.0)]).unwrap();
        for a in flatten_normalize(&u).unwrap().amplitudes() {
            assert_abs_diff_eq!(*a, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn empty_and_negative_rejected() {
        assert!(JointDistribution::from_pairs([("a", "b", 0.0)]).is_err());
        assert!(JointDistribution::from_pairs([("a", "b", -1.0), ("a", "c", 2.0)]).is_err());
    }

    #[test]
    fn density_of_fruit_state() {
        let rho = density(&flatten_normalize(&fruit()).unwrap());
        assert_eq!(rho.dim(), 6);
        let support = ["red apple", "green apple", "yellow banana"];
        for r in rho.labels() {
            for c in rho.labels() {
                let expected = if support.contains(&r.as_str()) && support.contains(&c.as_str()) {
                    1.0 / 3.0
                } else {
                    0.0
                };
                assert_abs_diff_eq!(re(rho.entry(r, c).unwrap()), expected, epsilon = 1e-15);
            }
        }
        assert!(rho.is_valid(1e-12, 1e-10));
    }

    #[test]
    fn density_of_basis_and_plus_states() {
        let basis = JointDistribution::new(
            vec!["a".into(), "b".into()],
            vec!["x".into()],
            vec![vec![0.0], vec![1.0]],
        )
        .unwrap();
        let rho = density(&flatten_normalize(&basis).unwrap());
        assert_eq!(re(rho.get(1, 1)), 1.0);
        assert_eq!(re(rho.get(0, 0)) + re(rho.get(0, 1)) + re(rho.get(1, 0)), 0.0);

        let plus = JointDistribution::from_pairs([("a", "x", 1.0), ("b", "x", 1.0)]).unwrap();
        let rho = density(&flatten_normalize(&plus).unwrap());
        for v in rho.matrix().iter() {
            assert_abs_diff_eq!(re(*v), 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn trace_over_fruit_links_red_and_green() {
        let rho = density(&flatten_normalize(&fruit()).unwrap());
        let colors = partial_trace_right(&rho).unwrap();
        assert_eq!(colors.labels(), &["red", "green", "yellow"]);
        for c in ["red", "green", "yellow"] {
            assert_abs_diff_eq!(re(colors.entry(c, c).unwrap()), 1.0 / 3.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(re(colors.entry("red", "green").unwrap()), 1.0 / 3.0, epsilon = 1e-12);
        assert_eq!(colors.entry("red", "yellow").unwrap().norm(), 0.0);
        assert_eq!(colors.entry("green", "yellow").unwrap().norm(), 0.0);

        let report = marginals_and_correlations(&colors);
        assert_eq!(report.correlations.len(), 1);
        let c = &report.correlations[0];
        assert_eq!((c.first.as_str(), c.second.as_str()), ("red", "green"));
        assert_abs_diff_eq!(c.value.re, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn trace_over_colors() {
        let rho = density(&flatten_normalize(&fruit()).unwrap());
        let fruit = partial_trace_left(&rho).unwrap();
        assert_abs_diff_eq!(re(fruit.entry("apple", "apple").unwrap()), 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(re(fruit.entry("banana", "banana").unwrap()), 1.0 / 3.0, epsilon = 1e-12);
        assert_eq!(fruit.entry("apple", "banana").unwrap().norm(), 0.0);
    }

    #[test]
    fn maximally_entangled_pair_reduces_to_half_identity() {
        let d = JointDistribution::from_pairs([("a", "x", 1.0), ("b", "y", 1.0)]).unwrap();
        let rho = density(&flatten_normalize(&d).unwrap());
        for reduced in [partial_trace_right(&rho).unwrap(), partial_trace_left(&rho).unwrap()] {
            assert_abs_diff_eq!(re(reduced.get(0, 0)), 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(re(reduced.get(1, 1)), 0.5, epsilon = 1e-15);
            assert_eq!(reduced.get(0, 1).norm(), 0.0);
        }
    }

    #[test]
    fn uniform_joint_reduces_to_coherent_uniform() {
        let u = JointDistribution::from_pairs([("a", "x", 1.0), ("a", "y", 1.0), ("b", "x", 1.0), ("b", "y", 1.0)]).unwrap();
        let w = partial_trace_left(&density(&flatten_normalize(&u).unwrap())).unwrap();
        for v in w.matrix().iter() {
            assert_abs_diff_eq!(re(*v), 0.5, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(w.trace().re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_matrix_has_no_correlations() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(0.25, 0.0),
            Complex64::new(0.75, 0.0),
        ]));
        let dm = DensityMatrix::new(vec!["a".into(), "b".into()], m).unwrap();
        let r = marginals_and_correlations(&dm);
        assert!(r.correlations.is_empty());
        assert_eq!(r.marginals, vec![0.25, 0.75]);
    }

    #[test]
    fn partial_trace_needs_factors() {
        let dm = DensityMatrix::new(vec!["a".into()], DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0))).unwrap();
        assert!(partial_trace_right(&dm).is_err());
        assert!(partial_trace_left(&dm).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let rho = density(&flatten_normalize(&fruit()).unwrap());
        let colors = partial_trace_right(&rho).unwrap();
        let mut buf = Vec::new();
        colors.write_csv(&mut buf).unwrap();
        let back = DensityMatrix::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.labels(), colors.labels());
        for (a, b) in back.matrix().iter().zip(colors.matrix().iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn complex_entries_parse() {
        assert_eq!(parse_complex("0.5-0.25i"), Some(Complex64::new(0.5, -0.25)));
        assert_eq!(parse_complex("1e-3+2e-4i"), Some(Complex64::new(1e-3, 2e-4)));
        assert_eq!(parse_complex(&format_complex(Complex64::new(-1.5, 3.0))), Some(Complex64::new(-1.5, 3.0)));
        assert_eq!(parse_complex("junk"), None);
    }

    #[test]
    fn joint_csv_with_header() {
        let csv = "prefix,suffix,weight\nred,apple,1\ngreen,apple,1\nyellow,banana,1\n";
        let d = JointDistribution::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(d, fruit());
        assert!(JointDistribution::from_csv("red,apple\n".as_bytes()).is_err());
        assert!(JointDistribution::from_csv("a,b,1\nred,apple,x\n".as_bytes()).is_err());
    }
}
