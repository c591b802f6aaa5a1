//! Simulation of Y = Σ^{1/2} X D for the elliptical and separable models and
//! extraction of the spectrum of Q = Y Yᵀ.

use std::io::{Read, Write};

use num_complex::Complex;
use rand::Rng as _;
use rand_distr::{ChiSquared, Distribution, StandardNormal, StudentT};

use crate::error::{invalid, Error, Result};
use crate::linalg::{symmetric_eigenvalues, top_eigenvalues, GramOp, LanczosOptions, Mat, TriangularGramOp};
use crate::population::PopulationSpec;
use crate::scalar::{count, lit, wide, Real};
use crate::seed::{self, Rng};
use crate::weight_laws::WeightLaw;

/// Distribution of the standardized entries √n·x_ij in the separable model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EntryDist {
    Gaussian,
    /// Violates the fourth-moment condition m4 > 1 of the bootstrap theory.
    Rademacher,
    /// Student t with `nu >= 9`, rescaled to unit variance.
    StudentT {
        nu: f64,
    },
}

impl EntryDist {
    /// Fourth moment E(√n x)⁴.
    pub fn m4(&self) -> f64 {
        match *self {
            EntryDist::Gaussian => 3.0,
            EntryDist::Rademacher => 1.0,
            EntryDist::StudentT { nu } => 3.0 * (nu - 2.0) / (nu - 4.0),
        }
    }

    /// True when m4 > 1 fails.
    pub fn degenerate_fourth_moment(&self) -> bool {
        self.m4() <= 1.0
    }
}

/// Which of the two model classes generates the data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelKind {
    /// Columns uniform on the unit sphere.
    Elliptical,
    /// i.i.d. entries with mean 0 and variance 1/n.
    SeparableIid { entry: EntryDist },
}

/// Model class without the entry distribution, as used by the solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelClass {
    Elliptical,
    Separable,
}

impl ModelKind {
    pub fn class(&self) -> ModelClass {
        match self {
            ModelKind::Elliptical => ModelClass::Elliptical,
            ModelKind::SeparableIid { .. } => ModelClass::Separable,
        }
    }

    pub fn separable_gaussian() -> Self {
        ModelKind::SeparableIid { entry: EntryDist::Gaussian }
    }

    fn validate(&self) -> Result<()> {
        if let ModelKind::SeparableIid { entry: EntryDist::StudentT { nu } } = self {
            if !(*nu >= 9.0) {
                return invalid(format!("Student-t entries need nu >= 9, got {nu}"));
            }
        }
        Ok(())
    }
}

/// A simulated data matrix with the ingredients that produced it.
#[derive(Clone, Debug)]
pub struct DataSample<T = f64> {
    /// p × n, columns are observations.
    pub y: Mat<T>,
    /// Realized ξ² (all ones when no weights were applied).
    pub weights: Vec<T>,
    pub kind: ModelKind,
    pub sigmas: Vec<T>,
    pub law: Option<WeightLaw<T>>,
}

impl<T: Real> DataSample<T> {
    pub fn p(&self) -> usize {
        self.y.rows()
    }
    pub fn n(&self) -> usize {
        self.y.cols()
    }
}

/// Descending nonnegative eigenvalues of Q with the dimensions they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T = f64> {
    pub values: Vec<T>,
    pub p: usize,
    pub n: usize,
}

/// Which matrix a Stieltjes transform refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Q = Y Yᵀ (p × p).
    Q,
    /// 𝒬 = Yᵀ Y (n × n).
    Gram,
}

fn fill_entries(kind: &ModelKind, rng: &mut Rng, out: &mut [f64]) {
    match kind {
        ModelKind::Elliptical | ModelKind::SeparableIid { entry: EntryDist::Gaussian } => {
            out.iter_mut().for_each(|v| *v = StandardNormal.sample(rng));
        }
        ModelKind::SeparableIid { entry: EntryDist::Rademacher } => {
            out.iter_mut().for_each(|v| *v = if rng.random::<bool>() { 1.0 } else { -1.0 });
        }
        ModelKind::SeparableIid { entry: EntryDist::StudentT { nu } } => {
            let d = StudentT::new(*nu).expect("valid");
            let s = ((nu - 2.0) / nu).sqrt();
            out.iter_mut().for_each(|v| *v = s * d.sample(rng));
        }
    }
}

/// Simulates one data matrix. Weights are drawn first, then the columns in
/// order, from a single generator seeded by `seed`.
pub fn sample_data<T: Real>(
    kind: ModelKind,
    pop: &PopulationSpec<T>,
    law: &WeightLaw<T>,
    n: usize,
    seed: u64,
) -> Result<DataSample<T>> {
    kind.validate()?;
    if n == 0 {
        return invalid("n must be at least 1");
    }
    let p = pop.p();
    let mut rng = seed::rng(seed, &[]);
    let mut weights = vec![T::zero(); n];
    law.fill(&mut rng, &mut weights);
    let root_sigma: Vec<f64> = pop.sigmas().iter().map(|&s| wide(s).sqrt()).collect();
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let mut y = Mat::zeros(p, n);
    let mut buf = vec![0.0f64; p];
    for (k, &wk) in weights.iter().enumerate() {
        fill_entries(&kind, &mut rng, &mut buf);
        let xi = wide(wk).sqrt();
        let norm = match kind {
            ModelKind::Elliptical => buf.iter().map(|v| v * v).sum::<f64>().sqrt(),
            ModelKind::SeparableIid { .. } => 1.0 / inv_sqrt_n,
        };
        let f = xi / norm;
        for (dst, (&g, &rs)) in y.col_mut(k).iter_mut().zip(buf.iter().zip(&root_sigma)) {
            *dst = lit(rs * g * f);
        }
    }
    Ok(DataSample { y, weights, kind, sigmas: pop.sigmas().to_vec(), law: Some(*law) })
}

fn clip_and_sort<T: Real>(mut v: Vec<T>) -> Vec<T> {
    v.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    let top = v.first().copied().unwrap_or(T::zero()).max(T::zero());
    let floor = top * lit(1e-12);
    v.iter_mut().for_each(|x| {
        if *x < floor {
            *x = T::zero()
        }
    });
    v
}

/// Full spectrum of Y Yᵀ for an arbitrary p × n matrix, via the smaller Gram matrix.
pub fn spectrum_of<T: Real>(y: &Mat<T>) -> Result<Spectrum<T>> {
    let (p, n) = (y.rows(), y.cols());
    let g = if n <= p { y.gram_cols() } else { y.gram_rows() };
    let vals = symmetric_eigenvalues(&g).map_err(|e| match e {
        Error::NoConvergence { iterations, residual } => Error::NoConvergence { iterations, residual },
        other => other,
    })?;
    Ok(Spectrum { values: clip_and_sort(vals), p, n })
}

/// Full spectrum of Q for a data sample.
pub fn eigenvalues<T: Real>(data: &DataSample<T>) -> Result<Spectrum<T>> {
    spectrum_of(&data.y)
}

/// The `k` largest eigenvalues of Q by Lanczos on the smaller side.
pub fn top_eigenvalues_of<T: Real>(y: &Mat<T>, k: usize, opts: LanczosOptions) -> Result<Vec<T>> {
    let op = GramOp::new(y, None);
    top_eigenvalues(&op, k, opts).map(clip_and_sort)
}

/// Leading eigenvalues of a fresh draw together with its weights.
#[derive(Clone, Debug)]
pub struct TopSample<T> {
    pub eigenvalues: Vec<T>,
    pub weights: Vec<T>,
}

/// Draws a sample and returns its `k` largest eigenvalues.
///
/// For Gaussian-type data with Σ = cI and p ≥ n the p × n matrix is never
/// formed: XᵀX is drawn through the Bartlett factor of a Wishart matrix,
/// which has the same law and costs O(n²) per draw.
pub fn sample_top_eigenvalues<T: Real>(
    kind: ModelKind,
    pop: &PopulationSpec<T>,
    law: &WeightLaw<T>,
    n: usize,
    k: usize,
    seed: u64,
    opts: LanczosOptions,
) -> Result<TopSample<T>> {
    kind.validate()?;
    let p = pop.p();
    let c = pop.sigmas()[0];
    let flat = pop.sigmas().iter().all(|&s| s == c);
    let gaussian = matches!(kind, ModelKind::Elliptical | ModelKind::SeparableIid { entry: EntryDist::Gaussian });
    if !(flat && gaussian && p >= n) {
        let data = sample_data(kind, pop, law, n, seed)?;
        let eigs = top_eigenvalues_of(&data.y, k, opts)?;
        return Ok(TopSample { eigenvalues: eigs, weights: data.weights });
    }
    let mut rng = seed::rng(seed, &[]);
    let mut weights = vec![T::zero(); n];
    law.fill(&mut rng, &mut weights);
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let col = l.col_mut(j);
        let chi: f64 = ChiSquared::new((p - j) as f64).expect("positive dof").sample(&mut rng);
        col[j] = lit(chi.sqrt());
        for v in col[j + 1..].iter_mut() {
            let g: f64 = StandardNormal.sample(&mut rng);
            *v = lit(g);
        }
    }
    let d: Vec<T> = match kind {
        ModelKind::Elliptical => (0..n)
            .map(|i| {
                // |g_i|² = (L Lᵀ)_ii is the squared norm of row i of L
                let r2: T = (0..=i).map(|j| l.get(i, j) * l.get(i, j)).sum();
                (c * weights[i] / r2).sqrt()
            })
            .collect(),
        ModelKind::SeparableIid { .. } => weights.iter().map(|&w| (c * w / count::<T>(n)).sqrt()).collect(),
    };
    let op = TriangularGramOp::new(l, d);
    let eigs = top_eigenvalues(&op, k, opts).map(clip_and_sort)?;
    Ok(TopSample { eigenvalues: eigs, weights })
}

/// Empirical Stieltjes transform of Q (side `Q`, normalized by p) or of 𝒬
/// (side `Gram`, normalized by n), counting the implicit zero eigenvalues.
pub fn empirical_stieltjes<T: Real>(spec: &Spectrum<T>, z: Complex<T>, side: Side) -> Result<Complex<T>> {
    if !(z.im > T::zero()) {
        return Err(Error::InvalidParameter(format!("Im z must be positive, got {}", z.im)));
    }
    let dim = match side {
        Side::Q => spec.p,
        Side::Gram => spec.n,
    };
    let one = Complex::new(T::one(), T::zero());
    let mut s: Complex<T> = spec.values.iter().map(|&l| one / (Complex::new(l, T::zero()) - z)).sum();
    let zeros = dim.saturating_sub(spec.values.len());
    s = s + (one / (-z)) * count::<T>(zeros);
    Ok(s / count::<T>(dim))
}

/// Writes spectra as CSV rows `replicate_id,rank,eigenvalue` (rank is 1-based).
pub fn write_spectra_csv<T: Real, W: Write>(out: W, spectra: &[(u64, &Spectrum<T>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["replicate_id", "rank", "eigenvalue"]).map_err(|e| Error::Io(e.to_string()))?;
    for (id, s) in spectra {
        for (r, v) in s.values.iter().enumerate() {
            w.write_record([id.to_string(), (r + 1).to_string(), format!("{:?}", wide(*v))])
                .map_err(|e| Error::Io(e.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads eigenvalues from CSV: either the `replicate_id,rank,eigenvalue`
/// layout (first replicate only) or a single column of numbers.
pub fn read_spectrum_csv<R: Read>(input: R) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut vals = Vec::new();
    let mut first_id: Option<String> = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Io(e.to_string()))?;
        let last = rec.iter().next_back().unwrap_or("").trim();
        let Ok(v) = last.parse::<f64>() else { continue };
        if rec.len() >= 3 {
            let id = rec[0].trim().to_string();
            match &first_id {
                None => first_id = Some(id),
                Some(f) if *f != id => break,
                _ => {}
            }
        }
        vals.push(v);
    }
    if vals.is_empty() {
        return invalid("no eigenvalues found in input");
    }
    vals.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    Ok(vals)
}

/// Reads a dense numeric matrix (rows = variables, columns = samples).
/// Lines that do not parse as numbers, such as a header, are skipped.
pub fn read_matrix_csv<R: Read>(input: R) -> Result<Mat<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Io(e.to_string()))?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(|s| s.trim().parse::<f64>()).collect();
        match parsed {
            Ok(v) if !v.is_empty() => rows.push(v),
            _ if rows.is_empty() => continue,
            _ => return invalid(format!("non-numeric row {} in matrix input", rows.len() + 1)),
        }
    }
    let Some(cols) = rows.first().map(Vec::len) else {
        return invalid("no numeric rows found in matrix input");
    };
    if rows.iter().any(|r| r.len() != cols) {
        return invalid("matrix rows have different lengths");
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return invalid("matrix entries must be finite");
    }
    Ok(Mat::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn write_matrix_csv<T: Real, W: Write>(out: W, m: &Mat<T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for i in 0..m.rows() {
        w.write_record((0..m.cols()).map(|j| format!("{:?}", wide(m.get(i, j)))))
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_csv_round_trip() {
        let m = Mat::from_fn(3, 4, |i, j| i as f64 * 0.5 - j as f64 / 3.0);
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &m).unwrap();
        assert_eq!(read_matrix_csv(buf.as_slice()).unwrap(), m);
        let with_header = format!("a,b,c,d\n{}", String::from_utf8(buf).unwrap());
        assert_eq!(read_matrix_csv(with_header.as_bytes()).unwrap(), m);
        assert!(read_matrix_csv("1,2\n3\n".as_bytes()).is_err());
    }

    fn id(p: usize) -> PopulationSpec<f64> {
        PopulationSpec::identity(p).unwrap()
    }

    #[test]
    fn elliptical_columns_unit_norm_under_point_mass() {
        let law = WeightLaw::point_mass(1.0).unwrap();
        let d = sample_data(ModelKind::Elliptical, &id(3), &law, 4, 1).unwrap();
        for k in 0..4 {
            let nrm: f64 = d.y.col(k).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((nrm - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn separable_entry_variance() {
        let law = WeightLaw::point_mass(1.0).unwrap();
        let d = sample_data(ModelKind::separable_gaussian(), &id(200), &law, 400, 2).unwrap();
        let v: f64 = d.y.as_slice().iter().map(|x| x * x).sum::<f64>() / (200.0 * 400.0);
        assert!((v * 400.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn elliptical_norms_track_weights() {
        let pop = crate::population::johnstone_spiked(30, &[25.0, 20.0]).unwrap().spectrum();
        let law = WeightLaw::exponential(1.0).unwrap();
        let d = sample_data(ModelKind::Elliptical, &pop, &law, 12, 5).unwrap();
        for k in 0..12 {
            // Σ^{-1/2} y_k has norm ξ_k
            let nrm: f64 = d.y.col(k).iter().zip(pop.sigmas()).map(|(v, s)| v * v / s).sum::<f64>().sqrt();
            assert!((nrm - d.weights[k].sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn spectra_of_fixed_matrices() {
        let s = spectrum_of(&Mat::<f64>::identity(3)).unwrap();
        assert_eq!(s.values, vec![1.0, 1.0, 1.0]);
        let y = Mat::from_fn(3, 3, |i, j| if i == 0 && j == 0 { 2.0 } else { 0.0 });
        assert_eq!(spectrum_of(&y).unwrap().values, vec![4.0, 0.0, 0.0]);
    }

    #[test]
    fn stieltjes_closed_form() {
        let s = Spectrum { values: vec![1.0, 1.0, 1.0], p: 3, n: 3 };
        let m = empirical_stieltjes(&s, Complex::new(0.0, 1.0), Side::Q).unwrap();
        assert!((m - Complex::new(0.5, 0.5)).norm() < 1e-15);
        assert!(empirical_stieltjes(&s, Complex::new(1.0, 0.0), Side::Q).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let s = Spectrum { values: vec![3.5, 1.25, 0.1], p: 3, n: 5 };
        let mut buf = Vec::new();
        write_spectra_csv(&mut buf, &[(0, &s), (1, &s)]).unwrap();
        let back = read_spectrum_csv(&buf[..]).unwrap();
        assert_eq!(back, s.values);
    }
}
