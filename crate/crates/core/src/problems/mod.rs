//! Benchmark objectives and the low-effective-dimension generator
//! `f(x) = ḡ(U x)`, where `U` holds `d_e` orthonormal rows of a random rotation.

pub mod functions;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{gen_haar_frame, orthonormality_defect};
use crate::rng::RngState;

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Points used by the sampled Lipschitz estimate.
pub const LIPSCHITZ_SAMPLES: usize = 1000;

/// A low-dimensional test function on a coordinate box.
#[derive(Clone)]
pub struct BaseFunction {
    pub name: String,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub f_star: f64,
    pub minimizers: Vec<Vec<f64>>,
    eval: EvalFn,
}

impl fmt::Debug for BaseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BaseFunction")
            .field("name", &self.name)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("f_star", &self.f_star)
            .finish_non_exhaustive()
    }
}

impl BaseFunction {
    pub fn new(
        name: &str,
        lower: Vec<f64>,
        upper: Vec<f64>,
        f_star: f64,
        minimizers: Vec<Vec<f64>>,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        assert_eq!(lower.len(), upper.len(), "box bounds differ in length");
        Self {
            name: name.to_string(),
            lower,
            upper,
            f_star,
            minimizers,
            eval: Arc::new(eval),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        (self.eval)(x)
    }

    pub fn is_unit_box(&self) -> bool {
        self.lower.iter().all(|&l| l == -1.0) && self.upper.iter().all(|&u| u == 1.0)
    }

    /// Kebab-case identifier used in configs and record keys.
    pub fn slug(&self) -> String {
        slugify(&self.name)
    }
}

pub fn slugify(name: &str) -> String {
    name.to_lowercase().replace(' ', "-")
}

/// Affine change of variables taking `[−1, 1]^{d_e}` onto the function's box.
pub fn scale_to_unit_box(base: &BaseFunction) -> Result<BaseFunction> {
    for (i, (l, u)) in base.lower.iter().zip(&base.upper).enumerate() {
        if !(l.is_finite() && u.is_finite()) {
            return Err(Error::domain(format!("{}: coordinate {i} is unbounded", base.name)));
        }
        if !(u > l) {
            return Err(Error::domain(format!("{}: coordinate {i} has zero width", base.name)));
        }
    }
    if base.is_unit_box() {
        return Ok(base.clone());
    }
    let lower = base.lower.clone();
    let half: Vec<f64> = base.lower.iter().zip(&base.upper).map(|(l, u)| 0.5 * (u - l)).collect();
    let minimizers = base
        .minimizers
        .iter()
        .map(|m| {
            m.iter()
                .zip(&lower)
                .zip(&half)
                .map(|((x, l), h)| (x - l) / h - 1.0)
                .collect()
        })
        .collect();
    let inner = base.eval.clone();
    let eval = move |y: &[f64]| {
        let x: Vec<f64> = y
            .iter()
            .zip(&lower)
            .zip(&half)
            .map(|((yi, l), h)| l + (yi + 1.0) * h)
            .collect();
        inner(&x)
    };
    let dim = base.dim();
    Ok(BaseFunction {
        name: base.name.clone(),
        lower: vec![-1.0; dim],
        upper: vec![1.0; dim],
        f_star: base.f_star,
        minimizers,
        eval: Arc::new(eval),
    })
}

/// The eighteen benchmark functions on their native domains.
pub fn base_functions() -> Vec<BaseFunction> {
    functions::all()
}

/// Looks a base function up by display name or slug, case-insensitively.
pub fn base_function(name: &str) -> Result<BaseFunction> {
    let key = slugify(name);
    base_functions()
        .into_iter()
        .find(|b| b.slug() == key)
        .ok_or_else(|| Error::UnknownProblem(name.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeasibleSet {
    /// All of `ℝ^D`.
    Whole,
    /// The box `[−1, 1]^D`.
    UnitBox,
}

impl FeasibleSet {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            FeasibleSet::Whole => x.iter().all(|v| !v.is_nan()),
            FeasibleSet::UnitBox => x.iter().all(|v| (-1.0..=1.0).contains(v)),
        }
    }

    pub fn clamp(&self, x: &mut [f64]) -> bool {
        match self {
            FeasibleSet::Whole => false,
            FeasibleSet::UnitBox => {
                let mut changed = false;
                for v in x.iter_mut() {
                    let c = v.clamp(-1.0, 1.0);
                    changed |= c != *v;
                    *v = c;
                }
                changed
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ObjectiveMeta {
    pub f_star: Option<f64>,
    pub effective_dim: Option<usize>,
    /// `d_e × D`, orthonormal rows spanning the effective subspace.
    pub basis: Option<DMatrix<f64>>,
    /// A global minimizer lying in the effective subspace.
    pub minimizer: Option<DVector<f64>>,
    pub lipschitz: Option<f64>,
    pub rng: Option<RngState>,
}

/// A `D`-dimensional objective. Evaluation is pure and thread-safe.
#[derive(Clone)]
pub struct Objective {
    pub name: String,
    dim: usize,
    feasible: FeasibleSet,
    eval: EvalFn,
    pub meta: ObjectiveMeta,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("feasible", &self.feasible)
            .field("f_star", &self.meta.f_star)
            .field("effective_dim", &self.meta.effective_dim)
            .finish_non_exhaustive()
    }
}

impl Objective {
    pub fn new(
        name: &str,
        dim: usize,
        feasible: FeasibleSet,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.to_string(),
            dim,
            feasible,
            eval: Arc::new(eval),
            meta: ObjectiveMeta::default(),
        }
    }

    pub fn with_f_star(mut self, f_star: f64) -> Self {
        self.meta.f_star = Some(f_star);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn feasible(&self) -> FeasibleSet {
        self.feasible
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        (self.eval)(x)
    }

    /// `h − Uᵀ U h`: the component of `h` along which the objective is constant.
    pub fn constant_component(&self, h: &DVector<f64>) -> Option<DVector<f64>> {
        let u = self.meta.basis.as_ref()?;
        Some(h - u.transpose() * (u * h))
    }

    pub fn manifest(&self) -> ProblemManifest {
        ProblemManifest {
            name: self.name.clone(),
            id: slugify(&self.name),
            dim: self.dim,
            effective_dim: self.meta.effective_dim,
            f_star: self.meta.f_star,
            lipschitz: self.meta.lipschitz,
            seed: self.meta.rng,
        }
    }
}

/// Structured description of a generated problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemManifest {
    pub name: String,
    pub id: String,
    pub dim: usize,
    pub effective_dim: Option<usize>,
    pub f_star: Option<f64>,
    pub lipschitz: Option<f64>,
    pub seed: Option<RngState>,
}

/// Max central-difference gradient norm of `f` over `samples` uniform points
/// of `[−1, 1]^dim`.
pub fn estimate_lipschitz(f: &dyn Fn(&[f64]) -> f64, dim: usize, samples: usize, rng: &RngState) -> f64 {
    const H: f64 = 1e-6;
    let mut gen = rng.generator();
    let mut best: f64 = 0.0;
    let mut x = vec![0.0; dim];
    for _ in 0..samples {
        for v in x.iter_mut() {
            *v = gen.random_range(-1.0..=1.0);
        }
        let mut norm2 = 0.0;
        for i in 0..dim {
            let xi = x[i];
            x[i] = xi + H;
            let up = f(&x);
            x[i] = xi - H;
            let down = f(&x);
            x[i] = xi;
            norm2 += ((up - down) / (2.0 * H)).powi(2);
        }
        if norm2.is_finite() {
            best = best.max(norm2.sqrt());
        }
    }
    best
}

/// `f(x) = ḡ(U x)` on `ℝ^D` with `U` drawn from `rng`.
pub fn make_low_effdim(base: &BaseFunction, dim: usize, rng: &RngState) -> Result<Objective> {
    let de = base.dim();
    if dim < de {
        return Err(Error::dim(format!(
            "{} has effective dimension {de}, cannot embed in D = {dim}",
            base.name
        )));
    }
    let basis = gen_haar_frame(&rng.labeled("rotation"), dim, de)?.transpose();
    let mut obj = build_low_effdim(base, basis, rng)?;
    obj.meta.rng = Some(*rng);
    Ok(obj)
}

/// As [`make_low_effdim`] but with a caller-supplied `d_e × D` basis with
/// orthonormal rows.
pub fn make_low_effdim_with_basis(base: &BaseFunction, basis: DMatrix<f64>) -> Result<Objective> {
    if basis.nrows() != base.dim() {
        return Err(Error::dim(format!(
            "basis has {} rows, {} has d_e = {}",
            basis.nrows(),
            base.name,
            base.dim()
        )));
    }
    if orthonormality_defect(&basis.transpose()) > 1e-10 {
        return Err(Error::Precondition("basis rows are not orthonormal".into()));
    }
    build_low_effdim(base, basis, &RngState::from_seed(0))
}

fn build_low_effdim(base: &BaseFunction, basis: DMatrix<f64>, rng: &RngState) -> Result<Objective> {
    if !base.is_unit_box() {
        return Err(Error::Precondition(format!(
            "{} must be scaled to the unit box first",
            base.name
        )));
    }
    let de = base.dim();
    if de > 16 {
        return Err(Error::dim("effective dimension above 16 is not supported"));
    }
    let dim = basis.ncols();
    let inner = base.eval.clone();
    let lipschitz = estimate_lipschitz(&*inner, de, LIPSCHITZ_SAMPLES, &rng.labeled("lipschitz"));
    let minimizer = base
        .minimizers
        .first()
        .map(|m| basis.transpose() * DVector::from_column_slice(m));
    let u = basis.clone();
    let eval = move |x: &[f64]| {
        let mut z = [0.0; 16];
        let z = &mut z[..de];
        for (j, xj) in x.iter().enumerate() {
            if *xj != 0.0 {
                for (i, zi) in z.iter_mut().enumerate() {
                    *zi += u[(i, j)] * xj;
                }
            }
        }
        inner(z)
    };
    Ok(Objective {
        name: base.name.clone(),
        dim,
        feasible: FeasibleSet::Whole,
        eval: Arc::new(eval),
        meta: ObjectiveMeta {
            f_star: Some(base.f_star),
            effective_dim: Some(de),
            basis: Some(basis),
            minimizer,
            lipschitz: Some(lipschitz),
            rng: None,
        },
    })
}

/// One objective per benchmark function, each rotated with its own labeled
/// substream of `rng`. Functions with `d_e > D` are skipped with a warning.
pub fn suite(dim: usize, rng: &RngState) -> Result<Vec<Objective>> {
    let mut out = Vec::new();
    for base in base_functions() {
        if base.dim() > dim {
            log::warn!("skipping {}: d_e = {} exceeds D = {dim}", base.name, base.dim());
            continue;
        }
        out.push(problem(&base.name, dim, rng)?);
    }
    Ok(out)
}

/// A single suite member by name; identical to the corresponding entry of
/// [`suite`] for the same `(dim, rng)`.
pub fn problem(name: &str, dim: usize, rng: &RngState) -> Result<Objective> {
    let base = base_function(name)?;
    let scaled = scale_to_unit_box(&base)?;
    make_low_effdim(&scaled, dim, &rng.labeled(&base.slug()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_minimizers_reach_table_values() {
        let table = [
            ("Beale", 0.0, 1e-12),
            ("Branin", 0.397887, 1e-6),
            ("Brent", 0.0, 1e-12),
            ("Easom", -1.0, 1e-12),
            ("Goldstein-Price", 3.0, 1e-10),
            ("Hartmann 3", -3.86278, 1e-5),
            ("Hartmann 6", -3.32237, 1e-5),
            ("Levy", 0.0, 1e-12),
            ("Perm 4 0.5", 0.0, 1e-12),
            ("Rosenbrock", 0.0, 1e-12),
            ("Shekel 5", -10.1532, 1e-4),
            ("Shekel 7", -10.4029, 1e-4),
            ("Shekel 10", -10.5364, 1e-4),
            ("Shubert", -186.7309, 1e-4),
            ("Six-hump camel", -1.0316, 1e-4),
            ("Styblinski-Tang", -313.329, 1e-3),
            ("Trid", -30.0, 1e-9),
            ("Zettl", -0.00379, 1e-5),
        ];
        let bases = base_functions();
        assert_eq!(bases.len(), table.len());
        for ((name, f_table, tol), base) in table.iter().zip(&bases) {
            assert_eq!(*name, base.name);
            assert!((base.f_star - f_table).abs() <= *tol, "{name}: stored f* {}", base.f_star);
            let scaled = scale_to_unit_box(base).unwrap();
            for m in &scaled.minimizers {
                assert!(m.iter().all(|v| (-1.0 - 1e-12..=1.0 + 1e-12).contains(v)), "{name} minimizer outside box");
                let got = scaled.evaluate(m);
                assert!((got - base.f_star).abs() <= 1e-6, "{name}: {got} vs {}", base.f_star);
            }
        }
    }

    #[test]
    fn effective_dims_average() {
        let dims: Vec<usize> = base_functions().iter().map(|b| b.dim()).collect();
        let mean = dims.iter().sum::<usize>() as f64 / dims.len() as f64;
        assert!((mean - 3.7).abs() <= 0.05, "mean d_e = {mean}");
        assert_eq!(dims.iter().sum::<usize>(), 67);
    }

    #[test]
    fn unit_box_scaling_is_identity() {
        let base = BaseFunction::new("Sq", vec![-1.0; 2], vec![1.0; 2], 0.0, vec![vec![0.0, 0.0]], |x: &[f64]| {
            x[0] * x[0] + 3.0 * x[1]
        });
        let scaled = scale_to_unit_box(&base).unwrap();
        for p in [[0.3, -0.7], [1.0, 1.0], [-0.25, 0.5]] {
            assert_eq!(scaled.evaluate(&p), base.evaluate(&p));
        }
    }

    #[test]
    fn degenerate_box_rejected() {
        let base = BaseFunction::new("Flat", vec![0.0, 1.0], vec![1.0, 1.0], 0.0, vec![], |_: &[f64]| 0.0);
        assert!(matches!(scale_to_unit_box(&base), Err(Error::Domain(_))));
    }

    #[test]
    fn identity_rotation_reproduces_scaled_base() {
        let scaled = scale_to_unit_box(&base_function("branin").unwrap()).unwrap();
        let obj = make_low_effdim_with_basis(&scaled, DMatrix::identity(2, 2)).unwrap();
        let mut gen = RngState::from_seed(3).generator();
        for _ in 0..50 {
            let y = [gen.random_range(-1.0..1.0), gen.random_range(-1.0..1.0)];
            assert_eq!(obj.evaluate(&y), scaled.evaluate(&y));
        }
    }

    #[test]
    fn embedded_points_and_constant_directions() {
        let rng = RngState::new(11, 0);
        for obj in suite(20, &rng).unwrap() {
            let u = obj.meta.basis.clone().unwrap();
            let de = u.nrows();
            let scaled = scale_to_unit_box(&base_function(&obj.name).unwrap()).unwrap();
            let mut gen = rng.labeled(&obj.name).generator();
            for _ in 0..20 {
                let xbar = DVector::from_fn(de, |_, _| gen.random_range(-1.0..1.0));
                let x = u.transpose() * &xbar;
                let want = scaled.evaluate(xbar.as_slice());
                let got = obj.evaluate(x.as_slice());
                assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{}: {got} vs {want}", obj.name);

                let h = DVector::from_fn(20, |_, _| gen.random_range(-1.0..1.0));
                let w = obj.constant_component(&h).unwrap();
                let shifted = obj.evaluate((&x + &w).as_slice());
                assert!((shifted - got).abs() <= 1e-9 * got.abs().max(1.0), "{}: not constant along w", obj.name);
            }
        }
    }

    #[test]
    fn suite_members_and_metadata() {
        let rng = RngState::from_seed(5);
        let s = suite(100, &rng).unwrap();
        assert_eq!(s.len(), 18);
        let shekel = s.iter().find(|o| o.name == "Shekel 10").unwrap();
        assert!((shekel.meta.f_star.unwrap() + 10.5364).abs() < 1e-4);
        for o in &s {
            let x = o.meta.minimizer.as_ref().unwrap();
            let f = o.evaluate(x.as_slice());
            assert!((f - o.meta.f_star.unwrap()).abs() <= 1e-5, "{}: f(x*) = {f}", o.name);
            assert!(o.meta.lipschitz.unwrap() > 0.0);
        }
        let again = problem("Shekel 10", 100, &rng).unwrap();
        let x = DVector::from_fn(100, |i, _| (i as f64 * 0.37).sin());
        assert_eq!(again.evaluate(x.as_slice()), shekel.evaluate(x.as_slice()));
        assert_eq!(suite(6, &rng).unwrap().len(), 16);
        assert!(matches!(problem("nope", 10, &rng), Err(Error::UnknownProblem(_))));
        assert!(make_low_effdim(&scale_to_unit_box(&base_function("trid").unwrap()).unwrap(), 4, &rng).is_err());
    }
}
