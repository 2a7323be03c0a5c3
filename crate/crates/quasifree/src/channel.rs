//! Bosonic linear/Gaussian channel specifications: validity, the noise-free
//! subspace Z_f, degeneracy classification, Gaussian state push-through, and
//! the weak-complementary dimension duality check.
//!
//! A channel from `modes_in` to `modes_out` modes acts on Weyl operators by
//! `W(z) -> W(Kz) f(z)` for z in the output phase space; for Gaussian noise
//! `f(z) = exp(i l^T z - z^T alpha z / 2)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonio;
use crate::linalg;
use crate::symplectic::{
    self, FormPreservationReport, Subspace, SymplecticSpace, verify_form_preservation,
};

/// Symmetry tolerance for `alpha` and covariance matrices.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Eigenvalue floor for the validity and state conditions.
pub const VALIDITY_TOL: f64 = 1e-9;

/// Gaussian channel data: `W(z) -> W(Kz) exp(i l^T z - z^T alpha z / 2)`.
/// `K` maps the output phase space into the input phase space
/// (2·modes_in rows, 2·modes_out columns).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct GaussianChannelSpec {
    modes_in: usize,
    modes_out: usize,
    k: DMatrix<f64>,
    l: DVector<f64>,
    alpha: DMatrix<f64>,
}

/// On-disk shape of a channel spec: matrices as row-major nested arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    modes_in: usize,
    modes_out: usize,
    #[serde(rename = "K", with = "jsonio::mat")]
    k: DMatrix<f64>,
    #[serde(with = "jsonio::vec")]
    l: DVector<f64>,
    #[serde(with = "jsonio::mat")]
    alpha: DMatrix<f64>,
}

impl TryFrom<RawSpec> for GaussianChannelSpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        GaussianChannelSpec::new(raw.modes_in, raw.modes_out, raw.k, raw.l, raw.alpha)
    }
}

impl From<GaussianChannelSpec> for RawSpec {
    fn from(spec: GaussianChannelSpec) -> Self {
        RawSpec {
            modes_in: spec.modes_in,
            modes_out: spec.modes_out,
            k: spec.k,
            l: spec.l,
            alpha: spec.alpha,
        }
    }
}

impl GaussianChannelSpec {
    pub fn new(
        modes_in: usize,
        modes_out: usize,
        k: DMatrix<f64>,
        l: DVector<f64>,
        alpha: DMatrix<f64>,
    ) -> Result<Self> {
        if modes_in == 0 || modes_out == 0 {
            return Err(Error::InvalidArgument(
                "modes_in and modes_out must be positive".into(),
            ));
        }
        let (na, nb) = (2 * modes_in, 2 * modes_out);
        if k.nrows() != na || k.ncols() != nb {
            return Err(Error::InvalidArgument(format!(
                "K is {}x{}, expected {na}x{nb}",
                k.nrows(),
                k.ncols()
            )));
        }
        if l.len() != nb {
            return Err(Error::InvalidArgument(format!(
                "l has length {}, expected {nb}",
                l.len()
            )));
        }
        if alpha.nrows() != nb || alpha.ncols() != nb {
            return Err(Error::InvalidArgument(format!(
                "alpha is {}x{}, expected {nb}x{nb}",
                alpha.nrows(),
                alpha.ncols()
            )));
        }
        let asym = linalg::max_abs(&(&alpha - alpha.transpose()));
        if asym > SYMMETRY_TOL {
            return Err(Error::InvalidArgument(format!(
                "alpha is not symmetric: max |alpha - alpha^T| = {asym:.3e}"
            )));
        }
        Ok(GaussianChannelSpec {
            modes_in,
            modes_out,
            k,
            l,
            alpha,
        })
    }

    pub fn modes_in(&self) -> usize {
        self.modes_in
    }

    pub fn modes_out(&self) -> usize {
        self.modes_out
    }

    pub fn k(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn l(&self) -> &DVector<f64> {
        &self.l
    }

    pub fn alpha(&self) -> &DMatrix<f64> {
        &self.alpha
    }

    pub fn input_space(&self) -> SymplecticSpace {
        SymplecticSpace::standard(self.modes_in)
    }

    pub fn output_space(&self) -> SymplecticSpace {
        SymplecticSpace::standard(self.modes_out)
    }

    /// `lambda = Delta_B - K^T Delta_A K`; the validity condition bounds
    /// `alpha` from below by `+/- (i/2) lambda`.
    pub fn lambda(&self) -> DMatrix<f64> {
        self.output_space().form()
            - self.k.transpose() * self.input_space().form() * &self.k
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("channel spec: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialization cannot fail")
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Identity channel on `modes` modes: K = I, l = 0, alpha = 0.
    pub fn identity(modes: usize) -> Self {
        let n = 2 * modes;
        GaussianChannelSpec::new(
            modes,
            modes,
            DMatrix::identity(n, n),
            DVector::zeros(n),
            DMatrix::zeros(n, n),
        )
        .expect("identity spec is well formed")
    }

    /// Completely depolarizing channel: K = 0, every input goes to the
    /// Gaussian state with covariance `alpha` (which must be a valid state
    /// covariance for the output modes).
    pub fn constant(modes_in: usize, modes_out: usize, alpha: DMatrix<f64>) -> Result<Self> {
        GaussianChannelSpec::new(
            modes_in,
            modes_out,
            DMatrix::zeros(2 * modes_in, 2 * modes_out),
            DVector::zeros(2 * modes_out),
            alpha,
        )
    }
}

/// Single-mode position-dephasing channel: K = I, l = 0, alpha = diag(0, c).
/// Position observables pass through noise-free, momentum gains variance c.
pub fn family_a_spec(c: f64) -> Result<GaussianChannelSpec> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dephasing strength must be positive, got {c}"
        )));
    }
    GaussianChannelSpec::new(
        1,
        1,
        DMatrix::identity(2, 2),
        DVector::zeros(2),
        DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, c])),
    )
}

/// Single-mode measure-and-prepare channel: measure position (scaled by `u`),
/// prepare a minimum-uncertainty wavepacket of width `prep_width` there.
/// K = [[u,0],[0,0]] (rank one), alpha = diag(w^2, 1/(4 w^2)).
pub fn family_b_spec(u: f64, prep_width: f64) -> Result<GaussianChannelSpec> {
    if u == 0.0 {
        return Err(Error::InvalidArgument("coupling u must be nonzero".into()));
    }
    if !(prep_width > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "preparation width must be positive, got {prep_width}"
        )));
    }
    let w2 = prep_width * prep_width;
    let mut k = DMatrix::zeros(2, 2);
    k[(0, 0)] = u;
    GaussianChannelSpec::new(
        1,
        1,
        k,
        DVector::zeros(2),
        DMatrix::from_diagonal(&DVector::from_vec(vec![w2, 1.0 / (4.0 * w2)])),
    )
}

/// Result of the validity check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidityReport {
    pub valid: bool,
    pub min_eigenvalue: f64,
}

/// Minimum eigenvalue of `alpha + (i/2)(Delta_B - K^T Delta_A K)`; the spec
/// is a channel iff this is >= -VALIDITY_TOL. The "-" branch of the
/// inequality follows by complex conjugation since alpha is real.
pub fn validate_gaussian(spec: &GaussianChannelSpec) -> ValidityReport {
    let lambda = spec.lambda();
    let min_eigenvalue = linalg::hermitian_min_eig(spec.alpha(), &(lambda * 0.5));
    ValidityReport {
        valid: min_eigenvalue >= -VALIDITY_TOL,
        min_eigenvalue,
    }
}

fn require_valid(spec: &GaussianChannelSpec) -> Result<()> {
    let v = validate_gaussian(spec);
    if !v.valid {
        return Err(Error::InvalidChannel(format!(
            "validity condition fails: min eigenvalue {:.6e}",
            v.min_eigenvalue
        )));
    }
    Ok(())
}

/// Noise-free subspace for Gaussian noise: ker(alpha) by singular-value
/// thresholding. Whether `l` vanishes on it is reported by `classify`,
/// not folded into the kernel.
pub fn compute_zf(spec: &GaussianChannelSpec) -> Subspace {
    Subspace::from_orthonormal(linalg::kernel_basis(spec.alpha(), linalg::RANK_TOL))
        .expect("kernel basis is orthonormal by construction")
}

/// Degeneracy structure of a valid channel spec.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegeneracyReport {
    pub zf: Subspace,
    pub dim_zf: usize,
    pub zf_isotropic_part: Subspace,
    pub zf_symplectic_part: Subspace,
    pub rank_k: usize,
    /// Corank with respect to the input space: 2 s_A - rank K.
    pub corank_k: usize,
    /// Skew complement of Ran K inside the input space.
    pub ran_k_perp: Subspace,
    pub type1: bool,
    pub type2: bool,
    /// Largest |l^T z| over the Z_f basis; nonzero values mean the noise
    /// function carries a phase on ker(alpha) and Z_f as returned is the
    /// kernel, not exactly f^{-1}(1).
    pub l_on_zf_max: f64,
}

impl DegeneracyReport {
    /// One-line classification.
    pub fn summary(&self) -> String {
        match (self.type1, self.type2) {
            (true, true) => "type-1 and type-2 degeneracy".into(),
            (true, false) => "type-1 degeneracy".into(),
            (false, true) => "type-2 degeneracy".into(),
            (false, false) => "no degeneracy".into(),
        }
    }

    /// Which constructions this crate offers for the channel.
    pub fn propositions(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.type1 {
            if self.zf_isotropic_part.dim() > 0 {
                out.push("Proposition 1 and Corollary 1 apply".into());
            } else {
                out.push(
                    "Proposition 1 applies with a user-supplied isotropic subspace \
                     (Z_f has a trivial isotropic part)"
                        .into(),
                );
            }
        }
        if self.type2 {
            out.push("Proposition 2 and Corollary 2 apply".into());
        }
        if out.is_empty() {
            out.push("no decomposition constructions apply".into());
        }
        out
    }
}

/// Classify the degeneracy of a valid spec.
pub fn classify(spec: &GaussianChannelSpec) -> Result<DegeneracyReport> {
    require_valid(spec)?;
    let space_a = spec.input_space();
    let space_b = spec.output_space();
    let zf = compute_zf(spec);
    let (zf_isotropic_part, zf_symplectic_part) = symplectic::radical_split(&space_b, &zf)?;
    let rank_k = linalg::rank(spec.k(), linalg::RANK_TOL);
    let corank_k = space_a.dim() - rank_k;
    let ran_k = Subspace::from_spanning(space_a.dim(), spec.k())?;
    let ran_k_perp = symplectic::skew_complement(&space_a, &ran_k)?;
    let mut l_on_zf_max = 0.0f64;
    for j in 0..zf.dim() {
        l_on_zf_max = l_on_zf_max.max(spec.l().dot(&zf.basis_column(j)).abs());
    }
    Ok(DegeneracyReport {
        dim_zf: zf.dim(),
        type1: zf.dim() > 0,
        type2: corank_k > 0,
        zf,
        zf_isotropic_part,
        zf_symplectic_part,
        rank_k,
        corank_k,
        ran_k_perp,
        l_on_zf_max,
    })
}

/// Action on a Weyl generator: `W(z) -> W(Kz) f(z)`.
pub fn dual_weyl(spec: &GaussianChannelSpec, z: &DVector<f64>) -> Result<(DVector<f64>, Complex64)> {
    if z.len() != 2 * spec.modes_out() {
        return Err(Error::InvalidArgument(format!(
            "z has dimension {}, expected {}",
            z.len(),
            2 * spec.modes_out()
        )));
    }
    let kz = spec.k() * z;
    let phase = spec.l().dot(z);
    let damp = 0.5 * z.dot(&(spec.alpha() * z));
    let f = Complex64::new(0.0, phase).exp() * Complex64::new((-damp).exp(), 0.0);
    Ok((kz, f))
}

/// Gaussian state: mean vector and covariance matrix with
/// `gamma + (i/2) Delta >= 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianState {
    #[serde(with = "jsonio::vec")]
    mean: DVector<f64>,
    #[serde(with = "jsonio::mat")]
    cov: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if mean.len() % 2 != 0 || cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::InvalidArgument(format!(
                "state shapes: mean length {}, cov {}x{}",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        let asym = linalg::max_abs(&(&cov - cov.transpose()));
        if asym > SYMMETRY_TOL {
            return Err(Error::InvalidArgument(format!(
                "covariance is not symmetric: max |gamma - gamma^T| = {asym:.3e}"
            )));
        }
        let state = GaussianState { mean, cov };
        let min_eig = state.uncertainty_min_eig();
        if min_eig < -VALIDITY_TOL {
            return Err(Error::Precondition(format!(
                "state condition fails: min eigenvalue of gamma + (i/2) Delta is {min_eig:.6e}"
            )));
        }
        Ok(state)
    }

    pub fn modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Minimum eigenvalue of `gamma + (i/2) Delta`.
    pub fn uncertainty_min_eig(&self) -> f64 {
        let delta = symplectic::standard_form(self.modes());
        linalg::hermitian_min_eig(&self.cov, &(delta * 0.5))
    }

    /// Vacuum-like state: zero mean, covariance I/2.
    pub fn vacuum(modes: usize) -> Self {
        GaussianState::new(
            DVector::zeros(2 * modes),
            DMatrix::identity(2 * modes, 2 * modes) * 0.5,
        )
        .expect("vacuum satisfies the state condition")
    }
}

/// Push a Gaussian state through the channel:
/// `mean' = K^T m + l`, `cov' = K^T gamma K + alpha`.
pub fn gaussian_state_push(
    spec: &GaussianChannelSpec,
    state: &GaussianState,
) -> Result<GaussianState> {
    require_valid(spec)?;
    if state.modes() != spec.modes_in() {
        return Err(Error::Precondition(format!(
            "state has {} modes, channel expects {}",
            state.modes(),
            spec.modes_in()
        )));
    }
    let mean = spec.k().transpose() * state.mean() + spec.l();
    let cov = spec.k().transpose() * state.cov() * spec.k() + spec.alpha();
    GaussianState::new(mean, cov)
}

/// Dimension bookkeeping of the weak-complementary duality: for a channel
/// with noise subspace Z_f and a candidate complementary channel (L, g),
/// `dim [Ran L]^perp = dim Z_f` and `dim [Ran K]^perp = dim Z_g`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualityReport {
    pub dim_ran_l_perp: usize,
    pub dim_zf: usize,
    pub first_equality: bool,
    pub dim_ran_k_perp: usize,
    pub dim_zg: usize,
    pub second_equality: bool,
}

impl DualityReport {
    pub fn passed(&self) -> bool {
        self.first_equality && self.second_equality
    }
}

/// Check the two dimension equalities for a (main, complementary) pair.
/// Mismatches are reported, not errors.
pub fn duality_check(
    main: &GaussianChannelSpec,
    complementary: &GaussianChannelSpec,
) -> Result<DualityReport> {
    require_valid(main)?;
    require_valid(complementary)?;
    if main.modes_in() != complementary.modes_in() {
        return Err(Error::InvalidArgument(format!(
            "channels share no input space: {} vs {} input modes",
            main.modes_in(),
            complementary.modes_in()
        )));
    }
    let dim_a = 2 * main.modes_in();
    let rank_k = linalg::rank(main.k(), linalg::RANK_TOL);
    let rank_l = linalg::rank(complementary.k(), linalg::RANK_TOL);
    let dim_zf = compute_zf(main).dim();
    let dim_zg = compute_zf(complementary).dim();
    // skew complements have complementary dimension regardless of the form
    let dim_ran_l_perp = dim_a - rank_l;
    let dim_ran_k_perp = dim_a - rank_k;
    Ok(DualityReport {
        dim_ran_l_perp,
        dim_zf,
        first_equality: dim_ran_l_perp == dim_zf,
        dim_ran_k_perp,
        dim_zg,
        second_equality: dim_ran_k_perp == dim_zg,
    })
}

/// Channel with an arbitrary evaluatable noise function and a declared
/// noise-free subspace; only sampled checks are possible.
pub struct GeneralLinearChannelSpec {
    pub modes_in: usize,
    pub modes_out: usize,
    pub k: DMatrix<f64>,
    pub f: Box<dyn Fn(&DVector<f64>) -> Complex64 + Send + Sync>,
    pub declared_zf: Subspace,
}

impl GeneralLinearChannelSpec {
    /// Wrap a Gaussian spec: f built from (l, alpha), declared Z_f = ker(alpha).
    pub fn from_gaussian(spec: &GaussianChannelSpec) -> Self {
        let l = spec.l().clone();
        let alpha = spec.alpha().clone();
        let zf = compute_zf(spec);
        GeneralLinearChannelSpec {
            modes_in: spec.modes_in(),
            modes_out: spec.modes_out(),
            k: spec.k().clone(),
            f: Box::new(move |z: &DVector<f64>| {
                let phase = l.dot(z);
                let damp = 0.5 * z.dot(&(&alpha * z));
                Complex64::new(0.0, phase).exp() * Complex64::new((-damp).exp(), 0.0)
            }),
            declared_zf: zf,
        }
    }
}

/// Sampled checks of a general noise function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneralFReport {
    pub f_zero_is_one: bool,
    pub max_modulus: f64,
    pub modulus_bounded: bool,
    pub max_zf_deviation: f64,
    pub declared_zf_consistent: bool,
    /// Min eigenvalue of the sampled positivity kernel
    /// `f(z_s - z_r) exp((i/2) z_s^T lambda z_r)`.
    pub kernel_min_eig: f64,
    pub kernel_psd: bool,
}

impl GeneralFReport {
    pub fn passed(&self) -> bool {
        self.f_zero_is_one && self.modulus_bounded && self.declared_zf_consistent && self.kernel_psd
    }
}

/// Evaluate the sampled positivity condition and the declared-Z_f consistency
/// of a general noise function on the given points. Failures are reported,
/// never proven absent: only the supplied finite subset is examined.
pub fn validate_general_f(
    spec: &GeneralLinearChannelSpec,
    sample_points: &[DVector<f64>],
) -> Result<GeneralFReport> {
    let nb = 2 * spec.modes_out;
    for z in sample_points {
        if z.len() != nb {
            return Err(Error::InvalidArgument(format!(
                "sample point of dimension {}, expected {nb}",
                z.len()
            )));
        }
    }
    let f = &spec.f;
    let f0 = f(&DVector::zeros(nb));
    let f_zero_is_one = (f0 - Complex64::new(1.0, 0.0)).norm() <= 1e-10;

    let mut max_modulus = f0.norm();
    for z in sample_points {
        max_modulus = max_modulus.max(f(z).norm());
    }
    let modulus_bounded = max_modulus <= 1.0 + 1e-10;

    // declared Z_f: probe basis vectors and short combinations
    let mut max_zf_deviation = 0.0f64;
    let zf = &spec.declared_zf;
    let mut probes: Vec<DVector<f64>> = Vec::new();
    for j in 0..zf.dim() {
        for scale in [1.0, -1.0, 0.5, 2.0] {
            probes.push(zf.basis_column(j) * scale);
        }
    }
    if zf.dim() >= 2 {
        probes.push(zf.basis_column(0) + zf.basis_column(1));
    }
    for z in &probes {
        max_zf_deviation = max_zf_deviation.max((f(z) - Complex64::new(1.0, 0.0)).norm());
    }
    let declared_zf_consistent = max_zf_deviation <= 1e-9;

    // sampled positivity kernel with the twist from lambda
    let delta_a = symplectic::standard_form(spec.modes_in);
    let delta_b = symplectic::standard_form(spec.modes_out);
    let lambda = &delta_b - spec.k.transpose() * delta_a * &spec.k;
    let n = sample_points.len();
    let mut re = DMatrix::zeros(n, n);
    let mut im = DMatrix::zeros(n, n);
    for s in 0..n {
        for r in 0..n {
            let diff = &sample_points[s] - &sample_points[r];
            let twist = 0.5 * sample_points[s].dot(&(&lambda * &sample_points[r]));
            let val = f(&diff) * Complex64::new(0.0, twist).exp();
            re[(s, r)] = val.re;
            im[(s, r)] = val.im;
        }
    }
    // enforce exact (anti)symmetry before the eigenvalue computation
    let re_sym = (&re + re.transpose()) * 0.5;
    let im_asym = (&im - im.transpose()) * 0.5;
    let kernel_min_eig = if n == 0 {
        0.0
    } else {
        linalg::hermitian_min_eig(&re_sym, &im_asym)
    };
    let kernel_psd = kernel_min_eig >= -1e-8;
    Ok(GeneralFReport {
        f_zero_is_one,
        max_modulus,
        modulus_bounded,
        max_zf_deviation,
        declared_zf_consistent,
        kernel_min_eig,
        kernel_psd,
    })
}

/// Form preservation of K restricted to a subspace of the output space;
/// for S = Z_f of a valid spec this always passes.
pub fn verify_k_on_subspace(
    spec: &GaussianChannelSpec,
    s: &Subspace,
) -> Result<FormPreservationReport> {
    verify_form_preservation(&spec.output_space(), &spec.input_space(), spec.k(), s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn validity_examples() {
        let id = GaussianChannelSpec::identity(1);
        let v = validate_gaussian(&id);
        assert!(v.valid);
        assert_abs_diff_eq!(v.min_eigenvalue, 0.0, epsilon = 1e-12);

        let half = GaussianChannelSpec::constant(1, 1, DMatrix::identity(2, 2) * 0.5).unwrap();
        let v = validate_gaussian(&half);
        assert!(v.valid);
        assert_abs_diff_eq!(v.min_eigenvalue, 0.0, epsilon = 1e-12);

        let zero = GaussianChannelSpec::constant(1, 1, DMatrix::zeros(2, 2)).unwrap();
        let v = validate_gaussian(&zero);
        assert!(!v.valid);
        assert_abs_diff_eq!(v.min_eigenvalue, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn zf_examples() {
        let a = family_a_spec(1.3).unwrap();
        let zf = compute_zf(&a);
        assert_eq!(zf.dim(), 1);
        assert_abs_diff_eq!(zf.basis()[(0, 0)], 1.0, epsilon = 1e-12);

        let id = GaussianChannelSpec::identity(1);
        assert_eq!(compute_zf(&id).dim(), 2);

        let b = family_b_spec(1.0, 1.0).unwrap();
        assert_eq!(compute_zf(&b).dim(), 0);
    }

    #[test]
    fn classify_family_a() {
        let rep = classify(&family_a_spec(1.0).unwrap()).unwrap();
        assert!(rep.type1);
        assert!(!rep.type2);
        assert_eq!(rep.dim_zf, 1);
        assert_eq!(rep.rank_k, 2);
        assert_eq!(rep.corank_k, 0);
        assert_eq!(rep.zf_isotropic_part.dim(), 1);
        assert_eq!(rep.zf_symplectic_part.dim(), 0);
        assert_eq!(rep.summary(), "type-1 degeneracy");
        assert_abs_diff_eq!(rep.l_on_zf_max, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn classify_family_b() {
        let rep = classify(&family_b_spec(1.0, 0.8).unwrap()).unwrap();
        assert!(!rep.type1);
        assert!(rep.type2);
        assert_eq!(rep.dim_zf, 0);
        assert_eq!(rep.rank_k, 1);
        assert_eq!(rep.corank_k, 1);
        assert_eq!(rep.ran_k_perp.dim(), 1);
        // Ran K = span{e1}; its skew complement is span{e1} again
        assert_abs_diff_eq!(rep.ran_k_perp.basis()[(0, 0)], 1.0, epsilon = 1e-12);
        assert_eq!(rep.summary(), "type-2 degeneracy");
    }

    #[test]
    fn classify_rejects_invalid() {
        let bad = GaussianChannelSpec::constant(1, 1, DMatrix::zeros(2, 2)).unwrap();
        assert!(matches!(classify(&bad), Err(Error::InvalidChannel(_))));
    }

    #[test]
    fn dual_weyl_examples() {
        let a = family_a_spec(0.7).unwrap();
        let zero = DVector::zeros(2);
        let (kz, f) = dual_weyl(&a, &zero).unwrap();
        assert_abs_diff_eq!(kz.norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((f - Complex64::new(1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);

        let z = DVector::from_vec(vec![1.7, 0.0]); // in Z_f
        let (kz, f) = dual_weyl(&a, &z).unwrap();
        assert_abs_diff_eq!((kz - &z).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((f - Complex64::new(1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);

        let z = DVector::from_vec(vec![0.0, 2.0]); // pure momentum direction
        let (_, f) = dual_weyl(&a, &z).unwrap();
        assert_abs_diff_eq!(f.re, (-0.5f64 * 0.7 * 4.0).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(f.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn push_examples() {
        let state = GaussianState::new(
            DVector::from_vec(vec![0.3, -0.2]),
            DMatrix::identity(2, 2) * 0.75,
        )
        .unwrap();

        let id = GaussianChannelSpec::identity(1);
        let out = gaussian_state_push(&id, &state).unwrap();
        assert_abs_diff_eq!((out.mean() - state.mean()).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            linalg::max_abs(&(out.cov() - state.cov())),
            0.0,
            epsilon = 1e-15
        );

        let a = family_a_spec(0.9).unwrap();
        let out = gaussian_state_push(&a, &state).unwrap();
        assert_abs_diff_eq!((out.mean() - state.mean()).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.cov()[(0, 0)], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(out.cov()[(1, 1)], 0.75 + 0.9, epsilon = 1e-15);

        let sigma = DMatrix::identity(2, 2) * 1.5;
        let konst = GaussianChannelSpec::constant(1, 1, sigma.clone()).unwrap();
        let out = gaussian_state_push(&konst, &state).unwrap();
        assert_abs_diff_eq!(out.mean().norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(linalg::max_abs(&(out.cov() - &sigma)), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn duality_examples() {
        let id = GaussianChannelSpec::identity(1);
        let konst = GaussianChannelSpec::constant(1, 1, DMatrix::identity(2, 2)).unwrap();
        // identity paired with a positive-definite constant channel passes
        let rep = duality_check(&id, &konst).unwrap();
        assert_eq!(rep.dim_ran_l_perp, 2);
        assert_eq!(rep.dim_zf, 2);
        assert_eq!(rep.dim_ran_k_perp, 0);
        assert_eq!(rep.dim_zg, 0);
        assert!(rep.passed());

        // family A against the identity channel fails both equalities
        let rep = duality_check(&family_a_spec(1.0).unwrap(), &id).unwrap();
        assert!(!rep.first_equality);
        assert!(!rep.second_equality);
        assert!(!rep.passed());

        // identity against itself fails the first equality: 0 != 2
        let rep = duality_check(&id, &id).unwrap();
        assert_eq!(rep.dim_ran_l_perp, 0);
        assert_eq!(rep.dim_zf, 2);
        assert!(!rep.passed());
    }

    #[test]
    fn lemma_style_form_preservation_on_zf() {
        let a = family_a_spec(1.0).unwrap();
        let rep = verify_k_on_subspace(&a, &compute_zf(&a)).unwrap();
        assert!(rep.passed());
    }

    #[test]
    fn general_f_gaussian_is_positive() {
        let spec = GeneralLinearChannelSpec::from_gaussian(&family_a_spec(1.0).unwrap());
        let pts: Vec<DVector<f64>> = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![0.5, 0.0]),
            DVector::from_vec(vec![0.0, 0.5]),
            DVector::from_vec(vec![-0.3, 0.7]),
            DVector::from_vec(vec![1.1, -0.4]),
        ];
        let rep = validate_general_f(&spec, &pts).unwrap();
        assert!(rep.passed(), "report: {rep:?}");
        assert!(rep.kernel_min_eig >= -1e-10);
    }

    #[test]
    fn general_f_constant_one_with_symplectic_k_is_positive() {
        let spec = GeneralLinearChannelSpec {
            modes_in: 1,
            modes_out: 1,
            k: DMatrix::identity(2, 2),
            f: Box::new(|_| Complex64::new(1.0, 0.0)),
            declared_zf: Subspace::full(2),
        };
        let pts: Vec<DVector<f64>> = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        ];
        let rep = validate_general_f(&spec, &pts).unwrap();
        assert!(rep.passed(), "report: {rep:?}");
    }

    #[test]
    fn general_f_growing_gaussian_fails_positivity() {
        // f(z) = exp(+ z^T z / 2) with K = I (lambda = 0): the 2x2 kernel on
        // any two distinct points has determinant 1 - f(d)^2 < 0
        let spec = GeneralLinearChannelSpec {
            modes_in: 1,
            modes_out: 1,
            k: DMatrix::identity(2, 2),
            f: Box::new(|z: &DVector<f64>| Complex64::new((0.5 * z.dot(z)).exp(), 0.0)),
            declared_zf: Subspace::zero(2),
        };
        let pts: Vec<DVector<f64>> = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![1.0, 0.0]),
        ];
        let rep = validate_general_f(&spec, &pts).unwrap();
        assert!(!rep.kernel_psd);
        assert!(!rep.modulus_bounded);
    }

    #[test]
    fn spec_json_round_trip_and_diagnostics() {
        let a = family_a_spec(1.0).unwrap();
        let json = a.to_json();
        let back = GaussianChannelSpec::from_json(&json).unwrap();
        assert_eq!(back.modes_in(), 1);
        assert_abs_diff_eq!(linalg::max_abs(&(back.alpha() - a.alpha())), 0.0, epsilon = 0.0);

        // wrong K shape is a parse-level error naming the problem
        let bad = r#"{"modes_in":1,"modes_out":1,"K":[[1,0]],"l":[0,0],"alpha":[[0,0],[0,1]]}"#;
        let err = GaussianChannelSpec::from_json(bad).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("K is 1x2"), "message: {msg}");

        // syntax errors carry line/column positions from the JSON parser
        let err = GaussianChannelSpec::from_json("{not json").unwrap_err();
        assert!(format!("{err}").contains("line"), "got: {err}");
    }

    #[test]
    fn family_b_validity_margin_is_zero() {
        let b = family_b_spec(1.0, 0.7).unwrap();
        let v = validate_gaussian(&b);
        assert!(v.valid);
        assert_abs_diff_eq!(v.min_eigenvalue, 0.0, epsilon = 1e-12);
    }
}
