//! Symplectic linear algebra on phase spaces R^{2s}: subspaces, skew
//! complements, radical splits, minimal symplectic enclosures, canonical
//! basis completion, and extension of partial form-preserving maps.
//!
//! Coordinates are ordered mode by mode, position before momentum:
//! (e1, h1, e2, h2, ...). The form matrix is block diagonal with
//! [[0, 1], [-1, 0]] blocks, so `Delta(e_i, h_i) = 1`.

use nalgebra::{DMatrix, DVector};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg;

/// Tolerance for declared canonical relations and for form-preservation
/// residuals of constructed bases and maps.
pub const FORM_TOL: f64 = 1e-9;

/// Tolerance for isotropy checks: skew products must vanish to this bound.
pub const ISOTROPY_TOL: f64 = 1e-10;

/// Tolerance for subspace containment and equality (projector comparison).
pub const SUBSPACE_TOL: f64 = 1e-8;

/// Standard symplectic form on `modes` modes in interleaved ordering.
pub fn standard_form(modes: usize) -> DMatrix<f64> {
    let n = 2 * modes;
    let mut d = DMatrix::zeros(n, n);
    for m in 0..modes {
        d[(2 * m, 2 * m + 1)] = 1.0;
        d[(2 * m + 1, 2 * m)] = -1.0;
    }
    d
}

/// A phase space R^{2s} with the standard symplectic form.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpace {
    modes: usize,
    form: DMatrix<f64>,
}

impl SymplecticSpace {
    pub fn standard(modes: usize) -> Self {
        SymplecticSpace {
            modes,
            form: standard_form(modes),
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Ambient dimension 2s.
    pub fn dim(&self) -> usize {
        2 * self.modes
    }

    pub fn form(&self) -> &DMatrix<f64> {
        &self.form
    }

    /// Skew product `a^T Delta b`.
    pub fn skew(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.dot(&(&self.form * b))
    }

    /// Standard basis vector: position axis of mode `m`.
    pub fn position_axis(&self, m: usize) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        v[2 * m] = 1.0;
        v
    }

    /// Standard basis vector: momentum axis of mode `m`.
    pub fn momentum_axis(&self, m: usize) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        v[2 * m + 1] = 1.0;
        v
    }
}

/// Linear subspace stored as an orthonormal basis matrix (ambient_dim x rank).
/// Basis columns carry canonical signs so equal subspaces constructed from
/// the same data reproduce byte-identical bases.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Orthonormalize a spanning set (columns); dependent columns are dropped.
    pub fn from_spanning(ambient_dim: usize, vectors: &DMatrix<f64>) -> Result<Self> {
        if vectors.nrows() != ambient_dim {
            return Err(Error::InvalidArgument(format!(
                "spanning vectors live in dimension {}, expected {}",
                vectors.nrows(),
                ambient_dim
            )));
        }
        Ok(Subspace {
            basis: linalg::column_space_basis(vectors, linalg::RANK_TOL),
        })
    }

    /// Wrap an already orthonormal basis; Gram deviation beyond 1e-8 is rejected.
    pub fn from_orthonormal(basis: DMatrix<f64>) -> Result<Self> {
        let gram = basis.transpose() * &basis;
        let dev = linalg::max_abs(&(&gram - DMatrix::identity(basis.ncols(), basis.ncols())));
        if dev > SUBSPACE_TOL {
            return Err(Error::Precondition(format!(
                "basis columns are not orthonormal: Gram deviation {dev:.3e}"
            )));
        }
        Ok(Subspace { basis })
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Subspace {
            basis: DMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Subspace {
            basis: DMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.basis.ncols() == 0
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basis_column(&self, j: usize) -> DVector<f64> {
        self.basis.column(j).into_owned()
    }

    /// Orthogonal projector onto the subspace.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * v)
    }

    /// Whether `v` lies in the subspace to `tol`, relative to `max(1, |v|)`.
    pub fn contains_vector(&self, v: &DVector<f64>, tol: f64) -> bool {
        let res = (v - self.project(v)).norm();
        res <= tol * v.norm().max(1.0)
    }

    /// Whether `other` is contained in `self`: every basis column of `other`
    /// projects onto `self` with residual at most `tol`.
    pub fn contains(&self, other: &Subspace, tol: f64) -> bool {
        (0..other.dim()).all(|j| self.contains_vector(&other.basis_column(j), tol))
    }

    /// Subspace equality by projector comparison.
    pub fn approx_eq(&self, other: &Subspace, tol: f64) -> bool {
        self.ambient_dim() == other.ambient_dim()
            && linalg::max_abs(&(self.projector() - other.projector())) <= tol
    }

    /// Span of the union of both subspaces.
    pub fn span_union(&self, other: &Subspace) -> Result<Self> {
        let n = self.ambient_dim();
        if other.ambient_dim() != n {
            return Err(Error::InvalidArgument(
                "span_union of subspaces with different ambient dimensions".into(),
            ));
        }
        let mut cols = DMatrix::zeros(n, self.dim() + other.dim());
        cols.view_mut((0, 0), (n, self.dim())).copy_from(&self.basis);
        cols.view_mut((0, self.dim()), (n, other.dim()))
            .copy_from(&other.basis);
        Subspace::from_spanning(n, &cols)
    }

    /// Intersection, computed as the kernel of the stacked complement projectors.
    pub fn intersect(&self, other: &Subspace) -> Result<Self> {
        let n = self.ambient_dim();
        if other.ambient_dim() != n {
            return Err(Error::InvalidArgument(
                "intersect of subspaces with different ambient dimensions".into(),
            ));
        }
        let id = DMatrix::identity(n, n);
        let mut stacked = DMatrix::zeros(2 * n, n);
        stacked.view_mut((0, 0), (n, n)).copy_from(&(&id - self.projector()));
        stacked
            .view_mut((n, 0), (n, n))
            .copy_from(&(&id - other.projector()));
        let k = linalg::kernel_basis(&stacked, linalg::RANK_TOL);
        Ok(Subspace { basis: k })
    }
}

impl Serialize for Subspace {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..self.basis.nrows())
            .map(|i| (0..self.basis.ncols()).map(|j| self.basis[(i, j)]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Subspace {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(deserializer)?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(D::Error::custom("ragged basis matrix"));
        }
        let m = DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]);
        Subspace::from_orthonormal(m).map_err(D::Error::custom)
    }
}

/// A full canonical basis: pairs (position-like, momentum-like) with
/// `Delta(e_i, h_j) = delta_ij`, `Delta(e_i, e_j) = Delta(h_i, h_j) = 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymplecticBasis {
    pairs: Vec<(Vec<f64>, Vec<f64>)>,
}

impl SymplecticBasis {
    fn from_vec_pairs(pairs: Vec<(DVector<f64>, DVector<f64>)>) -> Self {
        SymplecticBasis {
            pairs: pairs
                .into_iter()
                .map(|(e, h)| (e.as_slice().to_vec(), h.as_slice().to_vec()))
                .collect(),
        }
    }

    pub fn modes(&self) -> usize {
        self.pairs.len()
    }

    pub fn position(&self, i: usize) -> DVector<f64> {
        DVector::from_vec(self.pairs[i].0.clone())
    }

    pub fn momentum(&self, i: usize) -> DVector<f64> {
        DVector::from_vec(self.pairs[i].1.clone())
    }

    /// Basis matrix with interleaved columns (e1, h1, e2, h2, ...).
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.pairs.first().map_or(0, |(e, _)| e.len());
        let mut m = DMatrix::zeros(n, 2 * self.pairs.len());
        for (i, (e, h)) in self.pairs.iter().enumerate() {
            m.set_column(2 * i, &DVector::from_vec(e.clone()));
            m.set_column(2 * i + 1, &DVector::from_vec(h.clone()));
        }
        m
    }

    /// Largest deviation of the basis Gram matrix from the standard form.
    pub fn form_deviation(&self, space: &SymplecticSpace) -> f64 {
        let b = self.matrix();
        let gram = b.transpose() * space.form() * &b;
        linalg::max_abs(&(gram - standard_form(self.pairs.len())))
    }
}

/// Input to basis completion: declared canonical pairs plus unpaired
/// position-like vectors that still need momentum partners.
#[derive(Debug, Clone, Default)]
pub struct PartialSymplecticBasis {
    pub pairs: Vec<(DVector<f64>, DVector<f64>)>,
    pub unpaired_positions: Vec<DVector<f64>>,
}

/// A linear map defined on a subspace only: the j-th column of `images` is
/// the image of the j-th basis column of `domain`.
#[derive(Debug, Clone)]
pub struct PartialSymplecticMap {
    domain: Subspace,
    images: DMatrix<f64>,
}

impl PartialSymplecticMap {
    /// Validates injectivity and form preservation (both spaces equal here;
    /// see `extend_form_preserving_map` for the two-space variant).
    pub fn new(space: &SymplecticSpace, domain: Subspace, images: DMatrix<f64>) -> Result<Self> {
        if domain.ambient_dim() != space.dim() || images.nrows() != space.dim() {
            return Err(Error::InvalidArgument(
                "domain or images do not match the space dimension".into(),
            ));
        }
        if images.ncols() != domain.dim() {
            return Err(Error::InvalidArgument(format!(
                "{} image columns for a domain of dimension {}",
                images.ncols(),
                domain.dim()
            )));
        }
        if linalg::rank(&images, linalg::RANK_TOL) != images.ncols() {
            return Err(Error::Precondition(
                "partial map is not injective: image columns are rank deficient".into(),
            ));
        }
        let dev = restricted_form_deviation(space, space, &images, &domain);
        if dev > FORM_TOL {
            return Err(Error::Precondition(format!(
                "partial map does not preserve the form on its domain: deviation {dev:.3e}"
            )));
        }
        Ok(PartialSymplecticMap { domain, images })
    }

    pub fn domain(&self) -> &Subspace {
        &self.domain
    }

    pub fn images(&self) -> &DMatrix<f64> {
        &self.images
    }

    /// Image of a vector in the domain (coordinates via the orthonormal basis).
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.images * (self.domain.basis().transpose() * v)
    }
}

fn restricted_form_deviation(
    src: &SymplecticSpace,
    tgt: &SymplecticSpace,
    images: &DMatrix<f64>,
    domain: &Subspace,
) -> f64 {
    let gram_src = domain.basis().transpose() * src.form() * domain.basis();
    let gram_img = images.transpose() * tgt.form() * images;
    linalg::max_abs(&(gram_img - gram_src))
}

/// Skew complement { z : Delta(v, z) = 0 for all v in S }.
pub fn skew_complement(space: &SymplecticSpace, s: &Subspace) -> Result<Subspace> {
    check_ambient(space, s)?;
    if s.is_zero() {
        return Ok(Subspace::full(space.dim()));
    }
    let rows = s.basis().transpose() * space.form();
    Ok(Subspace {
        basis: linalg::kernel_basis(&rows, linalg::RANK_TOL),
    })
}

/// Whether the form vanishes identically on S (to `ISOTROPY_TOL`).
pub fn is_isotropic(space: &SymplecticSpace, s: &Subspace) -> Result<bool> {
    check_ambient(space, s)?;
    let gram = s.basis().transpose() * space.form() * s.basis();
    Ok(linalg::max_abs(&gram) <= ISOTROPY_TOL)
}

/// Split S into (radical, symplectic part): the radical is S intersected with
/// its skew complement; the symplectic part carries a nondegenerate form.
/// Both pieces are returned with orthonormal bases and S = radical + part.
pub fn radical_split(space: &SymplecticSpace, s: &Subspace) -> Result<(Subspace, Subspace)> {
    check_ambient(space, s)?;
    if s.is_zero() {
        return Ok((Subspace::zero(space.dim()), Subspace::zero(space.dim())));
    }
    let b = s.basis();
    let gram = b.transpose() * space.form() * b;
    // Antisymmetric Gram: kernel and range are exact orthogonal complements.
    let null_coeff = linalg::kernel_basis(&gram, linalg::RANK_TOL);
    let range_coeff = linalg::column_space_basis(&gram, linalg::RANK_TOL);
    let radical = Subspace::from_spanning(space.dim(), &(b * null_coeff))?;
    let part = Subspace::from_spanning(space.dim(), &(b * range_coeff))?;
    if radical.dim() + part.dim() != s.dim() {
        return Err(Error::Internal(format!(
            "radical split dimensions {} + {} do not add to {}",
            radical.dim(),
            part.dim(),
            s.dim()
        )));
    }
    Ok((radical, part))
}

/// Solve for a partner vector h with Delta(v, h) = 0 for every context vector
/// and Delta(anchor, h) = 1, taking the minimum-norm solution. The zero
/// constraints confine h to the skew complement of the context automatically.
fn partner_solve(
    space: &SymplecticSpace,
    context: &[DVector<f64>],
    anchor: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = space.dim();
    let mut a = DMatrix::zeros(context.len() + 1, n);
    let mut rhs = DVector::zeros(context.len() + 1);
    for (i, v) in context.iter().enumerate() {
        a.row_mut(i).copy_from(&(v.transpose() * space.form()));
    }
    a.row_mut(context.len())
        .copy_from(&(anchor.transpose() * space.form()));
    rhs[context.len()] = 1.0;
    let (h, residual) = linalg::min_norm_solve(&a, &rhs, linalg::RANK_TOL);
    if residual > 1e-8 {
        return Err(Error::Precondition(format!(
            "no canonical partner exists for the requested vector (solve residual {residual:.3e})"
        )));
    }
    Ok(h)
}

/// Deterministic choice of a new direction inside the skew complement of the
/// context: the standard axis with the largest projection, ties to the lowest
/// index.
fn fresh_direction(space: &SymplecticSpace, context: &[DVector<f64>]) -> Result<DVector<f64>> {
    let n = space.dim();
    let span = if context.is_empty() {
        Subspace::zero(n)
    } else {
        let mut m = DMatrix::zeros(n, context.len());
        for (j, v) in context.iter().enumerate() {
            m.set_column(j, v);
        }
        Subspace::from_spanning(n, &m)?
    };
    let comp = skew_complement(space, &span)?;
    if comp.is_zero() {
        return Err(Error::Internal(
            "no fresh direction available: skew complement is trivial".into(),
        ));
    }
    let b = comp.basis();
    let mut best = 0usize;
    let mut best_norm = -1.0f64;
    for i in 0..n {
        let row_norm = b.row(i).norm();
        if row_norm > best_norm + 1e-12 {
            best_norm = row_norm;
            best = i;
        }
    }
    let mut axis = DVector::zeros(n);
    axis[best] = 1.0;
    let v = comp.project(&axis);
    Ok(&v / v.norm())
}

/// Shared completion loop: given declared pairs and unpaired position-like
/// vectors, extend to `total_pairs` canonical pairs in this space.
fn complete_pairs(
    space: &SymplecticSpace,
    mut pairs: Vec<(DVector<f64>, DVector<f64>)>,
    lone: &[DVector<f64>],
    total_pairs: usize,
) -> Result<Vec<(DVector<f64>, DVector<f64>)>> {
    let mut current: Vec<DVector<f64>> = Vec::new();
    for (e, h) in &pairs {
        current.push(e.clone());
        current.push(h.clone());
    }
    for v in lone {
        current.push(v.clone());
    }
    // partners for the unpaired vectors, in declared order; each lone vector
    // is excluded from its own zero constraints, everything else stays
    let base = 2 * pairs.len();
    for (i, e) in lone.iter().enumerate() {
        let ctx: Vec<DVector<f64>> = current
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != base + i)
            .map(|(_, v)| v.clone())
            .collect();
        let h = partner_solve(space, &ctx, e)?;
        current.push(h.clone());
        pairs.push((e.clone(), h));
    }
    // fresh pairs until the requested count
    while pairs.len() < total_pairs {
        let e = fresh_direction(space, &current)?;
        let h = partner_solve(space, &current, &e)?;
        current.push(e.clone());
        current.push(h.clone());
        pairs.push((e, h));
    }
    Ok(pairs)
}

fn validate_partial_basis(space: &SymplecticSpace, partial: &PartialSymplecticBasis) -> Result<()> {
    let n = space.dim();
    let count = 2 * partial.pairs.len() + partial.unpaired_positions.len();
    if count > n {
        return Err(Error::Precondition(format!(
            "{count} declared vectors exceed the space dimension {n}"
        )));
    }
    let mut all: Vec<DVector<f64>> = Vec::new();
    for (e, h) in &partial.pairs {
        all.push(e.clone());
        all.push(h.clone());
    }
    all.extend(partial.unpaired_positions.iter().cloned());
    for v in &all {
        if v.len() != n {
            return Err(Error::InvalidArgument(format!(
                "declared vector of dimension {}, expected {n}",
                v.len()
            )));
        }
    }
    if !all.is_empty() {
        let mut m = DMatrix::zeros(n, all.len());
        for (j, v) in all.iter().enumerate() {
            m.set_column(j, v);
        }
        if linalg::rank(&m, linalg::RANK_TOL) != all.len() {
            return Err(Error::Precondition(
                "declared vectors are linearly dependent".into(),
            ));
        }
    }
    // canonical relations: pair i with pair j, and every pair against lone vectors
    let expect = |i: usize, j: usize| -> f64 {
        // indices into `all`: even = position of pair i/2, odd = momentum
        let (pi, ei) = (i / 2, i % 2 == 0);
        let (pj, ej) = (j / 2, j % 2 == 0);
        let both_pairs = i < 2 * partial.pairs.len() && j < 2 * partial.pairs.len();
        if both_pairs && pi == pj && ei && !ej {
            1.0
        } else if both_pairs && pi == pj && !ei && ej {
            -1.0
        } else {
            0.0
        }
    };
    for i in 0..all.len() {
        for j in 0..all.len() {
            if i == j {
                continue;
            }
            let got = space.skew(&all[i], &all[j]);
            let want = expect(i, j);
            if (got - want).abs() > FORM_TOL {
                return Err(Error::Precondition(format!(
                    "declared vectors {i} and {j} violate the canonical relations: \
                     skew product {got:.3e}, expected {want:.0}"
                )));
            }
        }
    }
    Ok(())
}

/// Complete a declared partial canonical family to a full basis of the space.
/// Declared pairs come first, then partners for unpaired vectors in declared
/// order, then deterministic fresh pairs.
pub fn complete_symplectic_basis(
    space: &SymplecticSpace,
    partial: &PartialSymplecticBasis,
) -> Result<SymplecticBasis> {
    validate_partial_basis(space, partial)?;
    let pairs = complete_pairs(
        space,
        partial.pairs.clone(),
        &partial.unpaired_positions,
        space.modes(),
    )?;
    let basis = SymplecticBasis::from_vec_pairs(pairs);
    let dev = basis.form_deviation(space);
    if dev > FORM_TOL {
        return Err(Error::Internal(format!(
            "completed basis misses the canonical form by {dev:.3e}"
        )));
    }
    Ok(basis)
}

/// Smallest symplectic subspace containing S: the symplectic part plus a
/// canonical partner for each radical direction.
pub fn minimal_symplectic_enclosure(space: &SymplecticSpace, s: &Subspace) -> Result<Subspace> {
    check_ambient(space, s)?;
    if s.is_zero() {
        return Ok(Subspace::zero(space.dim()));
    }
    let (radical, part) = radical_split(space, s)?;
    let mut current: Vec<DVector<f64>> = Vec::new();
    for j in 0..radical.dim() {
        current.push(radical.basis_column(j));
    }
    for j in 0..part.dim() {
        current.push(part.basis_column(j));
    }
    let mut partners: Vec<DVector<f64>> = Vec::new();
    for i in 0..radical.dim() {
        let mut ctx: Vec<DVector<f64>> = Vec::new();
        for (j, v) in current.iter().enumerate() {
            if j != i {
                ctx.push(v.clone());
            }
        }
        ctx.extend(partners.iter().cloned());
        let h = partner_solve(space, &ctx, &radical.basis_column(i))?;
        partners.push(h);
    }
    let mut cols = DMatrix::zeros(space.dim(), current.len() + partners.len());
    for (j, v) in current.iter().chain(partners.iter()).enumerate() {
        cols.set_column(j, v);
    }
    let enclosure = Subspace::from_spanning(space.dim(), &cols)?;
    if enclosure.dim() != s.dim() + radical.dim() {
        return Err(Error::Internal(format!(
            "enclosure dimension {} != dim S {} + radical {}",
            enclosure.dim(),
            s.dim(),
            radical.dim()
        )));
    }
    Ok(enclosure)
}

/// Extend a form-preserving map defined on a subspace of `src` with images in
/// `tgt` to a globally form-preserving matrix T (size 2s_tgt x 2s_src) with
/// `T^T Delta_tgt T = Delta_src` and `T = images` on the domain.
///
/// Requires s_tgt >= s_src: for fewer target modes no injective
/// form-preserving extension exists.
pub fn extend_form_preserving_map(
    src: &SymplecticSpace,
    tgt: &SymplecticSpace,
    domain: &Subspace,
    images: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if domain.ambient_dim() != src.dim() {
        return Err(Error::InvalidArgument(
            "domain does not live in the source space".into(),
        ));
    }
    if images.nrows() != tgt.dim() || images.ncols() != domain.dim() {
        return Err(Error::InvalidArgument(format!(
            "image matrix is {}x{}, expected {}x{}",
            images.nrows(),
            images.ncols(),
            tgt.dim(),
            domain.dim()
        )));
    }
    if tgt.modes() < src.modes() {
        return Err(Error::Unsupported(format!(
            "cannot extend into a smaller space: {} target modes < {} source modes",
            tgt.modes(),
            src.modes()
        )));
    }
    if domain.dim() > 0 && linalg::rank(images, linalg::RANK_TOL) != images.ncols() {
        return Err(Error::Precondition(
            "partial map is not injective: image columns are rank deficient".into(),
        ));
    }
    let dev = restricted_form_deviation(src, tgt, images, domain);
    if dev > FORM_TOL {
        return Err(Error::Precondition(format!(
            "partial map does not preserve the form on its domain: deviation {dev:.3e}"
        )));
    }

    // adapted basis of the domain: Darboux pairs of the symplectic part,
    // radical vectors as unpaired position-like directions
    let (radical, part) = radical_split(src, domain)?;
    let sym_pairs = darboux_pairs(src, &part)?;
    let lone: Vec<DVector<f64>> = (0..radical.dim()).map(|j| radical.basis_column(j)).collect();

    let apply = |v: &DVector<f64>| -> DVector<f64> { images * (domain.basis().transpose() * v) };

    // source completion: declared pairs, then radical partners, then fresh pairs
    let src_pairs = complete_pairs(src, sym_pairs.clone(), &lone, src.modes())?;

    // target side: images of the declared pairs, then solved partners for the
    // radical images inside nested skew complements, then fresh pairs
    let mut tgt_pairs: Vec<(DVector<f64>, DVector<f64>)> = sym_pairs
        .iter()
        .map(|(e, h)| (apply(e), apply(h)))
        .collect();
    let lone_images: Vec<DVector<f64>> = lone.iter().map(&apply).collect();
    let mut current: Vec<DVector<f64>> = Vec::new();
    for (e, h) in &tgt_pairs {
        current.push(e.clone());
        current.push(h.clone());
    }
    current.extend(lone_images.iter().cloned());
    let mut partners: Vec<DVector<f64>> = Vec::new();
    for (i, u) in lone_images.iter().enumerate() {
        let mut ctx: Vec<DVector<f64>> = Vec::new();
        for (j, v) in current.iter().enumerate() {
            if j != 2 * tgt_pairs.len() + i {
                ctx.push(v.clone());
            }
        }
        ctx.extend(partners.iter().cloned());
        let h = partner_solve(tgt, &ctx, u)?;
        partners.push(h);
    }
    for (u, h) in lone_images.iter().zip(partners.iter()) {
        tgt_pairs.push((u.clone(), h.clone()));
    }
    let mut tgt_current: Vec<DVector<f64>> = Vec::new();
    for (e, h) in &tgt_pairs {
        tgt_current.push(e.clone());
        tgt_current.push(h.clone());
    }
    while tgt_pairs.len() < src.modes() {
        let e = fresh_direction(tgt, &tgt_current)?;
        let h = partner_solve(tgt, &tgt_current, &e)?;
        tgt_current.push(e.clone());
        tgt_current.push(h.clone());
        tgt_pairs.push((e, h));
    }

    let s_src = SymplecticBasis::from_vec_pairs(src_pairs).matrix();
    let s_tgt = SymplecticBasis::from_vec_pairs(tgt_pairs).matrix();
    // T S_src = S_tgt  =>  solve the transposed system
    let lu = s_src.transpose().lu();
    let t_t = lu
        .solve(&s_tgt.transpose())
        .ok_or_else(|| Error::Internal("source basis matrix is singular".into()))?;
    let t = t_t.transpose();

    let form_dev = linalg::max_abs(&(t.transpose() * tgt.form() * &t - src.form()));
    if form_dev > FORM_TOL {
        return Err(Error::Internal(format!(
            "extended map misses form preservation by {form_dev:.3e}"
        )));
    }
    let restrict_dev = linalg::max_abs(&(&t * domain.basis() - images));
    if restrict_dev > FORM_TOL {
        return Err(Error::Internal(format!(
            "extended map deviates from the partial map by {restrict_dev:.3e}"
        )));
    }
    Ok(t)
}

/// Extend a partial symplectic map on a single space to a full symplectic
/// matrix T with `T^T Delta T = Delta` and `T = pmap` on its domain.
pub fn extend_partial_symplectic_map(
    space: &SymplecticSpace,
    pmap: &PartialSymplecticMap,
) -> Result<DMatrix<f64>> {
    extend_form_preserving_map(space, space, pmap.domain(), pmap.images())
}

/// Darboux pairs of a subspace on which the form is nondegenerate.
fn darboux_pairs(
    space: &SymplecticSpace,
    part: &Subspace,
) -> Result<Vec<(DVector<f64>, DVector<f64>)>> {
    if part.dim() % 2 != 0 {
        return Err(Error::Internal(format!(
            "symplectic part has odd dimension {}",
            part.dim()
        )));
    }
    let mut vecs: Vec<DVector<f64>> = (0..part.dim()).map(|j| part.basis_column(j)).collect();
    let mut pairs = Vec::new();
    while !vecs.is_empty() {
        let e = vecs.remove(0);
        // strongest partner among the remaining vectors
        let mut best = 0usize;
        let mut best_abs = -1.0f64;
        for (j, w) in vecs.iter().enumerate() {
            let p = space.skew(&e, w).abs();
            if p > best_abs + 1e-12 {
                best_abs = p;
                best = j;
            }
        }
        if best_abs < 1e-10 {
            return Err(Error::Internal(
                "nondegenerate part produced a direction without partners".into(),
            ));
        }
        let h = vecs.remove(best);
        let scale = space.skew(&e, &h);
        let h = h / scale;
        // reduce the remaining vectors to the skew complement of (e, h)
        for w in vecs.iter_mut() {
            let we = space.skew(w, &e);
            let wh = space.skew(w, &h);
            *w += we * &h - wh * &e;
        }
        // re-orthonormalize the remainder for conditioning (span is preserved)
        if !vecs.is_empty() {
            let n = space.dim();
            let mut m = DMatrix::zeros(n, vecs.len());
            for (j, w) in vecs.iter().enumerate() {
                m.set_column(j, w);
            }
            let ortho = linalg::column_space_basis(&m, linalg::RANK_TOL);
            if ortho.ncols() != vecs.len() {
                return Err(Error::Internal(
                    "lost dimensions while reducing the symplectic part".into(),
                ));
            }
            vecs = (0..ortho.ncols()).map(|j| ortho.column(j).into_owned()).collect();
        }
        pairs.push((e, h));
    }
    Ok(pairs)
}

/// Injectivity and form preservation of `map` restricted to S.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormPreservationReport {
    pub injective: bool,
    pub min_singular_value: f64,
    pub form_preserved: bool,
    pub max_form_deviation: f64,
}

impl FormPreservationReport {
    pub fn passed(&self) -> bool {
        self.injective && self.form_preserved
    }
}

/// Check whether `map` (a 2s_tgt x 2s_src matrix) restricted to the subspace
/// S of `src` is injective and preserves skew products to `FORM_TOL`.
pub fn verify_form_preservation(
    src: &SymplecticSpace,
    tgt: &SymplecticSpace,
    map: &DMatrix<f64>,
    s: &Subspace,
) -> Result<FormPreservationReport> {
    check_ambient(src, s)?;
    if map.nrows() != tgt.dim() || map.ncols() != src.dim() {
        return Err(Error::InvalidArgument(format!(
            "map is {}x{}, expected {}x{}",
            map.nrows(),
            map.ncols(),
            tgt.dim(),
            src.dim()
        )));
    }
    let restricted = map * s.basis();
    let min_sv = if s.dim() == 0 {
        f64::INFINITY
    } else {
        let sv = restricted.clone().singular_values();
        sv.min()
    };
    let injective = s.dim() == 0 || min_sv > linalg::svd_cutoff(1.0, linalg::RANK_TOL);
    let dev = restricted_form_deviation(src, tgt, &restricted, s);
    Ok(FormPreservationReport {
        injective,
        min_singular_value: min_sv,
        form_preserved: dev <= FORM_TOL,
        max_form_deviation: dev,
    })
}

/// Largest deviation of `T^T Delta_tgt T` from `Delta_src` for a full map.
pub fn form_deviation(src: &SymplecticSpace, tgt: &SymplecticSpace, t: &DMatrix<f64>) -> f64 {
    linalg::max_abs(&(t.transpose() * tgt.form() * t - src.form()))
}

fn check_ambient(space: &SymplecticSpace, s: &Subspace) -> Result<()> {
    if s.ambient_dim() != space.dim() {
        return Err(Error::InvalidArgument(format!(
            "subspace ambient dimension {} does not match the space dimension {}",
            s.ambient_dim(),
            space.dim()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn span(space: &SymplecticSpace, cols: &[DVector<f64>]) -> Subspace {
        let mut m = DMatrix::zeros(space.dim(), cols.len());
        for (j, c) in cols.iter().enumerate() {
            m.set_column(j, c);
        }
        Subspace::from_spanning(space.dim(), &m).unwrap()
    }

    #[test]
    fn standard_form_blocks() {
        let d = standard_form(2);
        assert_eq!(d[(0, 1)], 1.0);
        assert_eq!(d[(1, 0)], -1.0);
        assert_eq!(d[(2, 3)], 1.0);
        assert_eq!(d[(0, 2)], 0.0);
        assert_eq!(d[(0, 3)], 0.0);
    }

    #[test]
    fn skew_complement_of_position_axis_is_itself() {
        let sp = SymplecticSpace::standard(1);
        let s = span(&sp, &[sp.position_axis(0)]);
        let c = skew_complement(&sp, &s).unwrap();
        assert_eq!(c.dim(), 1);
        assert!(c.approx_eq(&s, 1e-12));
    }

    #[test]
    fn skew_complement_is_involutive_and_dim_exact() {
        let sp = SymplecticSpace::standard(3);
        let s = span(
            &sp,
            &[
                sp.position_axis(0),
                sp.momentum_axis(1),
                sp.position_axis(2) + sp.momentum_axis(0),
            ],
        );
        let c = skew_complement(&sp, &s).unwrap();
        assert_eq!(c.dim(), sp.dim() - s.dim());
        let cc = skew_complement(&sp, &c).unwrap();
        assert!(cc.approx_eq(&s, 1e-10));
    }

    #[test]
    fn isotropy_detects_both_cases() {
        let sp = SymplecticSpace::standard(2);
        let iso = span(&sp, &[sp.position_axis(0), sp.position_axis(1)]);
        let not = span(&sp, &[sp.position_axis(0), sp.momentum_axis(0)]);
        assert!(is_isotropic(&sp, &iso).unwrap());
        assert!(!is_isotropic(&sp, &not).unwrap());
    }

    #[test]
    fn radical_split_mixed_subspace() {
        let sp = SymplecticSpace::standard(2);
        let s = span(
            &sp,
            &[sp.position_axis(0), sp.momentum_axis(0), sp.position_axis(1)],
        );
        let (rad, part) = radical_split(&sp, &s).unwrap();
        assert_eq!(rad.dim(), 1);
        assert_eq!(part.dim(), 2);
        assert!(rad.approx_eq(&span(&sp, &[sp.position_axis(1)]), 1e-10));
        // radical equals S intersect skew-complement(S)
        let direct = s.intersect(&skew_complement(&sp, &s).unwrap()).unwrap();
        assert!(rad.approx_eq(&direct, 1e-8));
    }

    #[test]
    fn radical_split_of_zero_is_zero() {
        let sp = SymplecticSpace::standard(2);
        let (rad, part) = radical_split(&sp, &Subspace::zero(4)).unwrap();
        assert!(rad.is_zero());
        assert!(part.is_zero());
    }

    #[test]
    fn enclosure_adds_partner_for_radical() {
        let sp = SymplecticSpace::standard(2);
        let s = span(&sp, &[sp.position_axis(1)]);
        let enc = minimal_symplectic_enclosure(&sp, &s).unwrap();
        assert_eq!(enc.dim(), 2);
        assert!(enc.contains(&s, 1e-10));
        let (rad, _) = radical_split(&sp, &enc).unwrap();
        assert!(rad.is_zero());
    }

    #[test]
    fn enclosure_of_symplectic_subspace_is_itself() {
        let sp = SymplecticSpace::standard(2);
        let s = span(&sp, &[sp.position_axis(0), sp.momentum_axis(0)]);
        let enc = minimal_symplectic_enclosure(&sp, &s).unwrap();
        assert!(enc.approx_eq(&s, 1e-10));
    }

    #[test]
    fn completion_from_empty_gives_standard_basis() {
        let sp = SymplecticSpace::standard(2);
        let basis = complete_symplectic_basis(&sp, &PartialSymplecticBasis::default()).unwrap();
        let m = basis.matrix();
        let dev = linalg::max_abs(&(m - DMatrix::identity(4, 4)));
        assert!(dev < 1e-12, "deviation {dev}");
    }

    #[test]
    fn completion_pairs_diagonal_vector() {
        // one mode, declared position-like vector e1 + h1
        let sp = SymplecticSpace::standard(1);
        let v = sp.position_axis(0) + sp.momentum_axis(0);
        let partial = PartialSymplecticBasis {
            pairs: vec![],
            unpaired_positions: vec![v.clone()],
        };
        let basis = complete_symplectic_basis(&sp, &partial).unwrap();
        assert_eq!(basis.modes(), 1);
        assert_abs_diff_eq!((basis.position(0) - &v).norm(), 0.0, epsilon = 1e-12);
        // minimum-norm partner of (1,1) is (-1/2, 1/2)
        assert_abs_diff_eq!(basis.momentum(0)[0], -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(basis.momentum(0)[1], 0.5, epsilon = 1e-12);
        assert!(basis.form_deviation(&sp) < 1e-12);
    }

    #[test]
    fn completion_rejects_non_canonical_pairs() {
        let sp = SymplecticSpace::standard(1);
        let partial = PartialSymplecticBasis {
            pairs: vec![(sp.position_axis(0), 2.0 * sp.momentum_axis(0))],
            unpaired_positions: vec![],
        };
        let err = complete_symplectic_basis(&sp, &partial).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn extension_of_identity_on_position_axis_is_identity() {
        let sp = SymplecticSpace::standard(1);
        let domain = span(&sp, &[sp.position_axis(0)]);
        let images = DMatrix::from_columns(&[sp.position_axis(0)]);
        let pmap = PartialSymplecticMap::new(&sp, domain, images).unwrap();
        let t = extend_partial_symplectic_map(&sp, &pmap).unwrap();
        let dev = linalg::max_abs(&(&t - DMatrix::identity(2, 2)));
        assert!(dev < 1e-10, "deviation {dev}");
    }

    #[test]
    fn extension_handles_mixed_domain() {
        // modes 2: domain spans a symplectic pair and one radical direction
        let sp = SymplecticSpace::standard(2);
        let domain = span(
            &sp,
            &[sp.position_axis(0), sp.momentum_axis(0), sp.position_axis(1)],
        );
        // map: swap the two modes on the domain
        let mut images = DMatrix::zeros(4, 3);
        for j in 0..3 {
            let src = domain.basis_column(j);
            let mut img = DVector::zeros(4);
            img[0] = src[2];
            img[1] = src[3];
            img[2] = src[0];
            img[3] = src[1];
            images.set_column(j, &img);
        }
        let pmap = PartialSymplecticMap::new(&sp, domain.clone(), images.clone()).unwrap();
        let t = extend_partial_symplectic_map(&sp, &pmap).unwrap();
        assert!(form_deviation(&sp, &sp, &t) < 1e-9);
        assert!(linalg::max_abs(&(&t * domain.basis() - &images)) < 1e-9);
    }

    #[test]
    fn extension_into_larger_space() {
        // source 1 mode, target 2 modes: embed the position axis
        let src = SymplecticSpace::standard(1);
        let tgt = SymplecticSpace::standard(2);
        let domain = span(&src, &[src.position_axis(0)]);
        let images = DMatrix::from_columns(&[tgt.position_axis(1)]);
        let t = extend_form_preserving_map(&src, &tgt, &domain, &images).unwrap();
        assert_eq!(t.nrows(), 4);
        assert_eq!(t.ncols(), 2);
        assert!(form_deviation(&src, &tgt, &t) < 1e-9);
    }

    #[test]
    fn extension_into_smaller_space_is_refused() {
        let src = SymplecticSpace::standard(2);
        let tgt = SymplecticSpace::standard(1);
        let domain = span(&src, &[src.position_axis(0)]);
        let images = DMatrix::from_columns(&[tgt.position_axis(0)]);
        let err = extend_form_preserving_map(&src, &tgt, &domain, &images).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn form_preservation_report_cases() {
        let sp = SymplecticSpace::standard(1);
        let s = Subspace::full(2);
        // scaling by 2 is injective but breaks the form
        let k = DMatrix::identity(2, 2) * 2.0;
        let rep = verify_form_preservation(&sp, &sp, &k, &s).unwrap();
        assert!(rep.injective);
        assert!(!rep.form_preserved);
        assert!((rep.max_form_deviation - 3.0).abs() < 1e-12);
        // rank-one projector restricted to the position axis: injective,
        // and the form (identically zero on a line) is preserved
        let mut proj = DMatrix::zeros(2, 2);
        proj[(0, 0)] = 1.0;
        let line = span(&sp, &[sp.position_axis(0)]);
        let rep = verify_form_preservation(&sp, &sp, &proj, &line).unwrap();
        assert!(rep.passed());
    }

    #[test]
    fn subspace_serde_round_trip() {
        let sp = SymplecticSpace::standard(2);
        let s = span(&sp, &[sp.position_axis(0), sp.momentum_axis(1)]);
        let json = serde_json::to_string(&s).unwrap();
        let back: Subspace = serde_json::from_str(&json).unwrap();
        assert!(s.approx_eq(&back, 1e-12));
    }
}
