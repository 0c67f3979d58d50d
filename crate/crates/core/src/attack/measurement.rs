use rand::Rng;

use crate::attack::GroupPartition;
use crate::error::{Error, Result};
use crate::linalg::{c, identity, max_abs, CMatrix, CVector, DensityOperator, RankOneSum};
use crate::random::sample_haar_unitary;
use crate::scheme::split::SplitLayout;
use crate::scheme::unitarity_defect;

/// Default limit on the number of outcomes a sampled measurement may have.
pub const DEFAULT_OUTCOME_CAP: usize = 1 << 16;

/// Conditional bases for one group, chosen after the other groups' outcomes
/// are known. `bases[o]` is used when the other groups report `o`.
#[derive(Debug, Clone)]
pub struct AdaptiveStage {
    pub group: usize,
    pub bases: Vec<CMatrix>,
}

/// Rank-one product measurement: every group measures in an orthonormal
/// basis of its own space. With an adaptive stage, one group's basis depends
/// on the outcomes of the others, which is still a product measurement.
///
/// Outcome `m` is a full-space basis index: the digits of party `p` select a
/// column of its group's basis.
#[derive(Debug, Clone)]
pub struct ProductMeasurement {
    partition: GroupPartition,
    d: usize,
    bases: Vec<CMatrix>,
    adaptive: Option<AdaptiveStage>,
    layouts: Vec<SplitLayout>,
}

impl ProductMeasurement {
    pub fn new(partition: GroupPartition, d: usize, bases: Vec<CMatrix>) -> Result<Self> {
        let layouts = partition.layouts(d)?;
        if bases.len() != layouts.len() {
            return Err(Error::Parameter(format!("{} bases for {} groups", bases.len(), layouts.len())));
        }
        for (b, lay) in bases.iter().zip(&layouts) {
            if b.shape() != (lay.d_x, lay.d_x) {
                return Err(Error::dim_mismatch("group basis", lay.d_x, b.nrows()));
            }
        }
        Ok(Self { partition, d, bases, adaptive: None, layouts })
    }

    pub fn with_adaptive(mut self, stage: AdaptiveStage) -> Result<Self> {
        let lay = self.layouts.get(stage.group).ok_or_else(|| Error::Parameter(format!("no group {}", stage.group)))?;
        if stage.bases.len() != lay.d_w || stage.bases.iter().any(|b| b.shape() != (lay.d_x, lay.d_x)) {
            return Err(Error::Parameter("adaptive bases do not match the group layout".into()));
        }
        self.adaptive = Some(stage);
        Ok(self)
    }

    pub fn partition(&self) -> &GroupPartition {
        &self.partition
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.layouts[0].d_w * self.layouts[0].d_x
    }

    pub fn bases(&self) -> &[CMatrix] {
        &self.bases
    }

    pub fn adaptive(&self) -> Option<&AdaptiveStage> {
        self.adaptive.as_ref()
    }

    pub fn is_adaptive(&self) -> bool {
        self.adaptive.is_some()
    }

    pub fn outcome_count(&self) -> usize {
        self.dim()
    }

    pub(crate) fn layouts(&self) -> &[SplitLayout] {
        &self.layouts
    }

    /// Largest deviation of any local basis from orthonormality. Products of
    /// complete local bases are complete, so this bounds the completeness of
    /// the whole measurement up to a dimension factor.
    pub fn completeness_residual(&self) -> f64 {
        let fixed = self.bases.iter().map(unitarity_defect);
        let adaptive = self.adaptive.iter().flat_map(|a| a.bases.iter().map(unitarity_defect));
        fixed.chain(adaptive).fold(0.0, f64::max)
    }

    /// Full-space vector of outcome `m`.
    pub fn outcome_vector(&self, m: usize) -> Result<CVector> {
        let dim = self.dim();
        if m >= dim {
            return Err(Error::Parameter(format!("outcome {m} outside 0..{dim}")));
        }
        let mut e = CMatrix::zeros(dim, 1);
        e[(m, 0)] = c(1.0, 0.0);
        // outcome m is row m after applying every B†; invert that with B
        let v = self.transform(e, false);
        Ok(v.column(0).into_owned())
    }

    /// Per-group factors of outcome `m`, in group order.
    pub fn outcome_factors(&self, m: usize) -> Result<Vec<CVector>> {
        let dim = self.dim();
        if m >= dim {
            return Err(Error::Parameter(format!("outcome {m} outside 0..{dim}")));
        }
        let positions: Vec<(usize, usize)> = self.layouts.iter().map(|lay| locate(lay, m)).collect();
        let mut out = Vec::with_capacity(self.layouts.len());
        for (q, &(_, x)) in positions.iter().enumerate() {
            let basis = match &self.adaptive {
                Some(a) if a.group == q => {
                    let (o, _) = positions[q];
                    &a.bases[o]
                }
                _ => &self.bases[q],
            };
            out.push(basis.column(x).into_owned());
        }
        Ok(out)
    }

    /// `max |Σ_m |z_m⟩⟨z_m| − I|`, built densely; only for small dimensions.
    pub fn dense_completeness_residual(&self) -> Result<f64> {
        let dim = self.dim();
        if dim > 1024 {
            return Err(Error::Budget(format!("dense completeness check at dimension {dim}")));
        }
        let mut sum = CMatrix::zeros(dim, dim);
        for m in 0..dim {
            let z = self.outcome_vector(m)?;
            sum += &z * z.adjoint();
        }
        Ok(max_abs(&(sum - identity(dim))))
    }

    /// Applies `B_q†` (or `B_q` when `adjoint` is false, in reverse order) to
    /// every column of `v`, mapping full-space amplitudes to outcome
    /// amplitudes.
    pub(crate) fn transform(&self, mut v: CMatrix, adjoint: bool) -> CMatrix {
        let adaptive_group = self.adaptive.as_ref().map(|a| a.group);
        if adjoint {
            for (q, lay) in self.layouts.iter().enumerate() {
                if Some(q) != adaptive_group {
                    apply_group(&mut v, lay, |_| self.bases[q].adjoint());
                }
            }
            if let Some(a) = &self.adaptive {
                apply_group(&mut v, &self.layouts[a.group], |o| a.bases[o].adjoint());
            }
        } else {
            if let Some(a) = &self.adaptive {
                apply_group(&mut v, &self.layouts[a.group], |o| a.bases[o].clone());
            }
            for (q, lay) in self.layouts.iter().enumerate().rev() {
                if Some(q) != adaptive_group {
                    apply_group(&mut v, lay, |_| self.bases[q].clone());
                }
            }
        }
        v
    }

    /// `Tr(Z_m A)` for every outcome, with `A` in factored form.
    pub fn outcome_weights(&self, a: &RankOneSum) -> Result<Vec<f64>> {
        if a.dim() != self.dim() {
            return Err(Error::dim_mismatch("measured operator", self.dim(), a.dim()));
        }
        let v = self.transform(a.vectors().clone(), true);
        Ok(weights(&v, a.coeffs()))
    }

    /// `Tr(Z_m ρ)` for every outcome.
    pub fn probabilities(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        self.outcome_weights(&RankOneSum::from_hermitian(rho.matrix())?)
    }
}

pub(crate) fn weights(v: &CMatrix, coeffs: &[f64]) -> Vec<f64> {
    (0..v.nrows()).map(|m| coeffs.iter().enumerate().map(|(k, cf)| cf * v[(m, k)].norm_sqr()).sum()).collect()
}

/// Position `(o, x)` of full index `m` in a group layout.
fn locate(lay: &SplitLayout, m: usize) -> (usize, usize) {
    for o in 0..lay.d_w {
        for x in 0..lay.d_x {
            if lay.index(o, x) == m {
                return (o, x);
            }
        }
    }
    unreachable!("layouts are bijective")
}

/// Replaces each group slice `v[o]` (rows of block `o`) by `op(o) · v[o]`.
pub(crate) fn apply_group(v: &mut CMatrix, lay: &SplitLayout, op: impl Fn(usize) -> CMatrix) {
    let cols = v.ncols();
    for o in 0..lay.d_w {
        let slice = CMatrix::from_fn(lay.d_x, cols, |x, k| v[(lay.index(o, x), k)]);
        let mapped = op(o) * slice;
        for x in 0..lay.d_x {
            let row = lay.index(o, x);
            for k in 0..cols {
                v[(row, k)] = mapped[(x, k)];
            }
        }
    }
}

/// Haar-random orthonormal basis for every group.
pub fn sample_product_measurement<R: Rng + ?Sized>(
    partition: &GroupPartition,
    d: usize,
    rng: &mut R,
) -> Result<ProductMeasurement> {
    sample_product_measurement_capped(partition, d, rng, DEFAULT_OUTCOME_CAP)
}

pub fn sample_product_measurement_capped<R: Rng + ?Sized>(
    partition: &GroupPartition,
    d: usize,
    rng: &mut R,
    outcome_cap: usize,
) -> Result<ProductMeasurement> {
    let outcomes = u32::try_from(partition.n()).ok().and_then(|n| d.checked_pow(n));
    match outcomes {
        Some(m) if m <= outcome_cap => {}
        _ => return Err(Error::Budget(format!("d^n outcomes exceed the cap {outcome_cap}"))),
    }
    let bases = partition
        .groups()
        .iter()
        .map(|g| sample_haar_unitary(d.pow(g.len() as u32), rng))
        .collect::<Result<Vec<_>>>()?;
    ProductMeasurement::new(partition.clone(), d, bases)
}

/// `Σ_m |Tr(Z_m ρ0) − Tr(Z_m ρ1)|`.
pub fn attack_value(measurement: &ProductMeasurement, rho0: &DensityOperator, rho1: &DensityOperator) -> Result<f64> {
    if rho0.dim() != rho1.dim() {
        return Err(Error::dim_mismatch("attack states", rho0.dim(), rho1.dim()));
    }
    let diff = RankOneSum::from_hermitian(&(rho0.matrix() - rho1.matrix()))?;
    attack_value_factored(measurement, &diff)
}

/// `Σ_m |Tr(Z_m Δ)|` for a Hermitian `Δ` in factored form.
pub fn attack_value_factored(measurement: &ProductMeasurement, diff: &RankOneSum) -> Result<f64> {
    Ok(measurement.outcome_weights(diff)?.iter().map(|w| w.abs()).sum())
}
