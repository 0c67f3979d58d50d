use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::scheme::split::SplitLayout;
use crate::scheme::{HidingScheme, TransposeDecoder};

const DENOM_FLOOR: f64 = 1e-14;
const BOUND_SLACK: f64 = 1e-9;

/// Overlap diagnostics for one code vector `j`, unitary `i` and complement
/// outcome `l`.
///
/// With `a_{i'j'} = P_l U_{i'}|j'⟩`,
/// `delta = Σ_{(i',j')≠(i,j)} |⟨a_{i'j'}|a_ij⟩|² / ‖a_ij‖⁴`, split into the
/// terms with `i' ≠ i` (`delta1`) and those with `i' = i` (`delta2`).
#[derive(Debug, Clone, Serialize)]
pub struct DeltaDiagnostics {
    pub i: usize,
    pub j: usize,
    pub l: usize,
    pub delta: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// `‖a_ij‖² = ⟨j|U_i†P_lU_i|j⟩`.
    pub denom: f64,
    /// `|⟨j|T_il a_ij⟩|² / ‖a_ij‖²`.
    pub pgm_fidelity_term: f64,
}

impl DeltaDiagnostics {
    pub fn satisfies_bound(&self) -> bool {
        1.0 - self.pgm_fidelity_term <= self.delta + BOUND_SLACK
    }
}

fn block_column(scheme: &HidingScheme, layout: &SplitLayout, i: usize, j: usize, l: usize) -> CVector {
    let u = &scheme.unitaries()[i];
    CVector::from_fn(layout.d_x, |x, _| u[(layout.index(l, x), j)])
}

/// Errors when the denominator vanishes, or when the decoder's success term
/// falls below `1 − delta` by more than 1e-9.
pub fn delta_diagnostics(
    scheme: &HidingScheme,
    decoder: &TransposeDecoder,
    i: usize,
    j: usize,
    l: usize,
) -> Result<DeltaDiagnostics> {
    let p = scheme.params();
    if decoder.in_dim() != scheme.dim() || decoder.code_dim() != p.s {
        return Err(Error::Parameter("decoder was built for a different scheme".into()));
    }
    if i >= p.r || j >= p.s || l >= decoder.outcome_count() {
        return Err(Error::Parameter(format!("index (i, j, l) = ({i}, {j}, {l}) out of range")));
    }
    let layout = SplitLayout::new(decoder.split(), p.d);
    let a = block_column(scheme, &layout, i, j, l);
    let denom = a.norm_squared();
    if !(denom > DENOM_FLOOR) {
        return Err(Error::Degenerate(format!("outcome ({i}, {j}, {l}) has vanishing weight {denom:.3e}")));
    }
    let mut delta1 = 0.0;
    let mut delta2 = 0.0;
    for ip in 0..p.r {
        for jp in 0..p.s {
            if ip == i && jp == j {
                continue;
            }
            let overlap = block_column(scheme, &layout, ip, jp, l).dotc(&a).norm_sqr() / (denom * denom);
            if ip == i {
                delta2 += overlap;
            } else {
                delta1 += overlap;
            }
        }
    }
    let hit = (decoder.kraus_block(i, l) * &a)[j].norm_sqr() / denom;
    let diag = DeltaDiagnostics { i, j, l, delta: delta1 + delta2, delta1, delta2, denom, pgm_fidelity_term: hit };
    if !diag.satisfies_bound() {
        return Err(Error::Domain(format!(
            "decoder success term {hit} at ({i}, {j}, {l}) is below 1 − Δ = {}",
            1.0 - diag.delta
        )));
    }
    Ok(diag)
}

/// Diagnostics for every `(i, j, l)`, ordered with `l` fastest.
pub fn all_delta_diagnostics(scheme: &HidingScheme, decoder: &TransposeDecoder) -> Result<Vec<DeltaDiagnostics>> {
    let p = scheme.params();
    let mut out = Vec::with_capacity(p.r * p.s * decoder.outcome_count());
    for i in 0..p.r {
        for j in 0..p.s {
            for l in 0..decoder.outcome_count() {
                out.push(delta_diagnostics(scheme, decoder, i, j, l)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::SeededRng;
    use crate::scheme::{PartySplit, SchemeParams};

    fn build(n: usize, k: usize, d: usize, r: usize, s: usize, seed: u64) -> (HidingScheme, TransposeDecoder) {
        let params = SchemeParams::new(n, k, d, r, s, 0.5, 0.5).unwrap();
        let sc = HidingScheme::build(params, &mut SeededRng::new(seed, 0)).unwrap();
        let dec = TransposeDecoder::build(&sc, &PartySplit::leading(n, k).unwrap()).unwrap();
        (sc, dec)
    }

    #[test]
    fn single_vector_has_no_error_terms() {
        let (sc, dec) = build(2, 1, 3, 1, 1, 1);
        for l in 0..3 {
            let diag = delta_diagnostics(&sc, &dec, 0, 0, l).unwrap();
            assert_eq!(diag.delta, 0.0);
            assert!((diag.pgm_fidelity_term - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn full_access_has_no_same_unitary_term() {
        let (sc, dec) = build(2, 2, 3, 3, 3, 2);
        for diag in all_delta_diagnostics(&sc, &dec).unwrap() {
            assert!(diag.delta2.abs() < 1e-20 + 1e-12 * diag.delta1.max(1.0));
            assert!((diag.delta - diag.delta1 - diag.delta2).abs() < 1e-10);
        }
    }

    #[test]
    fn bound_holds_on_random_scheme() {
        let (sc, dec) = build(2, 1, 8, 3, 2, 3);
        let all = all_delta_diagnostics(&sc, &dec).unwrap();
        assert_eq!(all.len(), 3 * 2 * 8);
        assert!(all.iter().all(DeltaDiagnostics::satisfies_bound));
    }

    #[test]
    fn indices_checked() {
        let (sc, dec) = build(2, 1, 3, 1, 1, 1);
        assert!(delta_diagnostics(&sc, &dec, 1, 0, 0).is_err());
        assert!(delta_diagnostics(&sc, &dec, 0, 0, 3).is_err());
    }
}
