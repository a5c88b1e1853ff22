//! Second variation of the reduced energy and its spectrum.
//!
//! For the scalar problem the second variation is the Sturm–Liouville
//! operator `𝒮h = −h″ − P cos(θ + α) h` with `h(0) = 0` and the Robin tip
//! condition `h′(1) − εP cos(θ(1) − ψ + α) h(1) = 0`. The discrete operator
//! is the Hessian `H` of the discrete energy in the trapezoidal metric
//! `M = diag(h, …, h, h/2)`; it is stored in the symmetric form
//! `M^{-1/2} H M^{-1/2}`, which has the same eigenvalues as `M^{-1} H`.

use serde::{Deserialize, Serialize};

use crate::continuation::{Branch, FoldRecord};
use crate::linalg::symmetric_tridiagonal_eigen;
use crate::model::{ElasticaParams, EquilibriumState, Mesh, OrdinateKind};
use crate::{Error, Result};

/// Relative threshold separating negative eigenvalues from zero.
pub const EIG_REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondVariationOperator {
    /// Diagonal of the symmetric matrix over the unknowns `1..n`.
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    /// `−εP cos(θ(1) − ψ + α)`, the boundary-energy contribution at the tip.
    pub bc_tip_coeff: f64,
    /// `−P cos(θ_i + α)` at nodes `1..n`.
    pub potential: Vec<f64>,
    pub mesh: Mesh,
}

impl SecondVariationOperator {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Applies `M^{-1} H` to nodal values. Node 0 is the clamp and is
    /// treated as zero.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.mesh.n_nodes();
        let h = self.mesh.h();
        let inv_h2 = 1.0 / (h * h);
        let mut out = vec![0.0; n];
        for i in 1..n - 1 {
            let left = if i == 1 { 0.0 } else { v[i - 1] };
            out[i] = (2.0 * v[i] - v[i + 1] - left) * inv_h2 + self.potential[i - 1] * v[i];
        }
        let last = n - 1;
        let left = if last == 1 { 0.0 } else { v[last - 1] };
        out[last] = 2.0 * (v[last] - left) * inv_h2
            + self.potential[last - 1] * v[last]
            + 2.0 / h * self.bc_tip_coeff * v[last];
        out
    }

    /// `⟨𝒮v, v⟩_h / ⟨v, v⟩_h` for nodal `v` vanishing at the clamp.
    pub fn rayleigh_quotient(&self, v: &[f64]) -> f64 {
        let sv = self.apply(v);
        let mut clamped = v.to_vec();
        clamped[0] = 0.0;
        self.mesh.inner(&sv, &clamped) / self.mesh.inner(&clamped, &clamped)
    }

    /// Maps an eigenvector of the symmetric form to nodal values with a
    /// zero at the clamp and unit discrete `L²` norm.
    pub fn nodal_mode(&self, v: &[f64]) -> Vec<f64> {
        let n = self.mesh.n_nodes();
        let mut out = vec![0.0; n];
        for i in 1..n {
            out[i] = v[i - 1] / self.mesh.weight(i).sqrt();
        }
        let norm = self.mesh.inner(&out, &out).sqrt();
        if norm > 0.0 {
            for x in &mut out {
                *x /= norm;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Number of eigenvalues below `−tol_eig`.
    pub index: usize,
    pub mu_min: f64,
    pub tol_eig: f64,
}

impl SpectrumReport {
    fn from_values(eigenvalues: Vec<f64>) -> Self {
        let scale = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol_eig = EIG_REL_TOL * scale;
        let index = eigenvalues.iter().filter(|v| **v < -tol_eig).count();
        let mu_min = eigenvalues.first().copied().unwrap_or(f64::NAN);
        Self {
            eigenvalues,
            index,
            mu_min,
            tol_eig,
        }
    }

    /// Position and value of the eigenvalue closest to zero.
    pub fn nearest_zero(&self) -> (usize, f64) {
        self.eigenvalues
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap_or((0, f64::NAN))
    }

    /// Whether every eigenvalue is clearly separated from zero.
    pub fn is_clear(&self, factor: f64) -> bool {
        self.nearest_zero().1.abs() > factor * self.tol_eig
    }
}

/// Builds the discrete second-variation operator at `state`.
pub fn assemble_operator(
    state: &EquilibriumState,
    params: &ElasticaParams,
) -> Result<SecondVariationOperator> {
    let mesh = state.mesh()?;
    let n = mesh.n_nodes();
    let h = mesh.h();
    let inv_h2 = 1.0 / (h * h);
    let load = params.load;
    let potential: Vec<f64> = state.theta[1..]
        .iter()
        .map(|t| -load * (t + params.alpha).cos())
        .collect();
    let chi = state.theta1() - params.psi + params.alpha;
    let bc_tip_coeff = -params.epsilon * load * chi.cos();

    let m = n - 1;
    let mut diag: Vec<f64> = potential.iter().map(|q| 2.0 * inv_h2 + q).collect();
    diag[m - 1] += 2.0 / h * bc_tip_coeff;
    let mut off = vec![-inv_h2; m - 1];
    if m >= 2 {
        off[m - 2] = -std::f64::consts::SQRT_2 * inv_h2;
    }
    if diag.iter().chain(&off).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("second-variation operator"));
    }
    Ok(SecondVariationOperator {
        diag,
        off,
        bc_tip_coeff,
        potential,
        mesh,
    })
}

/// All eigenvalues of the operator and the resulting Morse index.
pub fn compute_spectrum(op: &SecondVariationOperator) -> Result<SpectrumReport> {
    let eig = symmetric_tridiagonal_eigen(&op.diag, &op.off, false)?;
    Ok(SpectrumReport::from_values(eig.values))
}

/// Spectrum together with nodal eigenfunctions (unit discrete `L²` norm).
pub fn compute_spectrum_with_modes(
    op: &SecondVariationOperator,
) -> Result<(SpectrumReport, Vec<Vec<f64>>)> {
    let eig = symmetric_tridiagonal_eigen(&op.diag, &op.off, true)?;
    let modes = eig
        .vectors
        .unwrap_or_default()
        .iter()
        .map(|v| op.nodal_mode(v))
        .collect();
    Ok((SpectrumReport::from_values(eig.values), modes))
}

/// Morse index of an equilibrium.
pub fn morse_index(state: &EquilibriumState, params: &ElasticaParams) -> Result<SpectrumReport> {
    compute_spectrum(&assemble_operator(state, params)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Zero eigenvalue at the fold, sign flip across it, and the sign rule
    /// agrees with the eigenvalue count.
    Pass,
    /// The eigenvalue checks failed although the index jumps agree.
    Fail,
    /// The sign rule was not applicable; the eigenvalue checks passed.
    OracleOnly,
    /// The sign rule and the eigenvalue count disagree.
    Mismatch,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::OracleOnly => "oracle-only",
            Verdict::Mismatch => "mismatch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldValidation {
    pub verdict: Verdict,
    /// Eigenvalue closest to zero at the refined fold.
    pub mu_at_fold: f64,
    pub tol_eig: f64,
    /// Critical eigenvalue (position `min(index_before, index_after)`) on
    /// either side.
    pub mu_before: f64,
    pub mu_after: f64,
    pub oracle_index_before: usize,
    pub oracle_index_after: usize,
    /// Index after the fold according to the sign rule.
    pub predicted_index_after: Option<usize>,
    /// Cosine between the null mode and the branch tangent's `θ` part.
    pub null_vector_cosine: f64,
}

/// Eigenvalue cross-check of a classified fold. Never fails on a
/// disagreement; see [`validate_fold`].
pub fn inspect_fold(branch: &Branch, record: &FoldRecord) -> Result<FoldValidation> {
    inspect_fold_at(branch.kind, &branch.base_params, record)
}

/// [`inspect_fold`] for a fold recorded on a branch swept in `kind` from
/// `base_params`, without the branch itself.
pub fn inspect_fold_at(
    kind: OrdinateKind,
    base_params: &ElasticaParams,
    record: &FoldRecord,
) -> Result<FoldValidation> {
    let at = |xi: f64| base_params.with(kind, xi);

    let op = assemble_operator(&record.state, &at(record.xi_star))?;
    let (spec, modes) = compute_spectrum_with_modes(&op)?;
    let (k, mu_at_fold) = spec.nearest_zero();

    let mesh = op.mesh;
    let c = if kind.is_fixed_end() {
        record.xi_dot
    } else {
        0.0
    };
    let mut rel_dot: Vec<f64> = record.theta_dot.iter().map(|t| t - c).collect();
    rel_dot[0] = 0.0;
    let mode = &modes[k];
    let norm = mesh.inner(&rel_dot, &rel_dot).sqrt();
    let null_vector_cosine = if norm > 0.0 {
        mesh.inner(mode, &rel_dot).abs() / norm
    } else {
        0.0
    };

    let before = morse_index(&record.before.state, &at(record.before.xi))?;
    let after = morse_index(&record.after.state, &at(record.after.xi))?;
    let ib = before.index;
    let ia = after.index;
    let p = ib.min(ia);
    let mu_before = before.eigenvalues.get(p).copied().unwrap_or(f64::NAN);
    let mu_after = after.eigenvalues.get(p).copied().unwrap_or(f64::NAN);

    let small = mu_at_fold.abs() < 100.0 * spec.tol_eig;
    let flip = mu_before * mu_after < 0.0;
    let oracle_jump = ia as i64 - ib as i64;
    let predicted_index_after = record
        .mu_dot_sign
        .map(|s| (ib as i64 - s as i64).max(0) as usize);

    let verdict = match record.mu_dot_sign {
        Some(s) if -(s as i64) != oracle_jump => Verdict::Mismatch,
        Some(_) if small && flip => Verdict::Pass,
        Some(_) => Verdict::Fail,
        None if small && flip && oracle_jump.abs() == 1 => Verdict::OracleOnly,
        None => Verdict::Fail,
    };
    Ok(FoldValidation {
        verdict,
        mu_at_fold,
        tol_eig: spec.tol_eig,
        mu_before,
        mu_after,
        oracle_index_before: ib,
        oracle_index_after: ia,
        predicted_index_after,
        null_vector_cosine,
    })
}

/// Like [`inspect_fold`] but turns a sign-rule/eigenvalue disagreement into
/// [`Error::FoldClassificationMismatch`].
pub fn validate_fold(branch: &Branch, record: &FoldRecord) -> Result<FoldValidation> {
    let v = inspect_fold(branch, record)?;
    if v.verdict == Verdict::Mismatch {
        return Err(Error::FoldClassificationMismatch {
            xi_star: record.xi_star,
            predicted: v.predicted_index_after.unwrap_or(0),
            oracle: v.oracle_index_after,
        });
    }
    Ok(v)
}
