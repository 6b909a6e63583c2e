//! On-disk instance files and the built-in fixtures.
//!
//! Matrices are stored in their serialised form (`[[re, im], ...]` rows) so that
//! `gen → parse → gen` is byte-for-byte stable.

use serde::{Deserialize, Serialize};

use crate::algebra::{
    alpha_from_expectation, inner_matrix, permutation_matrix, verify_automorphism, FiniteCStarAlgebra, StarAlgebra,
    StarInvolutiveAutomorphism,
};
use crate::covariant::{verify_rep, FiniteGroup, PseudoUnitaryRep};
use crate::error::{Error, Result};
use crate::hmodule::{infer_beta, FreeHilbertModule, ModuleAction};
use crate::krein::{verify_fundamental_symmetry, KreinSpace};
use crate::maps::{AlphaCpMap, PhiMap};
use crate::numkit::json::{from_rows, to_rows, vector_from_pairs, Rows};
use crate::numkit::{identity, CMatrix, CVector, TolerancePolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum AlphaSpec {
    Identity,
    Permutation { perm: Vec<usize> },
    Inner { unitaries: Vec<Rows> },
    Matrix { matrix: Rows },
    Expectation {
        #[serde(rename = "P")]
        p: Rows,
    },
}

impl AlphaSpec {
    /// Coordinate matrix on `algebra`, not yet verified.
    pub fn matrix(&self, algebra: &FiniteCStarAlgebra, tol: &TolerancePolicy) -> Result<CMatrix> {
        let n = algebra.dim();
        let m = match self {
            AlphaSpec::Identity => identity(n),
            AlphaSpec::Permutation { perm } => permutation_matrix(perm)?,
            AlphaSpec::Inner { unitaries } => {
                let us = unitaries.iter().map(from_rows).collect::<Result<Vec<_>>>()?;
                inner_matrix(algebra, &us)?
            }
            AlphaSpec::Matrix { matrix } => from_rows(matrix)?,
            AlphaSpec::Expectation { p } => return Ok(alpha_from_expectation(&from_rows(p)?, algebra, tol)?.matrix),
        };
        if m.shape() != (n, n) {
            return Err(Error::Dimension(format!("alpha must be {n}x{n}")));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSpec {
    pub blocks: Vec<usize>,
    pub alpha: AlphaSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub dim: usize,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub j: Option<Rows>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleSpec {
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub values: Vec<Rows>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub table: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_cutoff: Option<f64>,
}

impl ToleranceSpec {
    pub fn apply(&self, mut base: TolerancePolicy) -> TolerancePolicy {
        if let Some(v) = self.abs_tol {
            base.abs_tol = v;
        }
        if let Some(v) = self.rel_tol {
            base.rel_tol = v;
        }
        if let Some(v) = self.rank_cutoff {
            base.rank_cutoff = v;
        }
        base
    }
}

fn is_zero(x: &u64) -> bool {
    *x == 0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub algebra: AlgebraSpec,
    pub h1: SpaceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h2: Option<SpaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub module: Option<ModuleSpec>,
    pub phi: TableSpec,
    #[serde(rename = "Phi", default, skip_serializing_if = "Option::is_none")]
    pub big_phi: Option<TableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<Rows>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<AlphaSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<Rows>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uprime: Option<Vec<Rows>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<ToleranceSpec>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub seed: u64,
}

/// Group data of a covariant instance.
#[derive(Debug, Clone)]
pub struct CovariantData {
    pub action: ModuleAction,
    pub u: PseudoUnitaryRep,
    pub u_prime: PseudoUnitaryRep,
}

/// An instance with every object constructed and the structural axioms verified.
#[derive(Debug, Clone)]
pub struct Instance {
    pub big_phi: PhiMap,
    pub samples: Vec<CVector>,
    pub covariant: Option<CovariantData>,
    pub seed: u64,
}

impl Instance {
    pub fn phi(&self) -> &AlphaCpMap {
        &self.big_phi.phi
    }

    pub fn algebra(&self) -> &FiniteCStarAlgebra {
        &self.big_phi.phi.algebra
    }
}

fn matrices(rows: &[Rows]) -> Result<Vec<CMatrix>> {
    rows.iter().map(from_rows).collect()
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    /// Canonical serialisation: pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serialises");
        s.push('\n');
        s
    }

    /// Dimension bookkeeping that needs no numerics; collects every problem found.
    pub fn dimension_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let blocks = &self.algebra.blocks;
        let n: usize = blocks.iter().map(|b| b * b).sum();
        let d1 = self.h1.dim;
        let shape = |m: &Rows| (m.len(), m.first().map_or(0, |r| r.len()));
        if let Some(j) = &self.h1.j {
            if shape(j) != (d1, d1) {
                errs.push(format!("h1.J must be {d1}x{d1}"));
            }
        }
        if self.phi.values.len() != n {
            errs.push(format!("phi has {} values, algebra dimension is {n}", self.phi.values.len()));
        }
        for (i, m) in self.phi.values.iter().enumerate() {
            if shape(m) != (d1, d1) && d1 > 0 {
                errs.push(format!("phi value {i} must be {d1}x{d1}"));
            }
        }
        let k = self.module.as_ref().map_or(0, |m| m.rank);
        let d2 = self.h2.as_ref().map_or(0, |h| h.dim);
        if let Some(h2) = &self.h2 {
            if h2.j.is_some() {
                errs.push("h2 is a Hilbert space and takes no J".into());
            }
        }
        match &self.big_phi {
            Some(t) => {
                if t.values.len() != k * n {
                    errs.push(format!("Phi has {} values, module dimension is {}", t.values.len(), k * n));
                }
                for (m, v) in t.values.iter().enumerate() {
                    if shape(v) != (d2, d1) && d2 * d1 > 0 {
                        errs.push(format!("Phi value {m} must be {d2}x{d1}"));
                    }
                }
            }
            None if k > 0 => errs.push("module rank > 0 requires a Phi table".into()),
            None => {}
        }
        for (i, s) in self.samples.iter().flatten().enumerate() {
            if s.len() != n {
                errs.push(format!("sample {i} has {} coordinates, expected {n}", s.len()));
            }
        }
        if let Some(g) = &self.group {
            let order = g.table.len();
            for (name, len) in [
                ("eta", self.eta.as_ref().map(Vec::len)),
                ("beta", self.beta.as_ref().map(Vec::len)),
                ("u", self.u.as_ref().map(Vec::len)),
                ("uprime", self.uprime.as_ref().map(Vec::len)),
            ] {
                if let Some(l) = len {
                    if l != order {
                        errs.push(format!("{name} has {l} entries for a group of order {order}"));
                    }
                }
            }
        } else if self.eta.is_some() || self.beta.is_some() || self.u.is_some() || self.uprime.is_some() {
            errs.push("group data given without a group table".into());
        }
        errs
    }

    /// Tolerance from the file layered over `base`.
    pub fn tolerance(&self, base: TolerancePolicy) -> TolerancePolicy {
        self.tolerance.unwrap_or_default().apply(base)
    }

    /// Build every object. Structural failures (α not an involutive automorphism,
    /// J not a symmetry, invalid group data) are returned as errors.
    pub fn build(&self, tol: &TolerancePolicy) -> Result<Instance> {
        let errs = self.dimension_errors();
        if !errs.is_empty() {
            return Err(Error::Dimension(errs.join("; ")));
        }
        let algebra = FiniteCStarAlgebra::new(self.algebra.blocks.clone())?;
        let alpha = self.alpha(&algebra, tol)?;
        let h1 = match &self.h1.j {
            Some(j) => verify_fundamental_symmetry(&from_rows(j)?, tol)?,
            None => KreinSpace::hilbert(self.h1.dim),
        };
        let values = if self.h1.dim == 0 {
            vec![CMatrix::zeros(0, 0); algebra.dim()]
        } else {
            matrices(&self.phi.values)?
        };
        let phi = AlphaCpMap::new(algebra.clone(), alpha, h1, values)?;
        let k = self.module.as_ref().map_or(0, |m| m.rank);
        let d2 = self.h2.as_ref().map_or(0, |h| h.dim);
        let module = FreeHilbertModule::new(algebra.clone(), k);
        let big_values = match &self.big_phi {
            Some(t) if d2 * phi.d() > 0 => matrices(&t.values)?,
            Some(t) => vec![CMatrix::zeros(d2, phi.d()); t.values.len()],
            None => vec![],
        };
        let big_phi = PhiMap::new(phi, module.clone(), d2, big_values)?;
        let samples = self
            .samples
            .iter()
            .flatten()
            .map(|s| vector_from_pairs(s))
            .collect::<Result<Vec<_>>>()?;
        let covariant = match &self.group {
            Some(g) => Some(self.covariant_data(g, module, big_phi.phi.h1.clone(), d2, tol)?),
            None => None,
        };
        Ok(Instance { big_phi, samples, covariant, seed: self.seed })
    }

    fn alpha(&self, algebra: &FiniteCStarAlgebra, tol: &TolerancePolicy) -> Result<StarInvolutiveAutomorphism> {
        let m = self.algebra.alpha.matrix(algebra, tol)?;
        verify_automorphism(&m, algebra, tol)
    }

    fn covariant_data(
        &self,
        g: &GroupSpec,
        module: FreeHilbertModule,
        h1: KreinSpace,
        d2: usize,
        tol: &TolerancePolicy,
    ) -> Result<CovariantData> {
        let group = FiniteGroup::from_table(g.table.clone())?;
        let algebra = module.algebra().clone();
        let beta = match &self.beta {
            Some(specs) => Some(specs.iter().map(|s| s.matrix(&algebra, tol)).collect::<Result<Vec<_>>>()?),
            None => None,
        };
        let action = match (&self.eta, beta) {
            (Some(eta), beta) => {
                let eta = matrices(eta)?;
                if eta.iter().any(|m| m.shape() != (module.dim(), module.dim())) {
                    return Err(Error::Dimension(format!("eta matrices must be {0}x{0}", module.dim())));
                }
                let inferred = infer_beta(&module, &eta, tol)?;
                if let Some(beta) = beta {
                    if module.rank() > 0 {
                        let r = beta
                            .iter()
                            .zip(&inferred)
                            .map(|(b, i)| crate::numkit::op_norm(&(b - &i.matrix)))
                            .fold(0.0, f64::max);
                        if r > tol.bound(1.0) {
                            return Err(Error::NotDynamicalSystem {
                                identity: "β_t(a) = ⟨η_t(1δ₀), η_t(aδ₀)⟩".into(),
                                element: 0,
                                residual: r,
                            });
                        }
                    }
                }
                ModuleAction { group: group.clone(), module, eta, beta: inferred }
            }
            (None, Some(beta)) => ModuleAction::from_beta(group.clone(), module, beta, None, tol)?,
            (None, None) => ModuleAction::trivial(group.clone(), module),
        };
        crate::hmodule::verify_action_compatibility(&action, tol)?;
        let u = match &self.u {
            Some(u) => matrices(u)?,
            None => vec![identity(h1.dim()); group.order()],
        };
        let up = match &self.uprime {
            Some(u) => matrices(u)?,
            None => vec![identity(d2); group.order()],
        };
        let u = verify_rep(u, &group, &h1, false, tol)?;
        let u_prime = verify_rep(up, &group, &KreinSpace::hilbert(d2), true, tol)?;
        Ok(CovariantData { action, u, u_prime })
    }
}

/// Shipped fixtures accepted by [`preset`].
pub const PRESETS: [&str; 5] = ["fix-a", "fix-b", "fix-c", "fix-d", "fix-e"];

/// Further covariant examples accepted by [`preset`]: the flip on `ℂ³` under `S₃`
/// acting through the sign, and the identity channel on `M₂` with `ℤ₂` acting by the swap.
/// `m3-cyclic` is the identity channel on `M₃` with `ℤ₃` acting by the cyclic shift.
pub const EXTRA_PRESETS: [&str; 3] = ["s3-flip", "m2-swap", "m3-cyclic"];

fn real(rows: &[&[f64]]) -> Rows {
    rows.iter().map(|r| r.iter().map(|&x| [x, 0.0]).collect()).collect()
}

fn eye(n: usize) -> Rows {
    to_rows(&identity(n))
}

fn unit_matrix(n: usize, i: usize, j: usize) -> Rows {
    let mut m = CMatrix::zeros(n, n);
    m[(i, j)] = crate::numkit::ONE;
    to_rows(&m)
}

fn base(blocks: Vec<usize>, alpha: AlphaSpec, d1: usize, phi: Vec<Rows>) -> InstanceFile {
    InstanceFile {
        algebra: AlgebraSpec { blocks, alpha },
        h1: SpaceSpec { dim: d1, j: None },
        h2: None,
        module: None,
        phi: TableSpec { values: phi },
        big_phi: None,
        samples: None,
        group: None,
        eta: None,
        beta: None,
        u: None,
        uprime: None,
        tolerance: None,
        seed: 0,
    }
}

/// The shipped fixtures.
pub fn preset(name: &str) -> Result<InstanceFile> {
    let flip = || AlphaSpec::Permutation { perm: vec![2, 1, 0] };
    let fix_c = || {
        let mut f = base(vec![1, 1, 1], flip(), 1, vec![real(&[&[0.0]]), real(&[&[1.0]]), real(&[&[0.0]])]);
        f.h2 = Some(SpaceSpec { dim: 2, j: None });
        f.module = Some(ModuleSpec { rank: 1 });
        f.big_phi = Some(TableSpec {
            values: vec![real(&[&[0.0], &[0.0]]), real(&[&[1.0], &[0.0]]), real(&[&[0.0], &[0.0]])],
        });
        f.samples = Some(vec![vec![[2.0, 0.0], [3.0, 0.0], [5.0, 0.0]]]);
        f
    };
    Ok(match name {
        "fix-a" => {
            let mut f = base(vec![1], AlphaSpec::Identity, 1, vec![real(&[&[1.0]])]);
            f.h2 = Some(SpaceSpec { dim: 1, j: None });
            f.module = Some(ModuleSpec { rank: 1 });
            f.big_phi = Some(TableSpec { values: vec![real(&[&[1.0]])] });
            f
        }
        "fix-b" => {
            let units: Vec<Rows> = (0..4).map(|i| unit_matrix(2, i / 2, i % 2)).collect();
            let mut f = base(vec![2], AlphaSpec::Identity, 2, units.clone());
            f.h2 = Some(SpaceSpec { dim: 2, j: None });
            f.module = Some(ModuleSpec { rank: 1 });
            f.big_phi = Some(TableSpec { values: units });
            f
        }
        "fix-c" => fix_c(),
        "fix-d" => base(
            vec![1, 1],
            AlphaSpec::Permutation { perm: vec![1, 0] },
            1,
            vec![real(&[&[0.5]]), real(&[&[0.5]])],
        ),
        "fix-e" => {
            let mut f = fix_c();
            f.group = Some(GroupSpec { table: vec![vec![0, 1], vec![1, 0]] });
            f.beta = Some(vec![AlphaSpec::Identity, flip()]);
            f.u = Some(vec![eye(1), eye(1)]);
            f.uprime = Some(vec![eye(2), eye(2)]);
            f
        }
        "s3-flip" => {
            let mut f = fix_c();
            let group = FiniteGroup::symmetric3();
            let signs: Vec<f64> = group.elements().map(FiniteGroup::s3_sign).collect();
            let flip_m = permutation_matrix(&[2, 1, 0])?;
            f.group = Some(GroupSpec { table: group.table().to_vec() });
            f.beta = Some(signs.iter().map(|&s| if s > 0.0 { AlphaSpec::Identity } else { flip() }).collect());
            f.eta = Some(
                signs
                    .iter()
                    .map(|&s| if s > 0.0 { eye(3) } else { to_rows(&(&flip_m * crate::numkit::re(-1.0))) })
                    .collect(),
            );
            f.u = Some(signs.iter().map(|&s| real(&[&[s]])).collect());
            f.uprime = Some(vec![eye(2); 6]);
            f
        }
        "m2-swap" => {
            let mut f = preset("fix-b")?;
            let swap = real(&[&[0.0, 1.0], &[1.0, 0.0]]);
            f.group = Some(GroupSpec { table: vec![vec![0, 1], vec![1, 0]] });
            f.beta = Some(vec![AlphaSpec::Identity, AlphaSpec::Inner { unitaries: vec![swap.clone()] }]);
            f.u = Some(vec![eye(2), swap.clone()]);
            f.uprime = Some(vec![eye(2), swap]);
            f
        }
        "m3-cyclic" => {
            let units: Vec<Rows> = (0..9).map(|i| unit_matrix(3, i / 3, i % 3)).collect();
            let mut f = base(vec![3], AlphaSpec::Identity, 3, units.clone());
            f.h2 = Some(SpaceSpec { dim: 3, j: None });
            f.module = Some(ModuleSpec { rank: 1 });
            f.big_phi = Some(TableSpec { values: units });
            let shift = permutation_matrix(&[1, 2, 0])?;
            let powers: Vec<CMatrix> = vec![identity(3), shift.clone(), &shift * &shift];
            f.group = Some(GroupSpec { table: FiniteGroup::cyclic(3).table().to_vec() });
            f.beta = Some(powers.iter().map(|p| AlphaSpec::Inner { unitaries: vec![to_rows(p)] }).collect());
            f.u = Some(powers.iter().map(to_rows).collect());
            f.uprime = Some(powers.iter().map(to_rows).collect());
            f
        }
        other => {
            return Err(Error::Schema(format!(
                "unknown preset {other:?}; expected one of {PRESETS:?} or {EXTRA_PRESETS:?}"
            )))
        }
    })
}
