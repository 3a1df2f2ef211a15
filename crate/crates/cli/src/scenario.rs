//! Scenario schema and solution construction.
//!
//! Scenarios are JSON documents; complex numbers are `[re, im]` pairs and
//! matrices are row-major nested arrays of pairs.  Schema violations and
//! invalid constructions map to exit code 2 with a field diagnostic.

use akns_core::algebra::{ComplexMatrix, DiagonalGenerator, C64};
use akns_core::dressing::{DressedSolution, Involution, SimpleFactor};
use akns_core::frames::FlowSpec;
use akns_core::hierarchy::GridSpec;
use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub n: usize,
    #[serde(rename = "aDiag")]
    pub a_diag: Vec<f64>,
    #[serde(rename = "bDiag")]
    pub b_diag: Vec<f64>,
    #[serde(rename = "flowDegree")]
    pub flow_degree: i32,
    #[serde(default)]
    pub factors: Vec<FactorSpec>,
    #[serde(default = "default_involution")]
    pub involution: String,
    pub grid: GridJson,
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(rename = "lambdaSamples", default)]
    pub lambda_samples: Vec<[f64; 2]>,
    /// Parameters for the `backlund-sg` subcommand.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backlund: Option<BacklundParams>,
}

fn default_involution() -> String {
    "none".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub z: [f64; 2],
    #[serde(rename = "basisColumns")]
    pub basis_columns: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridJson {
    /// `[x0, x1, nx]`
    pub x: [f64; 3],
    /// `[t0, t1, nt]`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacklundParams {
    pub s: f64,
    pub c0: f64,
}

pub fn load(path: &std::path::Path) -> anyhow::Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading scenario {}", path.display()))?;
    let sc: Scenario = serde_json::from_str(&text)
        .with_context(|| format!("parsing scenario {}", path.display()))?;
    validate(&sc)?;
    Ok(sc)
}

fn validate(sc: &Scenario) -> anyhow::Result<()> {
    if sc.a_diag.len() != sc.n || sc.b_diag.len() != sc.n {
        bail!("aDiag/bDiag must have exactly n = {} entries", sc.n);
    }
    for (i, f) in sc.factors.iter().enumerate() {
        if f.z[1] == 0.0 {
            bail!("factors[{i}].z: Im z must be nonzero");
        }
        if f.basis_columns.len() != sc.n {
            bail!("factors[{i}].basisColumns must have n = {} rows", sc.n);
        }
        let k = f.basis_columns[0].len();
        if k == 0 || f.basis_columns.iter().any(|row| row.len() != k) {
            bail!("factors[{i}].basisColumns must be rectangular and nonempty");
        }
    }
    match sc.involution.as_str() {
        "none" | "conjugation" => {}
        other => bail!("involution must be \"none\" or \"conjugation\", got {other:?}"),
    }
    Ok(())
}

pub fn grid_of(sc: &Scenario) -> anyhow::Result<GridSpec> {
    let [x0, x1, nxf] = sc.grid.x;
    let t_axis = sc.grid.t.map(|[t0, t1, ntf]| (t0, t1, ntf as usize));
    GridSpec::new(x0, x1, nxf as usize, t_axis).map_err(|e| anyhow::anyhow!("grid: {e}"))
}

pub fn build_solution(sc: &Scenario) -> anyhow::Result<DressedSolution> {
    let a = DiagonalGenerator::new(sc.a_diag.clone())?;
    let b = DiagonalGenerator::new(sc.b_diag.clone())?;
    let spec = FlowSpec::new(a, b, sc.flow_degree)?;
    let involution = match sc.involution.as_str() {
        "conjugation" => Involution::Conjugation,
        _ => Involution::None,
    };
    let mut sol = DressedSolution::vacuum_with_involution(spec, involution);
    for f in &sc.factors {
        let z = C64::new(f.z[0], f.z[1]);
        let k = f.basis_columns[0].len();
        let basis = ComplexMatrix::from_fn(sc.n, k, |r, c| {
            let p = f.basis_columns[r][c];
            C64::new(p[0], p[1])
        });
        sol = sol.dress(SimpleFactor::new(z, basis)?)?;
    }
    if involution == Involution::Conjugation {
        sol.check_conjugation_pairs(false)?;
    }
    Ok(sol)
}

pub fn lambda_samples(sc: &Scenario) -> Vec<C64> {
    sc.lambda_samples
        .iter()
        .map(|p| C64::new(p[0], p[1]))
        .collect()
}
