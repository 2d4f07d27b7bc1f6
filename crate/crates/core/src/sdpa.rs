//! SDPA sparse format (`.dat-s`) export and import, plus solution import.
//!
//! The exported problem is the standard SDPA form
//!
//! ```text
//!   minimize    cᵀx
//!   subject to  X = Σᵢ xᵢ·Fᵢ − F₀,   X ⪰ 0 (block diagonal)
//! ```
//!
//! mapped from an [`SdpProblem`] block `constant + Σᵢ xᵢ·Gᵢ ⪰ 0` as
//! `F₀ = −constant`, `Fᵢ = Gᵢ`. Scalar variables are ordered exactly as
//! declared ([`VarSpace`] flattens symmetric matrix variables by their upper
//! triangle in column-major order), entries cover the upper triangle only,
//! and every float is printed in Rust's shortest round-trip notation, so the
//! export is reproducible bit for bit.
//!
//! The `.dat-s` body cannot carry block senses, variable names, or the
//! objective's constant offset, so the exporter writes them into a single
//! comment line starting with `*J ` (JSON). Import requires that line and
//! reconstructs the original problem exactly:
//!
//! * strict blocks keep their frozen margins (the numeric body holds the
//!   *unshifted* constant — an external solver sees the nonstrict
//!   relaxation, and [`check_solution`](crate::sdp::check_solution) remains
//!   the arbiter for margins);
//! * an equality block is exported as two consecutive cone blocks `±expr`
//!   (tagged in the metadata) and folded back into one on import;
//! * a minimized objective `c₀ + cᵀx` contributes `c` to the objective line
//!   and `c₀` to the metadata.
//!
//! Solutions come back either as a whitespace-separated scalar vector in
//! declaration order (the `xVec` of an SDPA run) or as a JSON map from
//! variable name to a row-major nested array.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::affine::{AffineMatrix, VarKind, VarSpace};
use crate::error::{Error, Result};
use crate::problem::{BlockSense, BuildContext, LmiBlock, SdpProblem};

/// Prefix of the machine-readable metadata comment line.
const META_PREFIX: &str = "*J ";

#[derive(Serialize, Deserialize)]
struct MetaVar {
    name: String,
    kind: VarKind,
}

#[derive(Serialize, Deserialize)]
struct MetaBlock {
    name: String,
    sense: BlockSense,
}

/// Everything the numeric `.dat-s` body cannot express.
#[derive(Serialize, Deserialize)]
struct Meta {
    vars: Vec<MetaVar>,
    blocks: Vec<MetaBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    objective_constant: Option<f64>,
    context: BuildContext,
}

/// Cone blocks actually written to the file: each equality block of the
/// source problem expands into a `+expr` / `−expr` pair.
fn expanded_blocks(problem: &SdpProblem) -> Vec<(&LmiBlock, f64)> {
    let mut out = Vec::new();
    for b in &problem.blocks {
        out.push((b, 1.0));
        if b.sense == BlockSense::Zero {
            out.push((b, -1.0));
        }
    }
    out
}

/// Render a problem in SDPA sparse format.
pub fn export_sdpa(problem: &SdpProblem) -> String {
    let m = problem.vars.total_scalars();
    let cones = expanded_blocks(problem);

    let meta = Meta {
        vars: problem
            .vars
            .decls()
            .iter()
            .map(|d| MetaVar {
                name: d.name.clone(),
                kind: d.kind,
            })
            .collect(),
        blocks: problem
            .blocks
            .iter()
            .map(|b| MetaBlock {
                name: b.name.clone(),
                sense: b.sense,
            })
            .collect(),
        objective_constant: problem
            .objective
            .as_ref()
            .map(|o| o.constant[(0, 0)]),
        context: problem.context.clone(),
    };

    let mut out = String::new();
    out.push_str(&format!(
        "* sdpa sparse export: {m} variables, {} cone blocks\n",
        cones.len()
    ));
    out.push_str(META_PREFIX);
    out.push_str(&serde_json::to_string(&meta).expect("metadata serializes"));
    out.push('\n');
    out.push_str(&format!("{m}\n{}\n", cones.len()));
    let sizes: Vec<String> = cones.iter().map(|(b, _)| b.dim().to_string()).collect();
    out.push_str(&sizes.join(" "));
    out.push('\n');

    let mut c = vec![0.0; m];
    if let Some(obj) = &problem.objective {
        for (&i, coeff) in &obj.terms {
            c[i] = coeff[(0, 0)];
        }
    }
    let cs: Vec<String> = c.iter().map(|v| v.to_string()).collect();
    out.push_str(&cs.join(" "));
    out.push('\n');

    // Entry lines "k b i j v": F_k, cone block b, upper-triangle position
    // (i ≤ j), all 1-based; k = 0 is F₀ = −constant.
    for k in 0..=m {
        for (bi, (block, sign)) in cones.iter().enumerate() {
            let mat: Option<DMatrix<f64>> = if k == 0 {
                Some(&block.expr.constant * -sign)
            } else {
                block.expr.terms.get(&(k - 1)).map(|g| g * *sign)
            };
            let Some(mat) = mat else { continue };
            let d = mat.nrows();
            for j in 0..d {
                for i in 0..=j {
                    let v = mat[(i, j)];
                    if v != 0.0 {
                        out.push_str(&format!("{k} {} {} {} {v}\n", bi + 1, i + 1, j + 1));
                    }
                }
            }
        }
    }
    out
}

/// Accumulated numeric content of one cone block of the file.
struct RawCone {
    dim: usize,
    f0: DMatrix<f64>,
    terms: BTreeMap<usize, DMatrix<f64>>,
}

/// Parse a problem previously written by [`export_sdpa`]. Plain `.dat-s`
/// files without the metadata comment are rejected: the numeric body alone
/// cannot say which blocks are strict or how variables are named.
pub fn import_sdpa(text: &str) -> Result<SdpProblem> {
    let mut meta: Option<Meta> = None;
    let mut tokens: Vec<f64> = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix(META_PREFIX) {
            meta = Some(serde_json::from_str(rest)?);
            continue;
        }
        if trimmed.starts_with('*') || trimmed.starts_with('"') || trimmed.is_empty() {
            continue;
        }
        for tok in trimmed
            .replace(['(', ')', '{', '}', ','], " ")
            .split_whitespace()
        {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::Parse(format!("bad number {tok:?} in sdpa data")))?;
            tokens.push(v);
        }
    }
    let meta = meta.ok_or_else(|| {
        Error::Parse("missing \"*J\" metadata line; only files written by this exporter can be imported".into())
    })?;

    fn take(tokens: &[f64], pos: &mut usize, what: &str) -> Result<f64> {
        let v = tokens
            .get(*pos)
            .copied()
            .ok_or_else(|| Error::Parse(format!("sdpa data ends before {what}")))?;
        *pos += 1;
        Ok(v)
    }
    fn as_count(v: f64, what: &str) -> Result<usize> {
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::Parse(format!(
                "{what} must be a nonnegative integer, got {v}"
            )));
        }
        Ok(v as usize)
    }
    let mut pos = 0usize;

    let m = as_count(take(&tokens, &mut pos, "the variable count")?, "variable count")?;
    let ncones = as_count(take(&tokens, &mut pos, "the block count")?, "block count")?;
    let mut dims = Vec::with_capacity(ncones);
    for _ in 0..ncones {
        let d = take(&tokens, &mut pos, "a block size")?;
        if d < 0.0 {
            return Err(Error::Parse("diagonal (negative-size) blocks are not supported".into()));
        }
        dims.push(as_count(d, "block size")?);
    }
    let mut c = Vec::with_capacity(m);
    for _ in 0..m {
        c.push(take(&tokens, &mut pos, "an objective entry")?);
    }

    let mut cones: Vec<RawCone> = dims
        .iter()
        .map(|&d| RawCone {
            dim: d,
            f0: DMatrix::zeros(d, d),
            terms: BTreeMap::new(),
        })
        .collect();
    if (tokens.len() - pos) % 5 != 0 {
        return Err(Error::Parse("entry lines must hold 5 numbers each".into()));
    }
    while pos < tokens.len() {
        let k = as_count(take(&tokens, &mut pos, "an entry")?, "matrix index")?;
        let b = as_count(take(&tokens, &mut pos, "an entry")?, "block index")?;
        let i = as_count(take(&tokens, &mut pos, "an entry")?, "row index")?;
        let j = as_count(take(&tokens, &mut pos, "an entry")?, "column index")?;
        let v = take(&tokens, &mut pos, "an entry value")?;
        if k > m {
            return Err(Error::Parse(format!("matrix index {k} exceeds variable count {m}")));
        }
        if b == 0 || b > ncones {
            return Err(Error::Parse(format!("block index {b} out of range 1..={ncones}")));
        }
        let cone = &mut cones[b - 1];
        if i == 0 || j == 0 || i > cone.dim || j > cone.dim || i > j {
            return Err(Error::Parse(format!(
                "entry position ({i},{j}) invalid for an upper-triangle {d}x{d} block",
                d = cone.dim
            )));
        }
        let target = if k == 0 {
            &mut cone.f0
        } else {
            cone.terms
                .entry(k - 1)
                .or_insert_with(|| DMatrix::zeros(cone.dim, cone.dim))
        };
        target[(i - 1, j - 1)] = v;
        target[(j - 1, i - 1)] = v;
    }

    // Rebuild the declared variables; the flat layout must match the file.
    let mut vars = VarSpace::new();
    for v in &meta.vars {
        vars.declare(&v.name, v.kind);
    }
    if vars.total_scalars() != m {
        return Err(Error::Parse(format!(
            "metadata declares {} scalars but the file holds {m}",
            vars.total_scalars()
        )));
    }
    let expected_cones: usize = meta
        .blocks
        .iter()
        .map(|b| if b.sense == BlockSense::Zero { 2 } else { 1 })
        .sum();
    if expected_cones != ncones {
        return Err(Error::Parse(format!(
            "metadata expands to {expected_cones} cone blocks but the file holds {ncones}"
        )));
    }

    let mut blocks = Vec::with_capacity(meta.blocks.len());
    let mut cone_iter = cones.into_iter();
    for mb in &meta.blocks {
        let plus = cone_iter.next().expect("counted above");
        let expr = AffineMatrix {
            constant: -&plus.f0,
            terms: plus.terms.clone(),
        };
        if mb.sense == BlockSense::Zero {
            let minus = cone_iter.next().expect("counted above");
            let negated = minus.f0 == plus.f0.map(|v| -v)
                && minus.terms.len() == plus.terms.len()
                && minus
                    .terms
                    .iter()
                    .all(|(k, g)| plus.terms.get(k).is_some_and(|p| *g == p.map(|v| -v)));
            if !negated {
                return Err(Error::Parse(format!(
                    "equality block {:?} is not followed by its negation",
                    mb.name
                )));
            }
        }
        blocks.push(LmiBlock {
            name: mb.name.clone(),
            sense: mb.sense,
            expr,
        });
    }

    let objective = match meta.objective_constant {
        Some(c0) => {
            let mut terms = BTreeMap::new();
            for (i, &ci) in c.iter().enumerate() {
                if ci != 0.0 {
                    terms.insert(i, DMatrix::from_element(1, 1, ci));
                }
            }
            Some(AffineMatrix {
                constant: DMatrix::from_element(1, 1, c0),
                terms,
            })
        }
        None => {
            if c.iter().any(|&v| v != 0.0) {
                return Err(Error::Parse(
                    "objective entries present but the metadata declares no objective".into(),
                ));
            }
            None
        }
    };

    let problem = SdpProblem {
        vars,
        blocks,
        objective,
        context: meta.context,
    };
    problem.validate()?;
    Ok(problem)
}

/// Render a scalar solution vector, one value per line in declaration order.
pub fn export_solution_vector(x: &[f64]) -> String {
    let mut out = String::new();
    for v in x {
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

/// Parse a whitespace-separated scalar vector (an SDPA `xVec`) back into
/// named matrices using the problem's variable layout.
pub fn import_solution_vector(
    text: &str,
    vars: &VarSpace,
) -> Result<BTreeMap<String, DMatrix<f64>>> {
    let mut x = Vec::new();
    for tok in text
        .replace(['(', ')', '{', '}', ','], " ")
        .split_whitespace()
    {
        let v: f64 = tok
            .parse()
            .map_err(|_| Error::Parse(format!("bad number {tok:?} in solution vector")))?;
        x.push(v);
    }
    if x.len() != vars.total_scalars() {
        return Err(Error::DimensionMismatch(format!(
            "solution vector holds {} scalars, problem declares {}",
            x.len(),
            vars.total_scalars()
        )));
    }
    Ok(vars.extract_all(&x))
}

/// Parse a JSON map from variable name to row-major nested array.
pub fn import_solution_json(text: &str) -> Result<BTreeMap<String, DMatrix<f64>>> {
    let raw: BTreeMap<String, Vec<Vec<f64>>> = serde_json::from_str(text)?;
    raw.into_iter()
        .map(|(k, rows)| {
            crate::jsonmat::from_rows(&rows)
                .map(|m| (k, m))
                .map_err(Error::Parse)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{add_performance, build_dynamic};
    use crate::multiplier::{make_basis_filter, FilterFamily, MultiplierRecipe, TestKind};
    use crate::problem::{PerfChannel, Plant};
    use crate::valueset::ValueSet;
    use crate::StateSpace;

    fn tiny_problem() -> SdpProblem {
        let set = ValueSet::repeated_quadratic(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            1,
            false,
        )
        .unwrap();
        let recipe = MultiplierRecipe::new(TestKind::StaticRepeated, None, set).unwrap();
        let plant = Plant::without_perf(
            StateSpace::new(
                DMatrix::from_row_slice(1, 1, &[-1.0]),
                DMatrix::from_row_slice(1, 1, &[1.0]),
                DMatrix::from_row_slice(1, 1, &[1.0]),
                DMatrix::from_row_slice(1, 1, &[0.0]),
            )
            .unwrap(),
        );
        let mut vars = VarSpace::new();
        let q = vars.declare("q", VarKind::Scalar);
        let qe = vars.expr(q);
        // q ≥ 1 encoded as q − 1 ⪰ 0, minimize q.
        let mut shifted = qe.clone();
        shifted.constant[(0, 0)] = -1.0;
        SdpProblem {
            vars,
            blocks: vec![LmiBlock::psd("bound", shifted)],
            objective: Some(qe),
            context: crate::problem::BuildContext {
                recipe,
                plant,
                notes: vec![],
            },
        }
    }

    fn dynamic_perf_problem() -> SdpProblem {
        let set = ValueSet::repeated_quadratic(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            1,
            false,
        )
        .unwrap();
        let sys = StateSpace::new(
            DMatrix::from_row_slice(1, 1, &[-1.0]),
            DMatrix::from_row_slice(1, 1, &[1.0]),
            DMatrix::from_row_slice(1, 1, &[0.4]),
            DMatrix::from_row_slice(1, 1, &[0.0]),
        )
        .unwrap();
        let perf = PerfChannel {
            b2: DMatrix::from_row_slice(1, 1, &[1.0]),
            c2: DMatrix::from_row_slice(1, 1, &[1.0]),
            d12: DMatrix::zeros(1, 1),
            d21: DMatrix::zeros(1, 1),
            d22: DMatrix::zeros(1, 1),
        };
        let plant = Plant::new(sys, Some(perf)).unwrap();
        let filter = make_basis_filter(2.0, 1, 1, FilterFamily::Repeated).unwrap();
        let recipe = MultiplierRecipe::new(TestKind::DynRepeated, Some(filter), set).unwrap();
        add_performance(build_dynamic(&plant, &recipe).unwrap()).unwrap()
    }

    /// Exact JSON equality is the strongest structural-identity check the
    /// problem type supports (it covers vars, blocks, objective, context).
    fn assert_same_problem(a: &SdpProblem, b: &SdpProblem) {
        assert_eq!(
            serde_json::to_value(a).unwrap(),
            serde_json::to_value(b).unwrap()
        );
    }

    #[test]
    fn tiny_numeric_body_is_stable() {
        let text = export_sdpa(&tiny_problem());
        let body: Vec<&str> = text
            .lines()
            .filter(|l| !l.starts_with('*'))
            .collect();
        assert_eq!(body, vec!["1", "1", "1", "1", "0 1 1 1 1", "1 1 1 1 1"]);
        // Determinism: a second export is byte-identical.
        assert_eq!(text, export_sdpa(&tiny_problem()));
    }

    #[test]
    fn tiny_roundtrip_and_solve_agree() {
        let p = tiny_problem();
        let text = export_sdpa(&p);
        let q = import_sdpa(&text).unwrap();
        assert_same_problem(&p, &q);
        let sol = crate::sdp::solve(&q, &crate::sdp::SolverOptions::default()).unwrap();
        assert_eq!(sol.status, crate::sdp::SolveStatus::Feasible);
        assert!((sol.objective_value.unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn dynamic_problem_roundtrips_exactly() {
        let p = dynamic_perf_problem();
        let text = export_sdpa(&p);
        let q = import_sdpa(&text).unwrap();
        assert_same_problem(&p, &q);
        // Same nonzero count both ways.
        let nnz = |t: &str| {
            t.lines()
                .filter(|l| !l.starts_with('*'))
                .skip(4)
                .count()
        };
        assert_eq!(nnz(&text), nnz(&export_sdpa(&q)));
    }

    #[test]
    fn equality_blocks_fold_back() {
        let mut p = tiny_problem();
        let mut vars = VarSpace::new();
        let q = vars.declare("q", VarKind::Scalar);
        let qe = vars.expr(q);
        let mut shifted = qe.clone();
        shifted.constant[(0, 0)] = -2.0;
        p.vars = vars;
        p.objective = None;
        p.blocks = vec![
            LmiBlock::psd("bound", qe),
            LmiBlock::zero("pin", shifted),
        ];
        let text = export_sdpa(&p);
        // The equality expands to a ± pair on disk…
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('*')).collect();
        assert_eq!(body[1], "3");
        // …and folds back into a single zero-sense block.
        let q2 = import_sdpa(&text).unwrap();
        assert_same_problem(&p, &q2);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        let p = tiny_problem();
        let text = export_sdpa(&p);

        let without_meta: String = text
            .lines()
            .filter(|l| !l.starts_with(META_PREFIX.trim_end()))
            .collect::<Vec<_>>()
            .join("\n");
        assert!(matches!(
            import_sdpa(&without_meta),
            Err(Error::Parse(_))
        ));

        let truncated: String = text
            .lines()
            .take(text.lines().count() - 1)
            .collect::<Vec<_>>()
            .join("\n")
            + "\n2 1 1";
        assert!(import_sdpa(&truncated).is_err());

        let garbled = text.replace("0 1 1 1 1", "0 1 7 7 1");
        assert!(import_sdpa(&garbled).is_err());
    }

    #[test]
    fn solution_vector_and_json_roundtrip() {
        let p = dynamic_perf_problem();
        let sol = crate::sdp::solve(&p, &crate::sdp::SolverOptions::default()).unwrap();
        assert_eq!(sol.status, crate::sdp::SolveStatus::Feasible);

        let text = export_solution_vector(&sol.x);
        let map = import_solution_vector(&text, &p.vars).unwrap();
        assert_eq!(map, sol.variables);

        let json = serde_json::to_string(
            &sol.variables
                .iter()
                .map(|(k, v)| (k.clone(), crate::jsonmat::to_rows(v)))
                .collect::<BTreeMap<String, Vec<Vec<f64>>>>(),
        )
        .unwrap();
        let map2 = import_solution_json(&json).unwrap();
        assert_eq!(map2, sol.variables);

        // Independent residual check accepts the imported assignment.
        let report = crate::sdp::check_solution(&p, &map).unwrap();
        assert!(report.iter().all(|(_, slack)| *slack >= -1e-9));
    }
}
