//! Refinement studies on structured meshes of the unit square.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use super::{builtin_case, compute_errors, interpolation_errors, ErrorReport, ManufacturedCase};
use crate::element::{ElementConfig, Stabilization, VertexScaling};
use crate::error::VemError;
use crate::mesh::{generate_mesh, MeshKind, DEFAULT_SEED};
use crate::system::{default_quad_degree, BoundaryData, Discretization, SolveReport};

/// What is measured at each level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyMode {
    /// Solve the discrete problem and measure `u - Π u_h`.
    #[default]
    Solve,
    /// Measure `u - Π I_h u` for the interpolant `I_h u`.
    Interpolate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyOptions {
    pub kind: MeshKind,
    /// Subdivisions per side at each level.
    pub levels: Vec<usize>,
    pub seed: u64,
    pub mode: StudyMode,
}

impl StudyOptions {
    pub fn new(kind: MeshKind, levels: &[usize]) -> Self {
        Self {
            kind,
            levels: levels.to_vec(),
            seed: DEFAULT_SEED,
            mode: StudyMode::Solve,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub dofs: usize,
    pub errors: Vec<f64>,
    /// Rate against the previous row; `None` on the first row.
    pub slopes: Vec<Option<f64>>,
    pub solve: Option<SolveReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub case: String,
    pub config: ElementConfig,
    pub options: StudyOptions,
    pub rows: Vec<ConvergenceRow>,
}

/// A study that stopped early; `partial` holds the completed levels.
#[derive(Debug)]
pub struct StudyError {
    pub partial: ConvergenceTable,
    pub level: Option<usize>,
    pub source: VemError,
}

impl std::fmt::Display for StudyError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.level {
            Some(n) => write!(f, "level n={n}: {}", self.source),
            None => write!(f, "{}", self.source),
        }
    }
}

impl std::error::Error for StudyError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

/// Least-squares slope of `ln e` against `ln h`.
pub fn fit_slope(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

impl ConvergenceTable {
    /// Number of error columns, `p_eff + 1`.
    pub fn orders(&self) -> usize {
        self.config.p_eff() + 1
    }

    /// Fitted slope of each `e_s` over the last three rows (`NaN` with fewer
    /// rows or vanishing errors).
    pub fn fitted_slopes(&self) -> Vec<f64> {
        let k = self.rows.len();
        if k < 3 {
            return vec![f64::NAN; self.orders()];
        }
        let last = &self.rows[k - 3..];
        let h: Vec<f64> = last.iter().map(|r| r.h).collect();
        (0..self.orders())
            .map(|s| {
                let e: Vec<f64> = last.iter().map(|r| r.errors[s]).collect();
                if e.iter().all(|v| *v > 0.0) {
                    fit_slope(&h, &e)
                } else {
                    f64::NAN
                }
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let m = self.orders();
        let mut out = String::from("h,dofs");
        for s in 0..m {
            write!(out, ",e{s}").unwrap();
        }
        for s in 0..m {
            write!(out, ",slope{s}").unwrap();
        }
        out.push('\n');
        for row in &self.rows {
            write!(out, "{:e},{}", row.h, row.dofs).unwrap();
            for e in &row.errors {
                write!(out, ",{e:e}").unwrap();
            }
            for s in &row.slopes {
                match s {
                    Some(v) => write!(out, ",{v:e}").unwrap(),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "case": self.case,
            "config": self.config,
            "options": self.options,
            "rows": self.rows,
            "fitted_slopes": self.fitted_slopes(),
        })
    }

    fn push(&mut self, n: usize, report: ErrorReport, solve: Option<SolveReport>) {
        let slopes = match self.rows.last() {
            Some(prev) => report
                .errors
                .iter()
                .zip(&prev.errors)
                .map(|(e, pe)| {
                    if *e > 0.0 && *pe > 0.0 {
                        Some((e / pe).ln() / (report.h / prev.h).ln())
                    } else {
                        None
                    }
                })
                .collect(),
            None => vec![None; report.errors.len()],
        };
        self.rows.push(ConvergenceRow {
            n,
            h: report.h,
            dofs: report.dofs,
            errors: report.errors,
            slopes,
            solve,
        });
    }
}

fn level(case: &ManufacturedCase, options: &StudyOptions, n: usize) -> crate::Result<(ErrorReport, Option<SolveReport>)> {
    let mesh = generate_mesh(options.kind, n, case.domain, options.seed)?;
    let disc = Discretization::new(mesh, &case.config)?;
    match options.mode {
        StudyMode::Solve => {
            let quad = default_quad_degree(&case.config);
            let sol = disc.solve(case.forcing.as_ref(), BoundaryData::Homogeneous, quad)?;
            let report = compute_errors(&disc, case, &sol.values)?;
            Ok((report, Some(sol.report)))
        }
        StudyMode::Interpolate => Ok((interpolation_errors(&disc, case)?, None)),
    }
}

/// Runs the levels in order and tabulates `e_0..e_{p_eff}`.
pub fn run_convergence(case: &ManufacturedCase, options: &StudyOptions) -> Result<ConvergenceTable, Box<StudyError>> {
    let mut table = ConvergenceTable {
        case: case.name.clone(),
        config: case.config,
        options: options.clone(),
        rows: Vec::new(),
    };
    let fail = |table: ConvergenceTable, level, source| {
        Box::new(StudyError {
            partial: table,
            level,
            source,
        })
    };
    if options.levels.len() < 3 {
        let msg = format!("a study needs at least 3 levels, got {}", options.levels.len());
        return Err(fail(table, None, VemError::Config(msg)));
    }
    for &n in &options.levels {
        let (report, solve) = match level(case, options, n) {
            Ok(v) => v,
            Err(e) => return Err(fail(table, Some(n), e)),
        };
        if let Some(prev) = table.rows.last() {
            if !(report.h < prev.h) {
                let msg = format!("mesh size must decrease across levels (n={n} gives h={:e})", report.h);
                return Err(fail(table, Some(n), VemError::Config(msg)));
            }
        }
        table.push(n, report, solve);
    }
    Ok(table)
}

/// Study for the order-`2(p - t)` problem discretised with `C^{p-1}`
/// elements.
pub fn run_t_variant(
    p: usize,
    t: usize,
    r: usize,
    case: &str,
    options: &StudyOptions,
) -> Result<ConvergenceTable, Box<StudyError>> {
    let wrap = |source: VemError| {
        Box::new(StudyError {
            partial: ConvergenceTable {
                case: case.to_string(),
                config: ElementConfig {
                    p,
                    r,
                    t,
                    vertex_scaling: VertexScaling::default(),
                    orthonormal: false,
                    stabilization: Stabilization::default(),
                },
                options: options.clone(),
                rows: Vec::new(),
            },
            level: None,
            source,
        })
    };
    if t == 0 || t >= p {
        return Err(wrap(VemError::Config(format!(
            "the t-variant needs 0 < t <= p - 1, got p={p}, t={t}"
        ))));
    }
    let case = builtin_case(p, r, t, case).map_err(wrap)?;
    run_convergence(&case, options)
}
