use std::fs;
use std::io::Write;

use heatrec_core::abel::{self, HyperbolicDescent, QuadratureSpec, TimeGrid, VolterraTable};
use heatrec_core::closed_form::{
    euclid_kernel, CircleKernel, EuclidKernel, HyperbolicOddKernel, SphereOddKernel,
};
use heatrec_core::evaluator::FnKernel;
use heatrec_core::exact::BigRational;
use heatrec_core::spectral::SpectralSphereKernel;
use heatrec_core::trace::{c_mk, heat_trace_coeffs, hyper_diag_poly, sphere_diag_poly};
use heatrec_core::verify::{run_suite, CheckResult, Control, Suite};
use heatrec_core::{EvalPoint, KernelEvaluator, SpaceForm};
use serde::Serialize;

use crate::args::{
    CoeffsArgs, Command, ControlArg, DiagFamily, EvalArgs, Format, Geometry, OutputArgs, SuiteArg,
    Table, TimeSpacing, VerifyArgs, VolterraArgs,
};

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Core(#[from] heatrec_core::Error),
    #[error("invalid arguments: {0}")]
    Validation(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl AppError {
    pub fn exit_code(&self) -> u8 {
        use heatrec_core::Error as E;
        match self {
            AppError::Validation(_) => 2,
            AppError::Core(E::Domain(_) | E::Usage(_) | E::Unsupported(_)) => 2,
            AppError::Core(_) => 3,
            AppError::Io(_) | AppError::Csv(_) | AppError::Json(_) => 1,
        }
    }
}

/// Successful run; verification failures still produce output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    ChecksFailed,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::ChecksFailed => 4,
        }
    }
}

type Result<T> = std::result::Result<T, AppError>;

fn check_tol(tol: f64) -> Result<()> {
    if !(1e-14..=1e-2).contains(&tol) {
        return Err(AppError::Validation(format!(
            "--tol {tol} outside [1e-14, 1e-2]"
        )));
    }
    Ok(())
}

/// Full decimal precision: 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn emit(output: &OutputArgs, bytes: Vec<u8>) -> Result<()> {
    match &output.out {
        Some(path) => fs::write(path, bytes)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| AppError::Io(e.into_error()))
}

fn json_bytes(value: &impl Serialize) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn run(command: Command) -> Result<Status> {
    match command {
        Command::Eval(a) => eval(a),
        Command::Coeffs(a) => coeffs(a),
        Command::Verify(a) => verify(a),
        Command::Volterra(a) => volterra(a),
    }
}

/// Picks the evaluation route for a space form: closed forms in odd
/// dimension, the zonal series for even spheres, descent for even
/// hyperbolic spaces.
pub fn kernel_for(space: SpaceForm, tol: f64) -> Result<Box<dyn KernelEvaluator>> {
    use heatrec_core::Curvature as C;
    let n = space.dim();
    Ok(match space.kind() {
        C::Euclidean => Box::new(EuclidKernel::new(n)?),
        C::Sphere if n == 1 => Box::new(CircleKernel::default()),
        C::Sphere if n % 2 == 1 => Box::new(SphereOddKernel::of_dim(n)?),
        C::Sphere => Box::new(SpectralSphereKernel::oracle(n)?),
        C::Hyperbolic if n == 1 => Box::new(FnKernel::new(space, "closed_form", |t, r| {
            euclid_kernel(1, t, r)
        })),
        C::Hyperbolic if n % 2 == 1 => Box::new(HyperbolicOddKernel::of_dim(n)?),
        C::Hyperbolic => {
            let q = QuadratureSpec {
                tol,
                ..QuadratureSpec::default()
            };
            Box::new(HyperbolicDescent::new(
                n,
                HyperbolicOddKernel::of_dim(n + 1)?,
                q,
            )?)
        }
    })
}

#[derive(Serialize)]
struct EvalRow {
    t: f64,
    r: f64,
    value: f64,
    method: &'static str,
}

fn eval(a: EvalArgs) -> Result<Status> {
    check_tol(a.tol)?;
    let space = SpaceForm::new(
        match a.space {
            Geometry::Sphere => heatrec_core::Curvature::Sphere,
            Geometry::Euclidean => heatrec_core::Curvature::Euclidean,
            Geometry::Hyperbolic => heatrec_core::Curvature::Hyperbolic,
        },
        a.dim,
    )?;
    let kernel = kernel_for(space, a.tol)?;
    let mut rows = Vec::new();
    for &t in &a.t.values() {
        for &r in &a.r.values() {
            let p = EvalPoint::new(&space, t, r)?;
            rows.push(EvalRow {
                t: p.t,
                r: p.r,
                value: kernel.value(p.t, p.r)?,
                method: kernel.method(),
            });
        }
    }
    let bytes = match a.output.format {
        Format::Csv => csv_bytes(
            &["t", "r", "value", "method"],
            rows.iter()
                .map(|row| vec![num(row.t), num(row.r), num(row.value), row.method.into()]),
        )?,
        Format::Json => json_bytes(&rows)?,
    };
    emit(&a.output, bytes)?;
    Ok(Status::Success)
}

#[derive(Serialize)]
struct CoeffRow {
    m: u32,
    k: usize,
    numerator: String,
    denominator: String,
    sqrtpi: bool,
}

fn coeff_row(m: u32, k: usize, q: &BigRational, sqrtpi: bool) -> CoeffRow {
    CoeffRow {
        m,
        k,
        numerator: q.numer().to_string(),
        denominator: q.denom().to_string(),
        sqrtpi,
    }
}

fn coeffs(a: CoeffsArgs) -> Result<Status> {
    if a.m == 0 {
        return Err(AppError::Validation("--m must be at least 1".into()));
    }
    let rows: Vec<CoeffRow> = match (a.diag, a.table) {
        (Some(family), _) => {
            let poly = match family {
                DiagFamily::Hyperbolic => hyper_diag_poly(a.m)?,
                DiagFamily::Sphere => sphere_diag_poly(a.m)?,
            };
            poly.coeffs()
                .iter()
                .enumerate()
                .map(|(k, q)| coeff_row(a.m, k, q, false))
                .collect()
        }
        (None, Some(Table::C)) => (0..a.m)
            .map(|k| {
                Ok(CoeffRow {
                    m: a.m,
                    k: k as usize,
                    numerator: c_mk(a.m, k)?.to_string(),
                    denominator: "1".into(),
                    sqrtpi: false,
                })
            })
            .collect::<Result<_>>()?,
        (None, Some(Table::Trace)) => heat_trace_coeffs(a.m, a.k_max)?
            .iter()
            .enumerate()
            .map(|(k, s)| coeff_row(a.m, k, s.q(), s.sqrtpi_power() == 1))
            .collect(),
        (None, None) => {
            return Err(AppError::Validation(
                "one of --diag or --table is required".into(),
            ))
        }
    };
    let bytes = match a.output.format {
        Format::Csv => csv_bytes(
            &["m", "k", "numerator", "denominator", "sqrtpi"],
            rows.iter().map(|r| {
                vec![
                    r.m.to_string(),
                    r.k.to_string(),
                    r.numerator.clone(),
                    r.denominator.clone(),
                    u8::from(r.sqrtpi).to_string(),
                ]
            }),
        )?,
        Format::Json => json_bytes(&rows)?,
    };
    emit(&a.output, bytes)?;
    Ok(Status::Success)
}

fn verify(a: VerifyArgs) -> Result<Status> {
    check_tol(a.tol)?;
    let suite = match a.suite {
        SuiteArg::All => Suite::All,
        SuiteArg::Closed => Suite::Closed,
        SuiteArg::Spectral => Suite::Spectral,
        SuiteArg::Abel => Suite::Abel,
        SuiteArg::Trace => Suite::Trace,
    };
    let control = a.control.map(|c| match c {
        ControlArg::DropExp => Control::DropExponential,
        ControlArg::Perturb2Pi => Control::PerturbPrefactor,
        ControlArg::FlipSign => Control::FlipSign,
    });
    let results: Vec<CheckResult> = run_suite(suite, a.tol, control)?;
    let bytes = match a.output.format {
        Format::Csv => csv_bytes(
            &["check", "metric", "threshold", "passed"],
            results.iter().map(|c| {
                vec![
                    c.name.clone(),
                    num(c.metric),
                    num(c.threshold),
                    c.passed.to_string(),
                ]
            }),
        )?,
        Format::Json => json_bytes(&results)?,
    };
    emit(&a.output, bytes)?;
    Ok(if results.iter().all(|c| c.passed) {
        Status::Success
    } else {
        Status::ChecksFailed
    })
}

fn volterra(a: VolterraArgs) -> Result<Status> {
    if a.tol.is_nan() || a.tol <= 0.0 {
        return Err(AppError::Validation("--tol must be positive".into()));
    }
    let spacing = match a.spacing {
        TimeSpacing::Uniform => abel::Spacing::Uniform,
        TimeSpacing::Graded => abel::Spacing::Graded,
    };
    let grid = TimeGrid::new(a.t_end, a.steps, spacing)?;
    let upper = SphereOddKernel::of_dim(3)?;
    let table: VolterraTable =
        abel::sphere_volterra_solve(&grid, a.r_nodes, &upper, &QuadratureSpec::default())?;
    let bytes = match a.output.format {
        Format::Csv => csv_bytes(
            &["t", "r", "value"],
            table.times.iter().zip(&table.values).flat_map(|(&t, row)| {
                table
                    .r
                    .iter()
                    .zip(row)
                    .map(move |(&r, &v)| vec![num(t), num(r), num(v)])
            }),
        )?,
        Format::Json => json_bytes(&table)?,
    };
    emit(&a.output, bytes)?;
    table.certify(a.tol)?;
    Ok(Status::Success)
}
