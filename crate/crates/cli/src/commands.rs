//! One function per subcommand. Each writes its artifacts and reports
//! whether a search budget ran out somewhere.

use kclg::comparison::{comparison_endpoint, construct_comparison_path, sample_open_event_a};
use kclg::dynamics::{kmc_run, sample_bernoulli, ConstraintSpec, SampleCondition};
use kclg::error::{Error, PathError};
use kclg::frame::estimate_frameable_prob;
use kclg::lattice::{Domain, Region, SiteVector};
use kclg::renorm::{
    build_field, clusters, crossing_count, estimate_open_fraction, EdgeState, FaceCache,
};
use kclg::rng::{self, Purpose};
use kclg::tracer::{
    estimate_d, linear_times, tagged_run, variational_upper_bound, Estimator, FitWindow,
    TaggedMethod, TaggedRunParams,
};
use serde_json::json;

use crate::config::{ExperimentConfig, Method};
use crate::manifest::ArtifactWriter;
use crate::CliError;

fn m<T, E: Into<Error>>(r: Result<T, E>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Module(e.into()))
}

struct Csv(csv::Writer<Vec<u8>>);

impl Csv {
    fn new(header: &[String]) -> Result<Self, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(csv_err)?;
        Ok(Csv(w))
    }

    fn row(&mut self, fields: &[String]) -> Result<(), CliError> {
        self.0.write_record(fields).map_err(csv_err)
    }

    fn into_bytes(self) -> Result<Vec<u8>, CliError> {
        self.0
            .into_inner()
            .map_err(|e| CliError::Runtime(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Runtime(format!("csv: {e}"))
}

fn strs<const N: usize>(xs: [&str; N]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn spec(c: &ExperimentConfig) -> ConstraintSpec {
    ConstraintSpec { d: c.d, s: c.s }
}

/// Environment dynamics from a Bernoulli start: the event log plus the
/// initial and final snapshots.
pub fn simulate(c: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<bool, CliError> {
    let dom = Domain::torus(c.dims.clone());
    let η = m(sample_bernoulli(
        &dom,
        c.rho[0],
        c.seed,
        SampleCondition::None,
    ))?;
    let t = m(kmc_run(&η, spec(c), c.t_max, c.seed))?;
    let mut header = strs(["event_index", "time"]);
    header.extend((0..c.d).map(|a| format!("x{a}")));
    header.extend((0..c.d).map(|a| format!("y{a}")));
    let mut out = Csv::new(&header)?;
    for (k, e) in t.events.iter().enumerate() {
        let mut row = vec![k.to_string(), e.time.to_string()];
        for site in [e.from, e.to] {
            row.extend(
                dom.site(site as usize)
                    .coords()
                    .iter()
                    .map(|x| x.to_string()),
            );
        }
        out.row(&row)?;
    }
    w.write("events.csv", &out.into_bytes()?)?;
    w.write("initial.json", t.initial.to_json().as_bytes())?;
    w.write("final.json", t.final_config.to_json().as_bytes())?;
    Ok(false)
}

/// Tagged-particle mean squared displacement and the fitted diffusion
/// matrix.
pub fn msd(c: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<bool, CliError> {
    let p = TaggedRunParams {
        rho: c.rho[0],
        spec: spec(c),
        dims: c.dims.clone(),
        sample_times: linear_times(c.t_max, c.n_times),
        n_replicas: c.n_replicas,
        seed: c.seed,
        method: match c.method {
            Method::Joint => TaggedMethod::Joint,
            Method::Recentered => TaggedMethod::Recentered,
        },
    };
    let series = m(tagged_run(&p))?;
    let mut header = strs(["t"]);
    header.extend((0..c.d).map(|a| format!("msd_{a}")));
    header.extend((0..c.d).map(|a| format!("stderr_{a}")));
    let mut out = Csv::new(&header)?;
    let curves: Vec<Vec<(f64, f64)>> = (0..c.d).map(|a| series.msd(a)).collect();
    for (k, t) in series.times().iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(curves.iter().map(|cv| cv[k].0.to_string()));
        row.extend(curves.iter().map(|cv| cv[k].1.to_string()));
        out.row(&row)?;
    }
    w.write("msd.csv", &out.into_bytes()?)?;
    let e = m(estimate_d(&series, FitWindow::last_half_decade(c.t_max)))?;
    w.write_json(
        "estimate.json",
        &json!({
            "D_hat": e.d_hat,
            "CI": { "lo": e.ci_lo, "hi": e.ci_hi },
            "fit_window": e.window,
            "n_replicas": e.n_replicas,
            "warnings": series.warnings,
            "params": c,
        }),
    )?;
    Ok(false)
}

/// Upper bound on `u·D u` over local functions of a centred cube, one row
/// per density. Exact enumeration when it fits, Monte Carlo otherwise.
pub fn varbound(c: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<bool, CliError> {
    let r = c.window as i64;
    let window = Region::boxed(SiteVector::new(vec![-r; c.d]), vec![2 * c.window + 1; c.d]);
    let mut u = vec![0.0; c.d];
    u[c.axis] = 1.0;
    let mut out = Csv::new(&strs([
        "rho",
        "window",
        "axis",
        "estimator",
        "zero_function_value",
        "value",
        "cg_iterations",
        "cg_residual",
    ]))?;
    let mut summary = Vec::new();
    for &rho in &c.rho {
        let exact =
            variational_upper_bound(rho, &spec(c), &window, &u, Estimator::ExactEnumeration);
        let (name, b) = match exact {
            Err(kclg::error::TracerError::WindowTooLarge { .. }) => {
                let est = Estimator::MonteCarlo {
                    samples: c.n_samples,
                    seed: c.seed,
                };
                (
                    "monte_carlo",
                    m(variational_upper_bound(rho, &spec(c), &window, &u, est))?,
                )
            }
            other => ("exact", m(other)?),
        };
        out.row(&[
            rho.to_string(),
            c.window.to_string(),
            c.axis.to_string(),
            name.to_string(),
            b.zero_function_value.to_string(),
            b.value.to_string(),
            b.cg_iterations.to_string(),
            b.cg_residual.to_string(),
        ])?;
        summary.push(json!({
            "rho": rho,
            "estimator": name,
            "zero_function_value": b.zero_function_value,
            "value": b.value,
            "warnings": b.warnings,
        }));
    }
    w.write("varbound.csv", &out.into_bytes()?)?;
    w.write_json("varbound.json", &json!({ "bounds": summary, "params": c }))?;
    Ok(false)
}

/// Frameable fraction of `Λ_L` for every `(L, ρ)` of the sweep.
pub fn frameability(c: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<bool, CliError> {
    let mut out = Csv::new(&strs([
        "L",
        "rho",
        "n",
        "p_frameable",
        "p_unknown",
        "ci_lo",
        "ci_hi",
        "mean_states_visited",
    ]))?;
    let mut exhausted = false;
    for &l in &c.l {
        for &rho in &c.rho {
            let e = m(estimate_frameable_prob(
                rho,
                l,
                &spec(c),
                c.n_samples,
                c.budget,
                c.seed,
            ))?;
            exhausted |= e.unknown > 0;
            out.row(&[
                l.to_string(),
                rho.to_string(),
                e.n.to_string(),
                e.p_frameable.to_string(),
                e.p_unknown.to_string(),
                e.ci_lo.to_string(),
                e.ci_hi.to_string(),
                e.mean_states_visited.to_string(),
            ])?;
        }
    }
    w.write("frameability.csv", &out.into_bytes()?)?;
    Ok(exhausted)
}

/// Open-edge fraction from independent edges, plus (in `d = 2`) one field
/// of `cells × cells` renormalised sites for cluster and crossing counts.
pub fn percolation(c: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<bool, CliError> {
    let mut out = Csv::new(&strs([
        "L",
        "rho",
        "n",
        "open_fraction",
        "ci_lo",
        "ci_hi",
        "unknown_fraction",
        "largest_cluster_fraction",
        "crossings_per_N",
    ]))?;
    let mut exhausted = false;
    let mut cache = FaceCache::new();
    let mut k = 0;
    for &l in &c.l {
        for &rho in &c.rho {
            let e = m(estimate_open_fraction(
                rho,
                l,
                c.d,
                c.n_samples,
                c.budget,
                c.seed,
            ))?;
            exhausted |= e.unknown > 0;
            let (mut largest, mut crossings) = (String::new(), String::new());
            if c.d == 2 {
                let dom = Domain::torus(vec![c.cells * (l + 2); 2]);
                let mut rng = rng::stream(c.seed, Purpose::Sample, k);
                let η = m(kclg::dynamics::sample_bernoulli_with(
                    &dom,
                    rho,
                    &mut rng,
                    SampleCondition::None,
                ))?;
                let field = m(build_field(&η, l, c.budget, &mut cache))?;
                exhausted |= field.states.contains(&EdgeState::Unknown);
                largest = clusters(&field).largest_fraction().to_string();
                crossings =
                    (m(crossing_count(&field, c.cells))? as f64 / c.cells as f64).to_string();
                w.write_json(
                    &format!("field_{k}.json"),
                    &json!({ "L": l, "rho": rho, "field": field }),
                )?;
            }
            out.row(&[
                l.to_string(),
                rho.to_string(),
                e.n.to_string(),
                e.p_open.to_string(),
                e.ci_lo.to_string(),
                e.ci_hi.to_string(),
                e.p_unknown.to_string(),
                largest,
                crossings,
            ])?;
            k += 1;
        }
    }
    w.write("percolation.csv", &out.into_bytes()?)?;
    Ok(exhausted)
}

/// Builds and checks comparison paths on samples with the event `A` and
/// an open bond. Sample `k` uses stream `(seed, Sample, k)`.
pub fn path_check(c: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<bool, CliError> {
    let l = c.l[0];
    let mut out = Csv::new(&strs([
        "sample",
        "status",
        "path_length",
        "tracer_moves",
        "excised",
        "valid",
        "displacement_ok",
        "endpoint_ok",
    ]))?;
    let mut want = vec![0; 2];
    want[c.axis] = l as i64 + 2;
    let mut exhausted = false;
    for k in 0..c.n_samples {
        let mut rng = rng::stream(c.seed, Purpose::Sample, k as u64);
        let (η, _) = m(sample_open_event_a(l, c.rho[0], c.axis, c.budget, &mut rng))?;
        let row = match construct_comparison_path(&η, c.axis, l, &spec(c), c.budget) {
            Ok(p) => {
                let end = m(comparison_endpoint(&η, c.axis, l))?;
                let disp_ok = p.displacement().into_coords() == want;
                let end_ok = p.path.final_config.bits() == end.bits();
                let ok = p.validation.valid && disp_ok && end_ok;
                let s = p.summary(l);
                [
                    k.to_string(),
                    if ok { "ok" } else { "invalid" }.to_string(),
                    s.length.to_string(),
                    s.tracer_moves.to_string(),
                    s.excised.to_string(),
                    p.validation.valid.to_string(),
                    disp_ok.to_string(),
                    end_ok.to_string(),
                ]
            }
            Err(e) => {
                let budget = matches!(e, PathError::BudgetExhausted(_));
                exhausted |= budget;
                [
                    k.to_string(),
                    if budget { "budget" } else { "failed" }.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    "false".into(),
                    "false".into(),
                    "false".into(),
                ]
            }
        };
        out.row(&row)?;
    }
    w.write("path_check.csv", &out.into_bytes()?)?;
    Ok(exhausted)
}
