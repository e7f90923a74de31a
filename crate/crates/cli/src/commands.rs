//! Command implementations. Each returns the rendered report and the exit
//! code to use on success.

use cmi_core::change_of_measure::{
    phi_domain, soundness_sweep, verify, BoundReport, InequalityId, SweepConfig,
};
use cmi_core::distributions::{DiscreteDistribution, Gaussian1D, LogConcaveSpec};
use cmi_core::divergences::{f_divergence, DivergenceKind, DivergenceValue};
use cmi_core::mc_certify::{certify, mc_coverage_experiment, CertifyForm, CertifyInput, TestMap};
use cmi_core::pac_bayes::{
    addend, coverage_experiment, subexp_k1, BoundForm, GibbsExperiment, LossClass, LossModel,
    PacInput, PosteriorRule,
};

use crate::error::{CliError, CliResult};
use crate::output::{num, Csv, Json};
use crate::{
    Cli, Command, CoverageCommand, DivergenceArgs, Format, McCertifyArgs, McCoverageArgs,
    PacCoverageArgs, PacTableArgs, VerifyArgs,
};

pub struct Report {
    pub text: String,
    pub exit_code: i32,
}

impl Report {
    fn ok(text: String) -> Self {
        Self { text, exit_code: 0 }
    }
}

pub fn dispatch(cli: &Cli) -> CliResult<Report> {
    let seed = cli.seed;
    match &cli.command {
        Command::Divergence(a) => divergence(a, seed, cli.format.unwrap_or(Format::Json)),
        Command::Verify(a) => run_verify(a, seed, cli.format.unwrap_or(Format::Csv)),
        Command::PacTable(a) => pac_table(a, seed, cli.format.unwrap_or(Format::Csv)),
        Command::McCertify(a) => mc_certify(a, seed, cli.format.unwrap_or(Format::Json)),
        Command::Coverage(CoverageCommand::Pac(a)) => {
            coverage_pac(a, seed, cli.format.unwrap_or(Format::Json))
        }
        Command::Coverage(CoverageCommand::Mc(a)) => {
            coverage_mc(a, seed, cli.format.unwrap_or(Format::Json))
        }
        Command::Run(_) => Err(CliError::Internal(
            "run must be expanded before dispatch".into(),
        )),
    }
}

fn token<T>(s: &str) -> CliResult<T>
where
    T: std::str::FromStr<Err = cmi_core::Error>,
{
    Ok(s.parse::<T>()?)
}

fn div_json(v: DivergenceValue) -> Json {
    match v {
        DivergenceValue::Finite(x) => Json::Num(x),
        DivergenceValue::Infinite => Json::str("infinite"),
    }
}

/// A single-record report as a JSON object or as a two-line CSV.
fn record(fields: Vec<(&str, Json)>, format: Format) -> String {
    match format {
        Format::Json => Json::obj(fields).render(),
        Format::Csv => {
            let header: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
            let mut csv = Csv::new(&header);
            csv.row(fields.iter().map(|(_, v)| cell(v)).collect());
            csv.render()
        }
    }
}

fn cell(v: &Json) -> String {
    match v {
        Json::Bool(b) => b.to_string(),
        Json::Int(i) => i.to_string(),
        Json::Num(x) => num(*x),
        Json::Str(s) => s.clone(),
        other => other.render().trim_end().replace('\n', " "),
    }
}

fn divergence(args: &DivergenceArgs, seed: u64, format: Format) -> CliResult<Report> {
    let kind: DivergenceKind = token(&args.kind)?;
    let q = crate::inputs::distribution(&args.q)?;
    let p = crate::inputs::distribution(&args.p)?;
    let value = f_divergence(kind, &q, &p)?;
    Ok(Report::ok(record(
        vec![
            ("command", Json::str("divergence")),
            ("kind", Json::str(kind.to_string())),
            ("value", div_json(value)),
            ("seed", Json::Int(seed.into())),
        ],
        format,
    )))
}

const VERIFY_COLUMNS: [&str; 7] = [
    "trial",
    "id",
    "support_size",
    "lhs",
    "rhs",
    "slack",
    "holds",
];

fn verify_row(trial: usize, id: InequalityId, support: usize, r: &BoundReport) -> Vec<String> {
    vec![
        trial.to_string(),
        id.to_string(),
        support.to_string(),
        num(r.lhs),
        r.rhs.value().map_or_else(|| "vacuous".into(), num),
        num(r.slack),
        r.holds.to_string(),
    ]
}

fn verify_json(trial: usize, id: InequalityId, support: usize, r: &BoundReport) -> Json {
    Json::obj([
        ("trial", Json::Int(trial as i128)),
        ("id", Json::str(id.to_string())),
        ("support_size", Json::Int(support as i128)),
        ("lhs", Json::Num(r.lhs)),
        (
            "rhs",
            r.rhs
                .value()
                .map_or_else(|| Json::str("vacuous"), Json::Num),
        ),
        ("slack", Json::Num(r.slack)),
        ("holds", Json::Bool(r.holds)),
    ])
}

fn run_verify(args: &VerifyArgs, seed: u64, format: Format) -> CliResult<Report> {
    let id: InequalityId = token(&args.id)?;
    id.validate()?;
    let mut rows: Vec<(usize, usize, BoundReport)> = Vec::new();
    let mut config = SweepConfig::default();
    let single = match (&args.q, &args.p, &args.phi) {
        (Some(q), Some(p), Some(phi)) => {
            let q = crate::inputs::distribution(q)?;
            let p = crate::inputs::distribution(p)?;
            let phi = crate::inputs::test_function(phi)?;
            rows.push((0, p.len(), verify(id, &q, &p, &phi)?));
            true
        }
        _ => {
            if args.min_support < 1 || args.min_support > args.max_support {
                return Err(CliError::Validation(format!(
                    "support sizes must satisfy 1 <= min ({}) <= max ({})",
                    args.min_support, args.max_support
                )));
            }
            config.min_support = args.min_support;
            config.max_support = args.max_support;
            if let (Some(lo), Some(hi)) = (args.phi_min, args.phi_max) {
                let domain = phi_domain(id);
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) || !domain.contains_range(lo, hi)
                {
                    return Err(CliError::Validation(format!(
                        "phi range [{lo}, {hi}] is not inside the domain {domain} of {id}"
                    )));
                }
                config.phi_range = Some((lo, hi));
            }
            let outcome = soundness_sweep(id, args.trials, seed, &config)?;
            // Support sizes are recomputed from the same per-trial streams.
            for (i, r) in outcome.reports.into_iter().enumerate() {
                let mut rng = cmi_core::rng::trial_stream(seed, i as u64);
                let (_, p, _) = cmi_core::change_of_measure::random_triple(id, &mut rng, &config)?;
                rows.push((i, p.len(), r));
            }
            false
        }
    };
    let violations = rows.iter().filter(|(_, _, r)| !r.holds).count();
    let min_slack = rows
        .iter()
        .map(|(_, _, r)| r.slack)
        .fold(f64::INFINITY, f64::min);
    let text = match format {
        Format::Csv => {
            let mut csv = Csv::new(&VERIFY_COLUMNS);
            csv.meta("command", "verify")
                .meta("id", id)
                .meta("seed", seed)
                .meta("mode", if single { "single" } else { "sweep" });
            for (i, support, r) in &rows {
                csv.row(verify_row(*i, id, *support, r));
            }
            csv.footer(format!(
                "summary: trials={} violations={} min_slack={}",
                rows.len(),
                violations,
                num(min_slack)
            ));
            csv.render()
        }
        Format::Json => Json::obj([
            ("command", Json::str("verify")),
            ("id", Json::str(id.to_string())),
            ("seed", Json::Int(seed.into())),
            ("mode", Json::str(if single { "single" } else { "sweep" })),
            ("trials", Json::Int(rows.len() as i128)),
            ("violations", Json::Int(violations as i128)),
            ("min_slack", Json::Num(min_slack)),
            (
                "reports",
                Json::Arr(
                    rows.iter()
                        .map(|(i, s, r)| verify_json(*i, id, *s, r))
                        .collect(),
                ),
            ),
        ])
        .render(),
    };
    Ok(Report {
        text,
        exit_code: if violations == 0 { 0 } else { 1 },
    })
}

const PAC_COLUMNS: [&str; 8] = [
    "loss_class",
    "form",
    "m",
    "delta",
    "alpha",
    "divergence",
    "addend",
    "regime",
];

fn pac_table(args: &PacTableArgs, seed: u64, format: Format) -> CliResult<Report> {
    let losses = args
        .loss
        .iter()
        .map(|s| token::<LossClass>(s))
        .collect::<CliResult<Vec<_>>>()?;
    let mut rows: Vec<[Json; 8]> = Vec::new();
    for loss in &losses {
        for &m in &args.m {
            for &delta in &args.delta {
                for &alpha in &args.alpha {
                    for &d in &args.div {
                        let div = if d == f64::INFINITY {
                            DivergenceValue::Infinite
                        } else {
                            DivergenceValue::finite(d)
                        };
                        let input = PacInput::new(m, delta, alpha, div)?;
                        let regime = match *loss {
                            LossClass::SubExponential { sigma, beta } => {
                                Json::str(subexp_k1(sigma, beta, m, delta)?.regime.to_string())
                            }
                            _ => Json::str("n/a"),
                        };
                        for form in [BoundForm::Multiplicative, BoundForm::Additive] {
                            let value = addend(*loss, form, &input)?;
                            rows.push([
                                Json::str(loss.to_string()),
                                Json::str(form.to_string()),
                                Json::Int(m.into()),
                                Json::Num(delta),
                                Json::Num(alpha),
                                div_json(div),
                                Json::Num(value),
                                regime.clone(),
                            ]);
                        }
                    }
                }
            }
        }
    }
    let text = match format {
        Format::Csv => {
            let mut csv = Csv::new(&PAC_COLUMNS);
            csv.meta("command", "pac-table").meta("seed", seed);
            for row in &rows {
                csv.row(row.iter().map(cell).collect());
            }
            csv.render()
        }
        Format::Json => Json::obj([
            ("command", Json::str("pac-table")),
            ("seed", Json::Int(seed.into())),
            (
                "rows",
                Json::Arr(
                    rows.into_iter()
                        .map(|row| Json::obj(PAC_COLUMNS.iter().copied().zip(row)))
                        .collect(),
                ),
            ),
        ])
        .render(),
    };
    Ok(Report::ok(text))
}

fn certify_form(form: &str, alpha: Option<f64>) -> CliResult<CertifyForm> {
    match (form.trim(), alpha) {
        ("pseudo-alpha", Some(a)) => {
            let f = CertifyForm::PseudoAlpha(a);
            f.validate()?;
            Ok(f)
        }
        ("pseudo-alpha", None) => Err(CliError::Validation(
            "pseudo-alpha needs --alpha or the token pseudo-alpha:ALPHA".into(),
        )),
        (other, None) => token(other),
        (other, Some(_)) => Err(CliError::Validation(format!(
            "--alpha only applies to the bare pseudo-alpha form, got {other:?}"
        ))),
    }
}

fn phi_map(s: &str) -> CliResult<TestMap> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    let nums = |xs: &[&str]| -> CliResult<Vec<f64>> {
        xs.iter()
            .map(|x| {
                x.parse::<f64>()
                    .map_err(|_| CliError::Validation(format!("bad number {x:?} in phi {s:?}")))
            })
            .collect()
    };
    let map = match parts.as_slice() {
        ["identity"] => TestMap::identity(),
        ["affine", rest @ ..] if rest.len() == 2 => {
            let v = nums(rest)?;
            TestMap::Affine {
                slope: v[0],
                intercept: v[1],
            }
        }
        ["clipped", rest @ ..] if rest.len() == 4 => {
            let v = nums(rest)?;
            TestMap::ClippedAffine {
                slope: v[0],
                intercept: v[1],
                lo: v[2],
                hi: v[3],
            }
        }
        _ => {
            return Err(CliError::Validation(format!(
                "phi must be identity, affine:a:b or clipped:a:b:lo:hi, got {s:?}"
            )))
        }
    };
    map.validate()?;
    Ok(map)
}

fn mc_certify(args: &McCertifyArgs, seed: u64, format: Format) -> CliResult<Report> {
    let form = certify_form(&args.form, args.alpha)?;
    let phi = phi_map(&args.phi)?;
    let samples = crate::inputs::samples(&args.samples)?;
    let input = CertifyInput {
        lipschitz: args.lipschitz,
        gamma: args.gamma,
        n: args.n.unwrap_or(samples.len()),
        delta: args.delta,
        div: args.div,
    };
    input.validate()?;
    // The declared gamma is taken as the sampler's certified constant.
    let spec = LogConcaveSpec::new(args.gamma, Gaussian1D::new(0.0, 1.0 / args.gamma)?)?;
    let report = certify(&samples, &phi, &spec, form, &input)?;
    Ok(Report::ok(record(
        vec![
            ("command", Json::str("mc-certify")),
            ("form", Json::str(form.to_string())),
            ("seed", Json::Int(seed.into())),
            ("L", Json::Num(input.lipschitz)),
            ("gamma", Json::Num(input.gamma)),
            ("n", Json::Int(input.n as i128)),
            ("delta", Json::Num(input.delta)),
            ("div", Json::Num(input.div)),
            ("estimate", Json::Num(report.estimate)),
            ("deviation_term", Json::Num(report.deviation_term)),
            ("bias_term", Json::Num(report.bias_term)),
            ("half_width", Json::Num(report.half_width)),
            ("level", Json::Num(report.level)),
            ("lower", Json::Num(report.lower())),
            ("upper", Json::Num(report.upper())),
        ],
        format,
    )))
}

/// `count` points evenly spaced over `[lo, hi]`.
fn spread(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

fn loss_model(s: &str, values: Vec<f64>) -> CliResult<LossModel> {
    let bad = || {
        CliError::Validation(format!(
            "model must be bernoulli, gaussian:SD or shifted-exp:RATE, got {s:?}"
        ))
    };
    let param = |v: &str| v.parse::<f64>().map_err(|_| bad());
    let model = match s.trim().split_once(':') {
        None if s.trim() == "bernoulli" => LossModel::Bernoulli { means: values },
        Some(("gaussian", sd)) => LossModel::Gaussian {
            means: values,
            sd: param(sd)?,
        },
        Some(("shifted-exp", rate)) => LossModel::ShiftedExponential {
            shifts: values,
            rate: param(rate)?,
        },
        _ => return Err(bad()),
    };
    model.validate()?;
    Ok(model)
}

fn coverage_pac(args: &PacCoverageArgs, seed: u64, format: Format) -> CliResult<Report> {
    let loss: LossClass = token(&args.loss)?;
    if args.hypotheses == 0 {
        return Err(CliError::Validation("hypotheses must be at least 1".into()));
    }
    let model = loss_model(
        &args.model,
        spread(args.mean_lo, args.mean_hi, args.hypotheses),
    )?;
    let forms = match args.form.trim() {
        "both" => vec![BoundForm::Multiplicative, BoundForm::Additive],
        other => vec![token::<BoundForm>(other)?],
    };
    let exp = GibbsExperiment {
        prior: DiscreteDistribution::uniform(args.hypotheses)?,
        posterior: PosteriorRule::ExponentialWeights { eta: args.eta },
        model,
        m: args.m,
        trials: args.trials,
        seed,
    };
    let mut results = Vec::new();
    for form in forms {
        let r = coverage_experiment(&exp, loss, form, args.delta, args.alpha)?;
        results.push((form, r));
    }
    let text = match format {
        Format::Csv => {
            let mut csv = Csv::new(&["form", "trials", "violations", "vacuous", "violation_rate"]);
            csv.meta("command", "coverage-pac")
                .meta("seed", seed)
                .meta("loss", loss)
                .meta("model", args.model.trim())
                .meta("hypotheses", args.hypotheses)
                .meta("m", args.m)
                .meta("delta", num(args.delta))
                .meta("alpha", num(args.alpha));
            for (form, r) in &results {
                csv.row(vec![
                    form.to_string(),
                    r.trials.to_string(),
                    r.violations.to_string(),
                    r.vacuous.to_string(),
                    num(r.violation_rate),
                ]);
            }
            csv.render()
        }
        Format::Json => Json::obj([
            ("command", Json::str("coverage-pac")),
            ("seed", Json::Int(seed.into())),
            ("loss", Json::str(loss.to_string())),
            ("model", Json::str(args.model.trim())),
            ("hypotheses", Json::Int(args.hypotheses as i128)),
            ("m", Json::Int(args.m.into())),
            ("delta", Json::Num(args.delta)),
            ("alpha", Json::Num(args.alpha)),
            ("eta", Json::Num(args.eta)),
            (
                "results",
                Json::Arr(
                    results
                        .iter()
                        .map(|(form, r)| {
                            Json::obj([
                                ("form", Json::str(form.to_string())),
                                ("trials", Json::Int(r.trials as i128)),
                                ("violations", Json::Int(r.violations as i128)),
                                ("vacuous", Json::Int(r.vacuous as i128)),
                                ("violation_rate", Json::Num(r.violation_rate)),
                            ])
                        })
                        .collect(),
                ),
            ),
        ])
        .render(),
    };
    Ok(Report::ok(text))
}

fn coverage_mc(args: &McCoverageArgs, seed: u64, format: Format) -> CliResult<Report> {
    let form = certify_form(&args.form, args.alpha)?;
    let phi = phi_map(&args.phi)?;
    let q = Gaussian1D::new(args.q_mean, args.q_var)?;
    let p = Gaussian1D::new(args.p_mean, args.p_var)?;
    let r = mc_coverage_experiment(form, &q, &p, &phi, args.n, args.delta, args.repeats, seed)?;
    Ok(Report::ok(record(
        vec![
            ("command", Json::str("coverage-mc")),
            ("form", Json::str(form.to_string())),
            ("seed", Json::Int(seed.into())),
            ("n", Json::Int(args.n as i128)),
            ("delta", Json::Num(args.delta)),
            ("repeats", Json::Int(r.repeats as i128)),
            ("covered", Json::Int(r.covered as i128)),
            ("fraction", Json::Num(r.fraction)),
            ("truth", Json::Num(r.truth)),
            ("level", Json::Num(r.level)),
            ("divergence", div_json(r.divergence)),
            ("first_half_width", Json::Num(r.first_half_width)),
        ],
        format,
    )))
}
