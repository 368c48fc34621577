use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use relaylab::optimize::{caf_grid, Optimizer, Scheme, SearchBudget, SearchResult};
use relaylab::params::{load_caf_params, load_new_scheme_params, SchemeParams};
use relaylab::rates::{evaluate_caf, CafForm, CafParams, CafReport, RateReport};
use relaylab::sim::{estimate_error_probability, SimConfig};
use relaylab::{
    check_degeneration, evaluate_new_scheme, load_channel, repair_auxiliary, verify_appendix_b_bounds,
    NewSchemeParams, RelayChannel,
};

use crate::output::{gaps_field, CsvRow, RunManifest};
use crate::{Check, CliError, EvaluateArgs, OptimizeArgs, RepairArgs, SimulateArgs, Units, VerifyArgs};

pub struct Context {
    pub units: Units,
}

pub struct CommandOutput {
    pub report: Value,
    pub csv: Vec<CsvRow>,
}

fn read_input(path: &Path, manifest: &mut RunManifest) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    manifest.add_input(path, &bytes);
    String::from_utf8(bytes).map_err(|_| CliError::Input(format!("{} is not UTF-8", path.display())))
}

fn write_output(path: &Path, text: &str, manifest: &mut RunManifest) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))?;
    manifest.outputs.push(path.display().to_string());
    Ok(())
}

fn channel(path: &Path, manifest: &mut RunManifest) -> Result<RelayChannel, CliError> {
    Ok(load_channel(&read_input(path, manifest)?)?)
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn new_scheme_row(r: &RateReport) -> CsvRow {
    CsvRow {
        scheme: "new".into(),
        form: String::new(),
        rate_nats: r.achievable_rate,
        feasible: r.feasible.to_string(),
        gaps: gaps_field(&[
            ("rate_bound_a", r.rate_bound_a),
            ("feasibility_gap_b", r.feasibility_gap_b),
            ("rate_bound_c", r.rate_bound_c),
        ]),
    }
}

fn caf_row(r: &CafReport) -> CsvRow {
    let gaps: Vec<(&str, f64)> = r.condition_gaps.iter().map(|g| (g.id, g.slack)).collect();
    CsvRow {
        scheme: "caf".into(),
        form: r.form.to_string(),
        rate_nats: r.achievable_rate,
        feasible: r.feasible.to_string(),
        gaps: gaps_field(&gaps),
    }
}

pub fn evaluate(ctx: &Context, a: &EvaluateArgs, m: &mut RunManifest) -> Result<CommandOutput, CliError> {
    let ch = channel(&a.channel, m)?;
    let text = read_input(&a.params, m)?;
    let k = ctx.units.factor();
    Ok(match a.scheme {
        Scheme::New => {
            let r = evaluate_new_scheme(&ch, &load_new_scheme_params(&text)?)?;
            CommandOutput {
                report: to_value(&r.scaled(k)),
                csv: vec![new_scheme_row(&r)],
            }
        }
        Scheme::Caf(form) => {
            let r = evaluate_caf(&ch, &load_caf_params(&text)?, form)?;
            CommandOutput {
                report: to_value(&r.scaled(k)),
                csv: vec![caf_row(&r)],
            }
        }
    })
}

fn search_report(res: &SearchResult, units: Units) -> Value {
    let k = units.factor();
    let trace: Vec<Value> = res.trace.iter().map(|(r, v)| json!([r, v * k])).collect();
    json!({
        "mode": res.mode,
        "best_rate": res.best_rate * k,
        "best_params": to_value(&res.best_params.to_document()),
        "trace": trace,
    })
}

pub fn optimize(ctx: &Context, a: &OptimizeArgs, m: &mut RunManifest) -> Result<CommandOutput, CliError> {
    let ch = channel(&a.channel, m)?;
    m.seed = Some(a.seed);
    let budget = SearchBudget {
        restarts: a.restarts,
        sweeps: a.sweeps,
        grid_points: a.grid_points,
        seed: a.seed,
    };
    let yhat = a.yhat_size.unwrap_or(ch.y1_alpha.size);
    let run = |opt: Optimizer| if a.grid { opt.run_grid(&budget) } else { opt.run(&budget) };
    let mut caf_start = None;
    let mut opt = Optimizer::new(&ch, a.scheme).yhat_size(yhat);
    if a.scheme == Scheme::New && !a.no_caf_start {
        let caf = run(Optimizer::new(&ch, Scheme::Caf(CafForm::Compact)).yhat_size(yhat))?;
        opt = opt.warm_start(caf.best_params.clone().into_new_scheme());
        caf_start = Some(caf.best_rate);
    }
    let res = run(opt)?;
    let mut report = search_report(&res, ctx.units);
    report["scheme"] = json!(a.scheme.to_string());
    if let Some(r) = caf_start {
        report["caf_start_rate"] = json!(r * ctx.units.factor());
    }
    if let Some(path) = &a.params_out {
        write_output(path, &res.best_params.to_json(), m)?;
    }
    let (scheme, form) = match a.scheme {
        Scheme::New => ("new", String::new()),
        Scheme::Caf(f) => ("caf", f.to_string()),
    };
    Ok(CommandOutput {
        report,
        csv: vec![CsvRow {
            scheme: scheme.into(),
            form,
            rate_nats: res.best_rate,
            feasible: (res.best_rate > 0.0).to_string(),
            gaps: String::new(),
        }],
    })
}

pub fn verify(ctx: &Context, a: &VerifyArgs, m: &mut RunManifest) -> Result<CommandOutput, CliError> {
    let ch = channel(&a.channel, m)?;
    let k = ctx.units.factor();
    let yhat = a.yhat_size.unwrap_or(ch.y1_alpha.size);
    if yhat == 0 {
        return Err(CliError::Input("--yhat-size must be at least 1".into()));
    }
    if a.params.is_none() {
        m.seed = Some(a.seed);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    match a.check {
        Check::Degeneration => {
            let points: Vec<CafParams> = match &a.params {
                Some(p) => vec![load_caf_params(&read_input(p, m)?)?],
                None => (0..a.trials.unwrap_or(100))
                    .map(|_| CafParams::random(&ch, yhat, &mut rng))
                    .collect(),
            };
            let gaps = points
                .iter()
                .map(|p| Ok(check_degeneration(&ch, p)?.max_abs_gap))
                .collect::<Result<Vec<f64>, relaylab::Error>>()?;
            let worst = gaps.iter().copied().fold(0.0, f64::max);
            Ok(CommandOutput {
                report: json!({
                    "check": "degeneration",
                    "instances": gaps.len(),
                    "max_abs_gap": worst * k,
                    "gaps": gaps.iter().map(|g| g * k).collect::<Vec<_>>(),
                }),
                csv: vec![CsvRow {
                    scheme: "new-vs-caf".into(),
                    form: "compact".into(),
                    rate_nats: f64::NAN,
                    feasible: String::new(),
                    gaps: gaps_field(&[("max_abs_gap", worst)]),
                }],
            })
        }
        Check::AppendixB => {
            let points: Vec<NewSchemeParams> = match &a.params {
                Some(p) => vec![load_new_scheme_params(&read_input(p, m)?)?],
                None => (0..a.trials.unwrap_or(10))
                    .map(|_| NewSchemeParams::random(&ch, yhat, &mut rng))
                    .collect(),
            };
            let mut instances = Vec::new();
            let mut worst = f64::INFINITY;
            for p in &points {
                let checks = verify_appendix_b_bounds(&ch, p, a.blocks)?;
                let min = checks.iter().map(|c| c.residual).fold(f64::INFINITY, f64::min);
                worst = worst.min(min);
                let scaled: Vec<Value> = checks
                    .iter()
                    .map(|c| {
                        json!({
                            "j": c.j,
                            "k": c.k,
                            "kind": c.kind,
                            "lhs_exact": c.lhs_exact * k,
                            "rhs_lower_bound": c.rhs_lower_bound * k,
                            "residual": c.residual * k,
                        })
                    })
                    .collect();
                instances.push(json!({ "min_residual": min * k, "checks": scaled }));
            }
            Ok(CommandOutput {
                report: json!({
                    "check": "appendix-b",
                    "blocks": a.blocks,
                    "min_residual": worst * k,
                    "instances": instances,
                }),
                csv: vec![CsvRow {
                    scheme: "new".into(),
                    form: format!("blocks={}", a.blocks),
                    rate_nats: f64::NAN,
                    feasible: String::new(),
                    gaps: gaps_field(&[("min_residual", worst)]),
                }],
            })
        }
        Check::Equivalence => {
            let forms = [CafForm::Form1, CafForm::Form2, CafForm::Form3, CafForm::Compact];
            let grid = caf_grid(&ch, a.grid_points)?;
            let mut best = [0.0f64; 4];
            let mut pointwise = 0.0f64;
            for p in &grid {
                let mut rates = [0.0; 4];
                for (slot, f) in rates.iter_mut().zip(forms) {
                    *slot = evaluate_caf(&ch, p, f)?.achievable_rate;
                }
                for (b, r) in best.iter_mut().zip(rates) {
                    *b = b.max(r);
                }
                pointwise = pointwise.max((rates[2] - rates[3]).abs());
            }
            let spread = best.iter().copied().fold(f64::MIN, f64::max)
                - best.iter().copied().fold(f64::MAX, f64::min);
            let maxima: serde_json::Map<String, Value> = forms
                .iter()
                .zip(best)
                .map(|(f, b)| (f.to_string(), json!(b * k)))
                .collect();
            Ok(CommandOutput {
                report: json!({
                    "check": "equivalence",
                    "grid_points": a.grid_points,
                    "points": grid.len(),
                    "maxima": maxima,
                    "spread": spread * k,
                    "max_form3_compact_gap": pointwise * k,
                }),
                csv: forms
                    .iter()
                    .zip(best)
                    .map(|(f, b)| CsvRow {
                        scheme: "caf".into(),
                        form: f.to_string(),
                        rate_nats: b,
                        feasible: (b > 0.0).to_string(),
                        gaps: gaps_field(&[("spread", spread)]),
                    })
                    .collect(),
            })
        }
    }
}

pub fn simulate(ctx: &Context, a: &SimulateArgs, m: &mut RunManifest) -> Result<CommandOutput, CliError> {
    let ch = channel(&a.channel, m)?;
    let p = load_new_scheme_params(&read_input(&a.params, m)?)?;
    m.seed = Some(a.seed);
    let cfg = SimConfig {
        n: a.n,
        blocks: a.blocks,
        messages: a.messages,
        quantizers: a.quantizers,
        delta: a.delta,
        trials: a.trials,
        seed: a.seed,
    };
    let r = estimate_error_probability(&cfg, &ch, &p)?;
    let mut report = to_value(&r);
    report["effective_rate"] = json!(r.effective_rate * ctx.units.factor());
    report["config"] = to_value(&cfg);
    Ok(CommandOutput {
        report,
        csv: vec![CsvRow {
            scheme: "new".into(),
            form: "simulation".into(),
            rate_nats: r.effective_rate,
            feasible: String::new(),
            gaps: gaps_field(&[
                ("p_e_hat", r.p_e_hat),
                ("wilson_lo", r.wilson_interval.0),
                ("wilson_hi", r.wilson_interval.1),
            ]),
        }],
    })
}

pub fn repair(ctx: &Context, a: &RepairArgs, m: &mut RunManifest) -> Result<CommandOutput, CliError> {
    let ch = channel(&a.channel, m)?;
    let p = load_caf_params(&read_input(&a.params, m)?)?;
    let q = repair_auxiliary(&ch, &p, a.rate)?;
    let check = evaluate_caf(&ch, &q, CafForm::Form1)?;
    let doc = SchemeParams::Caf(q.clone());
    if let Some(path) = &a.params_out {
        write_output(path, &doc.to_json(), m)?;
    }
    Ok(CommandOutput {
        report: json!({
            "rate": a.rate * ctx.units.factor(),
            "unchanged": q == p,
            "params": to_value(&doc.to_document()),
            "form1": to_value(&check.scaled(ctx.units.factor())),
        }),
        csv: vec![caf_row(&check)],
    })
}
