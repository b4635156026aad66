use std::io::Write;
use std::path::Path;

use cpop_core::{
    bic_score, crops_run, elbow_table, estimate_variance_ddiff, fit_loglinear_variance, mean_function,
    select_by_bic, simulate as simulate_series, solve, BicScore, CpopResult, DataSeries, Grid, NoiseScale,
    Segmentation, SlopeSpec, SolverConfig,
};

use crate::args::{Command, CropsArgs, DetectArgs, EstimateArgs, FitArgs, Select, SimulateArgs, VarianceCommand};
use crate::document::{ModelSection, Num, PathSection, ResultDocument, RunConfig, Selection, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};
use crate::table::{emit, format_number, format_sig, read_single_column, render_csv, InputTable, SdChoice};

/// Runs one subcommand. The human summary goes to `out`, warnings to `err`.
pub fn run(command: &Command, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Detect(a) => detect(a, out),
        Command::Crops(a) => crops(a, out),
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a, err),
        Command::Variance(v) => variance(v, out),
    }
}

fn say(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Internal(format!("writing summary: {e}")))
}

/// Parses a grid specification against the data it will be used with.
pub fn parse_grid(spec: &str, series: &DataSeries) -> CliResult<Grid> {
    if spec == "data" {
        return Ok(Grid::from_data(series));
    }
    if let Some(count) = spec.strip_prefix("even:") {
        let count: usize = count
            .parse()
            .ok()
            .filter(|&c| c >= 1)
            .ok_or_else(|| CliError::Usage(format!("--grid even:N needs a positive integer N, got '{spec}'")))?;
        let x = series.x();
        return Ok(Grid::even(count, x[0], x[x.len() - 1])?);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "--grid must be 'data', 'even:N' or an existing file, got '{spec}'"
        )));
    }
    let mut points = read_single_column(path, "x")?;
    points.sort_by(f64::total_cmp);
    points.dedup();
    Ok(Grid::new(points)?)
}

fn solver_config(fit: &FitArgs, beta: f64) -> SolverConfig {
    SolverConfig::new(beta)
        .with_minseglen(fit.minseglen)
        .with_prune_approx(fit.prune_approx)
}

/// Data locations within `radius` of any changepoint of `coarse`.
pub fn refined_grid(series: &DataSeries, coarse: &Segmentation, radius: f64) -> Option<Grid> {
    let points: Vec<f64> = series
        .x()
        .iter()
        .copied()
        .filter(|x| coarse.changepoints.iter().any(|c| (x - c).abs() <= radius))
        .collect();
    Grid::new(points).ok()
}

fn fit_csv(seg: &Segmentation, series: &DataSeries) -> String {
    let rows = series.x().iter().zip(series.y()).map(|(&x, &y)| {
        let fitted = seg.evaluate_at(x);
        vec![x, y, fitted, y - fitted]
    });
    render_csv(&["x", "y", "fitted", "residual"], rows)
}

/// The package-style printout of one fit.
pub fn summary_text(seg: &Segmentation, series: &DataSeries, beta: f64) -> String {
    let g = |v: f64| format_sig(v, 7);
    let mut s = format!(
        "CPOP analysis with n = {} and penalty (beta) = {}\n\n",
        series.len(),
        g(beta)
    );
    match seg.num_changepoints() {
        0 => s.push_str("No changepoints detected\n\n"),
        k => {
            let locs: Vec<String> = seg.changepoints.iter().map(|&c| g(c)).collect();
            s.push_str(&format!(
                "{k} changepoint{} detected at x =\n {}\n\n",
                if k == 1 { "" } else { "s" },
                locs.join(" ")
            ));
        }
    }
    let header = ["x0", "y0", "x1", "y1", "gradient", "intercept", "RSS"];
    let rows: Vec<[String; 7]> = cpop_core::fitted_table(seg, series)
        .iter()
        .map(|r| [r.x0, r.y0, r.x1, r.y1, r.gradient, r.intercept, r.rss].map(g))
        .collect();
    let widths: Vec<usize> = (0..7)
        .map(|j| rows.iter().map(|r| r[j].len()).chain([header[j].len()]).max().unwrap_or(0))
        .collect();
    s.push_str("fitted values:\n");
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect();
        format!("  {}\n", padded.join("  "))
    };
    s.push_str(&line(header.to_vec()));
    for r in &rows {
        s.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    s.push_str(&format!("\noverall RSS = {}\ncost = {}\n", g(seg.rss), g(seg.cost)));
    s
}

fn base_config(fit: &FitArgs, series: &DataSeries, grid: &Grid, sd: SdChoice) -> RunConfig {
    RunConfig {
        n: series.len(),
        beta: None,
        beta_min: None,
        beta_max: None,
        minseglen: Num(fit.minseglen),
        prune_approx: fit.prune_approx,
        grid: fit.grid.clone(),
        grid_size: grid.len(),
        sd: sd.describe(),
        refine_radius: None,
    }
}

fn check_finite(name: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("{name} must be finite, got {v}")))
    }
}

pub fn detect(args: &DetectArgs, out: &mut dyn Write) -> CliResult<()> {
    let fit = &args.fit;
    check_finite("--minseglen", fit.minseglen)?;
    let (series, sd) = InputTable::read(&fit.input)?.series(fit.sd)?;
    let beta = args.beta.unwrap_or_else(|| series.default_beta());
    let mut grid = parse_grid(&fit.grid, &series)?;
    let mut result = solve(&series, &grid, solver_config(fit, beta))?;
    if let Some(radius) = args.refine_radius {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(CliError::Usage(format!("--refine-radius must be positive, got {radius}")));
        }
        if let Some(fine) = refined_grid(&series, &result.segmentation, radius) {
            result = solve(&series, &fine, solver_config(fit, beta))?;
            grid = fine;
        }
    }
    let seg = &result.segmentation;
    let mut config = base_config(fit, &series, &grid, sd);
    config.beta = Some(Num(beta));
    config.refine_radius = args.refine_radius.map(Num);
    let doc = ResultDocument {
        schema_version: SCHEMA_VERSION,
        kind: "detect".into(),
        config,
        model: Some(ModelSection::new(seg, &series, beta)),
        path: None,
    };
    let json = doc.to_json()?;
    if let Some(p) = &fit.fit_out {
        emit(Some(p), &fit_csv(seg, &series))?;
    }
    emit(Some(&fit.out), &json)?;
    say(out, &summary_text(seg, &series, beta))
}

fn path_summary(doc_path: &PathSection, range: (f64, f64)) -> String {
    let g = |v: f64| format_sig(v, 7);
    let mut s = format!(
        "CROPS over beta in [{}, {}]: {} segmentation{} from {} solver calls\n",
        g(range.0),
        g(range.1),
        doc_path.records.len(),
        if doc_path.records.len() == 1 { "" } else { "s" },
        doc_path.solver_calls
    );
    s.push_str("        beta    m           Qm  penalised cost  changepoints\n");
    for r in &doc_path.records {
        let cps: Vec<String> = r.changepoints.iter().map(|c| g(c.0)).collect();
        s.push_str(&format!(
            "{:>12} {:>4} {:>12} {:>15}  {}\n",
            g(r.beta.0),
            r.m,
            g(r.qm.0),
            g(r.penalised_cost.0),
            cps.join(" ")
        ));
    }
    s
}

pub fn crops(args: &CropsArgs, out: &mut dyn Write) -> CliResult<()> {
    let fit = &args.fit;
    check_finite("--minseglen", fit.minseglen)?;
    match args.select {
        Select::ElbowData if args.elbow_out.is_none() => {
            return Err(CliError::Usage("--select elbow-data needs --elbow-out".into()))
        }
        Select::None | Select::ElbowData if args.fit.fit_out.is_some() || args.model_out.is_some() => {
            return Err(CliError::Usage("--fit-out and --model-out need --select bic".into()))
        }
        _ => {}
    }
    let (series, sd) = InputTable::read(&fit.input)?.series(fit.sd)?;
    let (dmin, dmax) = cpop_core::crops::default_range(series.len());
    let range = (args.beta_min.unwrap_or(dmin), args.beta_max.unwrap_or(dmax));
    let grid = parse_grid(&fit.grid, &series)?;
    let result = crops_run(&series, &grid, range.0, range.1, solver_config(fit, range.0))?;

    let mut config = base_config(fit, &series, &grid, sd);
    config.beta_min = Some(Num(range.0));
    config.beta_max = Some(Num(range.1));
    let mut path = PathSection::new(&result);
    let mut model = None;
    let mut extra = String::new();

    match args.select {
        Select::None => {}
        Select::Bic => {
            let idx = select_by_bic(&result, &series)
                .ok_or_else(|| CliError::Internal("penalty path is empty".into()))?;
            let chosen: &CpopResult = &result.models[idx];
            let seg = &chosen.segmentation;
            let bic = bic_score(seg, &series);
            path.selected = Some(Selection {
                method: "bic".into(),
                record: idx,
                m: seg.num_changepoints(),
                bic: match bic {
                    BicScore::Finite(v) => Some(Num(v)),
                    BicScore::PerfectFit => None,
                },
            });
            let section = ModelSection::new(seg, &series, chosen.beta);
            if let Some(p) = &args.model_out {
                let mut single = config.clone();
                single.beta = Some(Num(chosen.beta));
                single.beta_min = None;
                single.beta_max = None;
                let doc = ResultDocument {
                    schema_version: SCHEMA_VERSION,
                    kind: "detect".into(),
                    config: single,
                    model: Some(section.clone()),
                    path: None,
                };
                emit(Some(p), &doc.to_json()?)?;
            }
            if let Some(p) = &fit.fit_out {
                emit(Some(p), &fit_csv(seg, &series))?;
            }
            let shown = match bic {
                BicScore::Finite(v) => format_sig(v, 7),
                BicScore::PerfectFit => "-Inf".into(),
            };
            extra = format!(
                "\nselected by BIC ({shown}): beta = {}, {} changepoint(s)\n\n{}",
                format_sig(chosen.beta, 7),
                seg.num_changepoints(),
                summary_text(seg, &series, chosen.beta)
            );
            model = Some(section);
        }
        Select::ElbowData => {
            let rows = elbow_table(&result)
                .into_iter()
                .map(|(m, q)| vec![m as f64, q]);
            let p = args.elbow_out.as_deref();
            emit(p, &render_csv(&["m", "Qm"], rows))?;
        }
    }

    let summary = path_summary(&path, range);
    let doc = ResultDocument {
        schema_version: SCHEMA_VERSION,
        kind: "crops".into(),
        config,
        model,
        path: Some(path),
    };
    emit(Some(&fit.out), &doc.to_json()?)?;
    say(out, &format!("{summary}{extra}"))
}

fn parse_list(flag: &str, text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("{flag}: invalid number '{s}'")))
        })
        .collect()
}

fn parse_locations(spec: &str) -> CliResult<Vec<f64>> {
    if let Some(n) = spec.strip_prefix("even:") {
        let n: usize = n
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| CliError::Usage(format!("--x even:N needs a positive integer N, got '{spec}'")))?;
        return Ok((1..=n).map(|i| i as f64).collect());
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(CliError::Usage(format!("--x must be 'even:N' or an existing file, got '{spec}'")));
    }
    read_single_column(path, "x")
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let changepoints = parse_list("--changepoints", &args.changepoints)?;
    let slopes = parse_list("--change-slope", &args.change_slope)?;
    if changepoints.len() != slopes.len() {
        return Err(CliError::Usage(format!(
            "--changepoints has {} values but --change-slope has {}",
            changepoints.len(),
            slopes.len()
        )));
    }
    let spec = SlopeSpec::new(changepoints, slopes).map_err(|e| CliError::Usage(e.to_string()))?;
    let x = parse_locations(&args.x)?;
    let sd = match args.sd.parse::<f64>() {
        Ok(v) => NoiseScale::Constant(v),
        Err(_) => {
            let path = Path::new(&args.sd);
            if !path.exists() {
                return Err(CliError::Usage(format!(
                    "--sd must be a number or an existing file, got '{}'",
                    args.sd
                )));
            }
            let values = read_single_column(path, "sd")?;
            if values.len() != x.len() {
                return Err(CliError::Data(format!(
                    "{}: {} sd values for {} locations",
                    path.display(),
                    values.len(),
                    x.len()
                )));
            }
            NoiseScale::PerPoint(values)
        }
    };
    let y = simulate_series(&spec, &x, &sd, args.seed)?;
    let mean = mean_function(&spec, &x);
    let rows = (0..x.len()).map(|i| vec![x[i], y[i], mean[i]]);
    emit(args.out.as_deref(), &render_csv(&["x", "y", "mean"], rows))
}

pub fn estimate(args: &EstimateArgs, err: &mut dyn Write) -> CliResult<()> {
    let doc = ResultDocument::read(&args.document)?;
    let seg = doc.require_model()?.segmentation()?;
    let path = Path::new(&args.at);
    let at = if path.exists() {
        read_single_column(path, "x")?
    } else {
        parse_list("--at", &args.at)?
    };
    let (lo, hi) = (seg.knots[0].x, seg.knots[seg.knots.len() - 1].x);
    let outside = at.iter().filter(|&&x| x < lo || x > hi).count();
    if outside > 0 {
        let _ = writeln!(
            err,
            "warning: {outside} location(s) outside the fitted range [{}, {}]; values are extrapolated linearly",
            format_number(lo),
            format_number(hi)
        );
    }
    let rows = at.iter().map(|&x| vec![x, seg.evaluate_at(x)]);
    emit(args.out.as_deref(), &render_csv(&["x", "y_hat"], rows))
}

pub fn variance(cmd: &VarianceCommand, out: &mut dyn Write) -> CliResult<()> {
    match cmd {
        VarianceCommand::Ddiff { input } => {
            let y = read_single_column(input, "y")?;
            let v = estimate_variance_ddiff(&y)?;
            say(
                out,
                &format!("variance = {}\nsd = {}\n", format_number(v), format_number(v.sqrt())),
            )
        }
        VarianceCommand::Loglinear { input, fit, out: dest } => {
            let table = InputTable::read(input)?;
            let seg = ResultDocument::read(fit)?.require_model()?.segmentation()?;
            let residuals: Vec<f64> = table
                .x
                .iter()
                .zip(&table.y)
                .map(|(&x, &y)| y - seg.evaluate_at(x))
                .collect();
            let model = fit_loglinear_variance(&residuals, &table.x)?;
            let rows = table
                .x
                .iter()
                .zip(&table.y)
                .map(|(&x, &y)| vec![x, y, model.variance_at(x).sqrt()]);
            let csv = render_csv(&["x", "y", "sd"], rows);
            // keep standard output clean when the CSV itself goes there
            if dest.is_some() {
                say(
                    out,
                    &format!(
                        "log variance = a + b x with a = {}, b = {}\n",
                        format_number(model.a),
                        format_number(model.b)
                    ),
                )?;
            }
            emit(dest.as_deref(), &csv)
        }
    }
}
