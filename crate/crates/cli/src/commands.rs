use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ccsc::io::{
    decode_csv, encode_csv, read_cdic, read_cimg, read_cimg_raw, write_atomic, write_cdic, write_cimg,
    write_real_cimg,
};
use ccsc::metrics::MetricReport;
use ccsc::sim::{
    boxcar_filter, make_pattern, mc_step_experiment, simulate_interferogram, CoherenceSpec, Method, PatternKind,
    PatternSpec, StepExperiment,
};
use ccsc::{ccdl_train, ComplexImage, FilterBank, GradientFilters, SolverConfig, TrainConfig, TrainingBatch};

use crate::render::write_phase_png;
use crate::{ConvertArgs, DenoiseArgs, McStepArgs, MetricsArgs, SimulateArgs, TrainArgs};

/// 1 for I/O failures, 2 for everything else.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ccsc::Error>() {
            return if e.is_invalid_input() { 2 } else { 1 };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 1;
        }
    }
    2
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, |w| w.write_all(text.as_bytes())).with_context(|| format!("writing {}", path.display()))
}

fn load_image(path: &Path) -> Result<ComplexImage> {
    read_cimg(path).with_context(|| format!("reading {}", path.display()))
}

fn load_bank(path: &Path) -> Result<FilterBank> {
    read_cdic(path).with_context(|| format!("reading {}", path.display()))
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let mut paths: Vec<PathBuf> = fs::read_dir(&a.input)
        .with_context(|| format!("listing {}", a.input.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .with_context(|| format!("listing {}", a.input.display()))?;
    paths.retain(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("cimg")));
    paths.sort();
    if paths.is_empty() {
        bail!("no .cimg rasters in {}", a.input.display());
    }
    let images = paths.iter().map(|p| load_image(p)).collect::<Result<Vec<_>>>()?;
    let batch = TrainingBatch::new(images).context("training rasters must share one size")?;

    let mut config = TrainConfig::new(a.filters, a.filter_size)
        .with_lambda(a.lambda)
        .with_iters(a.iters)
        .with_seed(a.seed);
    config.rho = a.rho.unwrap_or_else(|| TrainConfig::default_rho(a.lambda));
    config.sigma = a.sigma;
    let trained = ccdl_train(&batch, &config)?;
    if trained.degenerate_projections > 0 {
        log::warn!("{} projections hit a zero-norm filter", trained.degenerate_projections);
    }

    write_cdic(&a.out, &trained.bank).with_context(|| format!("writing {}", a.out.display()))?;
    let trace_path = a.trace.clone().unwrap_or_else(|| with_suffix(&a.out, ".trace.txt"));
    let mut text = format!("# initial objective {:.12e}\n", trained.initial_objective);
    text.push_str(&trained.trace.to_text());
    write_text(&trace_path, &text)?;
    if let Some(last) = trained.trace.last() {
        println!(
            "trained {} filters of {}x{} on {} rasters (lambda {}, rho {}, sigma {}): objective {:.6e} -> {:.6e}",
            a.filters,
            a.filter_size,
            a.filter_size,
            batch.len(),
            config.lambda,
            config.rho,
            config.sigma,
            trained.initial_objective,
            last.objective
        );
    }
    Ok(())
}

fn solver_config(lambda: f64, mu: f64, rho: Option<f64>) -> SolverConfig {
    let cfg = SolverConfig::new(lambda, mu);
    match rho {
        Some(r) => cfg.with_rho(r),
        None => cfg,
    }
}

pub fn denoise(a: &DenoiseArgs) -> Result<()> {
    let image = load_image(&a.input)?;
    let bank = load_bank(&a.dict)?;
    let cfg = solver_config(a.lambda, a.mu, a.rho).with_tol(a.tol).with_max_iters(a.iters);
    let (stack, trace) = if a.mu == 0.0 {
        ccsc::encode_comcsc(&image, &bank, &cfg)?
    } else {
        ccsc::encode(&image, &bank, &cfg, &GradientFilters::default())?
    };
    let restored = ccsc::conv::convolve_sum(&bank, &stack)?;
    write_cimg(&a.out, &restored).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(png) = &a.png {
        write_phase_png(png, &restored)?;
    }
    if let Some(path) = &a.trace {
        write_text(path, &trace.to_text())?;
    }
    let status = if trace.converged { "converged" } else { "stopped" };
    println!("{status} after {} iterations", trace.iterations());
    Ok(())
}

fn coherence_spec(a: &SimulateArgs) -> Result<CoherenceSpec> {
    match (&a.coherence, &a.coherence_ramp) {
        (Some(g), None) => Ok(CoherenceSpec::Constant(*g)),
        (None, Some(ramp)) => {
            let parts: Vec<&str> = ramp.split(',').map(str::trim).collect();
            let [left, right] = parts.as_slice() else {
                bail!("--coherence-ramp expects LEFT,RIGHT, got `{ramp}`");
            };
            let parse = |s: &str| s.parse::<f64>().with_context(|| format!("bad coherence value `{s}`"));
            Ok(CoherenceSpec::Ramp {
                left: parse(left)?,
                right: parse(right)?,
            })
        }
        (None, None) => bail!("one of --coherence or --coherence-ramp is required"),
        (Some(_), Some(_)) => bail!("--coherence and --coherence-ramp are exclusive"),
    }
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let kind: PatternKind = a.pattern.parse()?;
    let spec = PatternSpec::new(kind, a.rows, a.cols, coherence_spec(a)?);
    let scene = make_pattern(&spec)?;
    let truth = scene.clean();
    let noisy = simulate_interferogram(&scene, a.seed);
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let out = |name: &str| a.out_dir.join(name);
    write_cimg(&out("truth.cimg"), &truth).context("writing truth raster")?;
    write_cimg(&out("noisy.cimg"), &noisy).context("writing noisy raster")?;
    write_real_cimg(&out("coherence.cimg"), &scene.coherence).context("writing coherence raster")?;
    if a.png {
        write_phase_png(&out("truth.png"), &truth)?;
        write_phase_png(&out("noisy.png"), &noisy)?;
    }
    Ok(())
}

pub fn metrics(a: &MetricsArgs) -> Result<()> {
    let truth = load_image(&a.truth)?;
    let estimate = load_image(&a.estimate)?;
    let report = MetricReport::compute(&truth, &estimate, a.window, MetricReport::DEFAULT_BINS)?;
    if report.psnr_db.is_infinite() {
        println!("PSNR: inf dB");
    } else {
        println!("PSNR: {:.2} dB", report.psnr_db);
    }
    let valid: Vec<f64> = report.colinearity.as_slice().iter().copied().filter(|v| v.is_finite()).collect();
    let mean = valid.iter().sum::<f64>() / valid.len() as f64;
    let above = valid.iter().filter(|v| **v > 0.9).count() as f64 / valid.len() as f64;
    println!("colinearity: mean {mean:.4}, fraction above 0.9 {above:.4}");
    if let Some(path) = &a.residual {
        write_real_cimg(path, &report.residual_phase).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &a.colinearity {
        write_real_cimg(path, &report.colinearity).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

type Filter<'a> = Box<dyn Fn(&ComplexImage) -> ccsc::Result<ComplexImage> + Sync + 'a>;

pub fn mc_step(a: &McStepArgs) -> Result<()> {
    if a.methods.is_empty() {
        bail!("at least one method is required");
    }
    let bank = a.dict.as_deref().map(load_bank).transpose()?;
    let cfg = SolverConfig::new(a.lambda, a.mu);
    let needs_bank = || {
        bank.as_ref()
            .ok_or_else(|| anyhow::anyhow!("--dict is required for the comcsc methods"))
    };
    let mut filters: Vec<(String, Filter)> = Vec::new();
    for name in &a.methods {
        let key = name.trim().to_ascii_lowercase();
        let f: Filter = match key.as_str() {
            "noisy" | "identity" => Box::new(|s: &ComplexImage| Ok(s.clone())),
            "boxcar" => {
                let w = a.window;
                Box::new(move |s: &ComplexImage| boxcar_filter(s, w))
            }
            "comcsc" => {
                let b = needs_bank()?;
                let c = SolverConfig { mu: 0.0, ..cfg };
                Box::new(move |s: &ComplexImage| ccsc::denoise_comcsc(s, b, &c))
            }
            "comcsc-gr" | "comcsc_gr" => {
                let b = needs_bank()?;
                let grads = GradientFilters::default();
                Box::new(move |s: &ComplexImage| ccsc::denoise(s, b, &cfg, &grads))
            }
            other => bail!("unknown method `{other}`; expected noisy, boxcar, comcsc or comcsc-gr"),
        };
        filters.push((key, f));
    }
    let methods: Vec<Method> = filters.iter().map(|(n, f)| (n.as_str(), f.as_ref() as _)).collect();
    let exp = StepExperiment::new(a.trials, a.coherence, a.seed)
        .with_rows(a.rows)
        .with_cols(a.cols);
    let profiles = mc_step_experiment(&exp, &methods)?;

    let mut csv = String::from("column");
    for p in &profiles {
        csv.push_str(&format!(",{0}_mean,{0}_std", p.name));
    }
    csv.push('\n');
    for c in 0..exp.cols {
        csv.push_str(&c.to_string());
        for p in &profiles {
            csv.push_str(&format!(",{:?},{:?}", p.mean[c], p.std[c]));
        }
        csv.push('\n');
    }
    write_text(&a.out, &csv)
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn convert(a: &ConvertArgs) -> Result<()> {
    match (is_csv(&a.input), is_csv(&a.output)) {
        (false, true) => {
            let raster = read_cimg_raw(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
            write_atomic(&a.output, |w| encode_csv(w, &raster)).with_context(|| format!("writing {}", a.output.display()))
        }
        (true, false) => {
            let file = fs::File::open(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
            let raster = decode_csv(&mut BufReader::new(file))?;
            write_atomic(&a.output, |w| ccsc::io::encode_cimg(w, raster.rows, raster.cols, &raster.data))
                .with_context(|| format!("writing {}", a.output.display()))
        }
        _ => bail!("convert needs exactly one .csv side"),
    }
}
