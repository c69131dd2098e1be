use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use adaptive_boxfilter::boxspline2d::{kernel_grid_eval, RadialBoxSpline};
use adaptive_boxfilter::engine::{
    filter_constant, filter_with, reference_filter_with, FilterOptions, DEFAULT_REFERENCE_BUDGET,
};
use adaptive_boxfilter::ops2d::fd_mesh4;
use adaptive_boxfilter::scalemap::{
    constant_map, from_ellipse_field, read_map, structure_tensor_map, write_map, ClampReport,
    StructureTensorParams,
};
use adaptive_boxfilter::{exec, Exec, Image2D, Rect, ScaleMap, ScaleVector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::args::{
    BenchArgs, Command, CompareArgs, FilterArgs, KernelArgs, KernelShape, MapGenArgs, Oracle, Threads,
};
use crate::error::CliError;
use crate::pgm::{self, Graymap};

type CmdResult = Result<(), CliError>;

/// Runs one command, writing `key=value` results to `out`.
pub fn run(command: &Command, out: &mut dyn Write) -> CmdResult {
    match command {
        Command::Filter(a) => cmd_filter(a, out),
        Command::Kernel(a) => cmd_kernel(a, out),
        Command::Compare(a) => cmd_compare(a, out),
        Command::Bench(a) => cmd_bench(a, out),
        Command::MapGen(a) => cmd_map_gen(a, out),
    }
}

macro_rules! emit {
    ($out:expr, $key:expr, $($fmt:tt)+) => {
        writeln!($out, "{}={}", $key, format_args!($($fmt)+)).map_err(|e| CliError::io("<stdout>", e))?
    };
}

/// SHA-256 over the little-endian bit patterns of the samples, in hex.
pub fn checksum<'a>(images: impl IntoIterator<Item = &'a Image2D>) -> String {
    let mut hasher = Sha256::new();
    for img in images {
        for v in img.samples() {
            hasher.update(v.to_bits().to_le_bytes());
        }
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CmdResult {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn read_graymap(path: &Path) -> Result<Graymap, CliError> {
    pgm::decode(&read_bytes(path)?).map_err(|e| CliError::Malformed {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

fn read_scale_map(path: &Path) -> Result<ScaleMap, CliError> {
    read_map(&read_bytes(path)?).map_err(|e| CliError::Malformed {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

/// Resolves the kernel flags into one scale vector, if any were given.
fn resolve_shape(shape: &KernelShape) -> Result<Option<(ScaleVector4, ClampReport)>, CliError> {
    if let Some(s) = &shape.scales {
        let a: [f64; 4] = s
            .as_slice()
            .try_into()
            .map_err(|_| CliError::Usage(format!("--scales needs 4 values, got {}", s.len())))?;
        return Ok(Some((ScaleVector4::new(a)?, ClampReport::default())));
    }
    let Some(sigma1) = shape.sigma1 else {
        return Ok(None);
    };
    let sigma2 = shape.sigma2.unwrap_or(sigma1);
    let theta = shape.theta.unwrap_or(0.0).to_radians();
    let (map, report) = from_ellipse_field(1, 1, &[sigma1], &[sigma2], &[theta])?;
    Ok(Some((map.get(0, 0), report)))
}

/// Runs `f` with the execution policy selected by `--threads`.
fn with_exec<R: Send>(threads: &Threads, f: impl FnOnce(Exec) -> R + Send) -> Result<R, CliError> {
    match threads.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(1) => Ok(f(Exec::Sequential)),
        Some(n) => Ok(exec::with_threads(n, || f(Exec::Parallel))),
        None => Ok(f(Exec::Parallel)),
    }
}

fn emit_rect(out: &mut dyn Write, prefix: &str, r: Option<Rect>) -> CmdResult {
    let r = r.unwrap_or_default();
    emit!(out, prefix, "{},{},{},{}", r.x0, r.y0, r.x1, r.y1);
    Ok(())
}

fn cmd_filter(args: &FilterArgs, out: &mut dyn Write) -> CmdResult {
    let input = read_graymap(&args.input)?;
    let image = input.to_image();
    let maxval = match args.depth.as_deref() {
        Some("8") => 255,
        Some("16") => 65535,
        _ => input.maxval,
    };
    let shape = resolve_shape(&args.shape)?;
    let map = match (&args.map, args.structure_tensor) {
        (Some(path), _) => Some((read_scale_map(path)?, ClampReport::default())),
        (None, true) => Some(structure_tensor_map(&image, &StructureTensorParams::default())?),
        (None, false) => None,
    };

    let start = Instant::now();
    let (result, report) = with_exec(&args.threads, |exec| {
        let opts = FilterOptions {
            mean_subtract: args.mean_subtract.enabled(),
            exec,
            ..FilterOptions::default()
        };
        match (&shape, &map) {
            (Some((a, report)), _) => filter_constant(&image, a, &opts).map(|r| (r, report.clone())),
            (None, Some((m, report))) => filter_with(&image, m, &opts).map(|r| (r, report.clone())),
            (None, None) => unreachable!("clap requires a scale source"),
        }
    })??;
    let elapsed = start.elapsed();

    write_bytes(&args.out, &pgm::encode(&Graymap::from_image(&result, maxval)))?;
    emit!(out, "width", "{}", result.width());
    emit!(out, "height", "{}", result.height());
    emit_rect(out, "valid", result.valid_region())?;
    emit!(out, "projected_pixels", "{}", report.projected.len());
    emit!(out, "scale_clamped_pixels", "{}", report.scale_clamped.len());
    emit!(out, "elapsed_ms", "{:.3}", elapsed.as_secs_f64() * 1e3);
    emit!(out, "checksum", "{}", checksum([&result]));
    emit!(out, "out", "{}", args.out.display());
    Ok(())
}

fn sidecar_path(args: &KernelArgs) -> PathBuf {
    args.sidecar.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".txt");
        p.into()
    })
}

fn cmd_kernel(args: &KernelArgs, out: &mut dyn Write) -> CmdResult {
    let (a, report) = resolve_shape(&args.shape)?.expect("clap requires a kernel shape");
    if args.oracle_res < 8 {
        return Err(CliError::Usage(format!("--oracle-res must be at least 8, got {}", args.oracle_res)));
    }
    let grid = kernel_grid_eval(&RadialBoxSpline::four(a), 1.0 / f64::from(args.oracle_res))?;
    let peak = grid.values().iter().cloned().fold(0.0, f64::max);
    let image = Image2D::new(
        grid.width(),
        grid.height(),
        grid.values().iter().map(|v| v / peak).collect(),
    )?;
    write_bytes(&args.out, &pgm::encode(&Graymap::from_image(&image, 65535)))?;

    let mesh = fd_mesh4(&a);
    let cov = a.covariance();
    let [a1, a2, a3, a4] = a.components();
    let mut side = Vec::new();
    emit!(side, "scales", "{a1},{a2},{a3},{a4}");
    emit!(side, "covariance_xx", "{}", cov.xx);
    emit!(side, "covariance_xy", "{}", cov.xy);
    emit!(side, "covariance_yy", "{}", cov.yy);
    emit!(side, "alpha", "{}", mesh.alpha());
    emit!(side, "tau", "{},{}", mesh.shift()[0], mesh.shift()[1]);
    emit!(side, "grid_step", "{}", grid.step());
    emit!(side, "grid_mass", "{}", grid.mass());
    emit!(side, "projected", "{}", !report.projected.is_empty());
    for (i, v) in mesh.vertices().iter().enumerate() {
        emit!(side, format!("vertex_{:02}", i + 1), "{},{},{}", v.position[0], v.position[1], v.weight);
    }
    let sidecar = sidecar_path(args);
    write_bytes(&sidecar, &side)?;

    emit!(out, "width", "{}", grid.width());
    emit!(out, "height", "{}", grid.height());
    emit!(out, "covariance", "{},{},{}", cov.xx, cov.xy, cov.yy);
    emit!(out, "out", "{}", args.out.display());
    emit!(out, "sidecar", "{}", sidecar.display());
    Ok(())
}

fn parse_size(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("--size must look like 24x24, got {s:?}"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let (w, h) = (w.trim().parse().map_err(|_| bad())?, h.trim().parse().map_err(|_| bad())?);
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

/// Uniform noise in `[0, 1)`.
pub fn random_image(width: usize, height: usize, seed: u64) -> Image2D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..width * height).map(|_| rng.gen_range(0.0..1.0)).collect();
    Image2D::new(width, height, samples).expect("non-empty finite samples")
}

/// Independent uniform scales per pixel and direction.
pub fn random_scale_map(width: usize, height: usize, lo: f64, hi: f64, seed: u64) -> Result<ScaleMap, CliError> {
    if !(lo > 0.0 && hi > lo) {
        return Err(CliError::Usage(format!("--random-scales needs 0 < lo < hi, got {lo},{hi}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ca1_e5ca_1e00_0000);
    let scales = (0..width * height)
        .map(|_| ScaleVector4::new(std::array::from_fn(|_| rng.gen_range(lo..hi))))
        .collect::<Result<_, _>>()?;
    Ok(ScaleMap::new(width, height, scales)?)
}

fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> CmdResult {
    if args.oracle_res < 16 {
        return Err(CliError::Usage(format!("--oracle-res must be at least 16, got {}", args.oracle_res)));
    }
    let image = match &args.input {
        Some(path) => read_graymap(path)?.to_image(),
        None => {
            let (w, h) = parse_size(&args.size)?;
            random_image(w, h, args.seed)
        }
    };
    let (w, h) = image.dims();
    let map = if let Some(path) = &args.map {
        read_scale_map(path)?
    } else if let Some((a, _)) = resolve_shape(&args.shape)? {
        constant_map(w, h, a.components())?
    } else {
        let range = args.random_scales.as_deref().unwrap_or(&[1.0, 4.0]);
        random_scale_map(w, h, range[0], range[1], args.seed)?
    };
    let step = 1.0 / f64::from(args.oracle_res);
    let budget = args.budget.unwrap_or(DEFAULT_REFERENCE_BUDGET);
    let (fast, oracle) = with_exec(&args.threads, |exec| {
        let opts = FilterOptions {
            exec,
            ..FilterOptions::default()
        };
        let fast = filter_with(&image, &map, &opts)?;
        let oracle = match args.oracle {
            Oracle::Reference => reference_filter_with(&image, &map, step, exec, budget)?,
            Oracle::Engine => filter_with(&image, &map, &FilterOptions::sequential())?,
        };
        Ok::<_, adaptive_boxfilter::Error>((fast, oracle))
    })??;

    let region = fast.valid_region().filter(|r| !r.is_empty());
    let full = Rect::new(0, 0, w, h);
    let r = region.unwrap_or(full);
    let diffs: Vec<f64> = r.pixels().map(|(x, y)| (fast.get(x, y) - oracle.get(x, y)).abs()).collect();
    let max_abs = diffs.iter().cloned().fold(0.0, f64::max);
    let mean_abs = diffs.iter().sum::<f64>() / diffs.len() as f64;
    emit!(out, "width", "{w}");
    emit!(out, "height", "{h}");
    emit!(out, "region", "{}", if region.is_some() { "valid" } else { "full" });
    emit_rect(out, "compared", Some(r))?;
    emit!(out, "max_abs", "{max_abs:e}");
    emit!(out, "mean_abs", "{mean_abs:e}");
    emit!(out, "tolerance", "{:e}", args.tolerance);
    emit!(out, "checksum", "{}", checksum([&fast]));
    let pass = max_abs <= args.tolerance;
    emit!(out, "pass", "{pass}");
    if pass {
        Ok(())
    } else {
        Err(CliError::ToleranceExceeded {
            max_abs,
            tolerance: args.tolerance,
        })
    }
}

/// Timing of a constant-scale ladder.
#[derive(Debug, Clone)]
pub struct LadderReport {
    /// `(scale, nanoseconds per pixel)`, fastest of the repeats.
    pub rungs: Vec<(f64, f64)>,
    /// Checksum over every rung's output.
    pub checksum: String,
}

impl LadderReport {
    /// Slowest over fastest rung.
    pub fn ratio(&self) -> f64 {
        let (lo, hi) = self
            .rungs
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.1), hi.max(r.1)));
        hi / lo
    }
}

/// Times `filter_constant` for each uniform scale in `ladder`. Repeats are
/// interleaved across rungs so slow drifts of the machine hit all of them.
pub fn bench_ladder(image: &Image2D, ladder: &[f64], repeat: usize, exec: Exec) -> Result<LadderReport, CliError> {
    let scales = ladder
        .iter()
        .map(|&a| ScaleVector4::uniform(a))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = FilterOptions {
        exec,
        ..FilterOptions::default()
    };
    let pixels = (image.width() * image.height()) as f64;
    let mut best = vec![f64::INFINITY; scales.len()];
    let mut outputs = Vec::with_capacity(scales.len());
    for round in 0..repeat.max(1) {
        for (i, a) in scales.iter().enumerate() {
            let start = Instant::now();
            let result = filter_constant(image, a, &opts)?;
            best[i] = best[i].min(start.elapsed().as_nanos() as f64 / pixels);
            if round == 0 {
                outputs.push(result);
            }
        }
    }
    Ok(LadderReport {
        rungs: ladder.iter().cloned().zip(best).collect(),
        checksum: checksum(&outputs),
    })
}

fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> CmdResult {
    if args.size == 0 || args.ladder.is_empty() {
        return Err(CliError::Usage("--size and --ladder must be non-empty".into()));
    }
    let image = random_image(args.size, args.size, args.seed);
    let report = with_exec(&args.threads, |exec| bench_ladder(&image, &args.ladder, args.repeat, exec))??;
    emit!(out, "pixels", "{}", args.size * args.size);
    for (a, ns) in &report.rungs {
        emit!(out, format!("ns_per_pixel_a{a}"), "{ns:.3}");
    }
    emit!(out, "ratio", "{:.4}", report.ratio());
    emit!(out, "checksum", "{}", report.checksum);
    Ok(())
}

fn cmd_map_gen(args: &MapGenArgs, out: &mut dyn Write) -> CmdResult {
    let image = read_graymap(&args.input)?.to_image();
    let params = StructureTensorParams {
        tensor_sigma: args.tensor_sigma,
        sigma_base: args.sigma_base,
        sigma_along_max: args.sigma_along,
        sigma_across_min: args.sigma_across,
        coherence_k: args.coherence_k,
    };
    let (map, report) = structure_tensor_map(&image, &params)?;
    write_bytes(&args.out, &write_map(&map))?;
    emit!(out, "width", "{}", map.width());
    emit!(out, "height", "{}", map.height());
    emit!(out, "projected_pixels", "{}", report.projected.len());
    emit!(out, "scale_clamped_pixels", "{}", report.scale_clamped.len());
    emit!(out, "out", "{}", args.out.display());
    Ok(())
}
