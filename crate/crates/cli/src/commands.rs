use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use mls_core::io::{
    parse_config, read_labels, read_mask, read_model, read_ppm, read_stack, write_labels, write_model, write_ppm,
    write_stack, RunConfig,
};
use mls_core::learner::{train_with_history, LinearPredictor};
use mls_core::metrics::{confusion, report, ConfusionMatrix};
use mls_core::mls::{assign, evolve_with_observer, refine, ClassicSpeed, DeepSpeed, SpeedProvider};
use mls_core::synth::{generate, generate_void_case, SceneSpec};
use mls_core::{edt, init_phi, EvolutionConfig, FieldStack, LabelMap, Stack};

use crate::{Command, EdtArgs, EvalArgs, EvolveArgs, Mode, RefineArgs, SynthArgs, TrainArgs};

pub(crate) fn execute(command: Command) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var("MLS_THREADS") {
        let n: usize = value
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("MLS_THREADS must be a positive integer, got `{value}`"))?;
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("starting worker threads")?;
    pool.install(|| match command {
        Command::Synth(a) => synth(&a),
        Command::Evolve(a) => evolve(&a),
        Command::Refine(a) => refine_cmd(&a),
        Command::Train(a) => train(&a),
        Command::Eval(a) => eval(&a),
        Command::Edt(a) => edt_cmd(&a),
    })
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => Ok(parse_config(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn scene_name(i: usize) -> String {
    format!("scene_{i:04}")
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

/// Files in `dir` with extension `ext`, sorted by name.
fn list_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading directory {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == ext) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn synth(args: &SynthArgs) -> Result<()> {
    let images = args.out.join("images");
    let labels = args.out.join("labels");
    create_dir(&images)?;
    create_dir(&labels)?;
    // Per-scene seeds and flips are drawn up front so the output does not
    // depend on the number of worker threads.
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let specs: Vec<SceneSpec> = (0..args.count)
        .map(|_| SceneSpec {
            size: args.size,
            n_classes: args.classes,
            shapes_per_class: args.shapes,
            noise_sigma: args.noise,
            seed: rng.random(),
            flip: args.flip && rng.random_bool(0.5),
        })
        .collect();
    specs.par_iter().enumerate().try_for_each(|(i, spec)| -> Result<()> {
        let (image, gt) = if args.void_class {
            generate_void_case::<f64>(spec)?
        } else {
            generate::<f64>(spec)?
        };
        let name = scene_name(i);
        write_ppm(&images.join(format!("{name}.ppm")), &image)?;
        write_labels(&labels.join(format!("{name}.pgm")), &gt)?;
        Ok(())
    })
}

fn evolve(args: &EvolveArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let image: FieldStack = read_ppm(&args.image)?;
    let scores: Stack<f64> = read_stack(&args.scores)?;
    ensure!(
        scores.shape() == image.shape(),
        "scores are {:?} but the image is {:?}",
        scores.shape(),
        image.shape()
    );
    let n = scores.n_planes();
    let phi0 = init_phi(&scores)?;
    let (speed, evo): (Box<dyn SpeedProvider<f64> + '_>, EvolutionConfig) = match args.mode {
        Mode::Classic => (
            Box::new(ClassicSpeed::new(&image, n, cfg.rho_classic)),
            cfg.classic_evolution(),
        ),
        Mode::Deep => (Box::new(DeepSpeed::new(&scores, cfg.evolution.rho)?), cfg.evolution.clone()),
    };

    let frames = args.dump_frames.as_deref();
    if let Some(dir) = frames {
        create_dir(dir)?;
        dump_frame(dir, 0, &phi0, &assign(&phi0))?;
    }
    let mut dump_error = None;
    let (phi, _) = evolve_with_observer(&phi0, speed.as_ref(), &evo, |rec, phi, labels| {
        if let (Some(dir), None) = (frames, &dump_error) {
            dump_error = dump_frame(dir, rec.iteration + 1, phi, labels).err();
        }
    })?;
    if let Some(e) = dump_error {
        return Err(e);
    }
    write_labels(&args.out, &assign(&phi))?;
    Ok(())
}

fn dump_frame(dir: &Path, index: usize, phi: &Stack<f64>, labels: &LabelMap) -> Result<()> {
    write_labels(&dir.join(format!("frame_{index:04}.pgm")), labels)?;
    write_stack(&dir.join(format!("phi_{index:04}.mls")), phi)?;
    Ok(())
}

fn refine_cmd(args: &RefineArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let image: FieldStack = read_ppm(&args.image)?;
    let predictor = LinearPredictor::new(read_model::<f64>(&args.model)?);
    let steps = args.steps.unwrap_or(cfg.train.steps);
    let result = refine(&image, &predictor, steps, &cfg.evolution)?;
    write_labels(&args.out, &result.labels)?;
    Ok(())
}

fn train(args: &TrainArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let images = list_files(&args.data.join("images"), "ppm")?;
    ensure!(!images.is_empty(), "no .ppm images under {}", args.data.join("images").display());
    let dataset: Vec<(FieldStack, LabelMap)> = images
        .par_iter()
        .map(|path| -> Result<_> {
            let stem = path.file_stem().context("image without a file name")?;
            let label_path = args.data.join("labels").join(stem).with_extension("pgm");
            let image = read_ppm(path)?;
            let gt = read_labels(&label_path, args.classes)?;
            ensure!(
                gt.shape() == image.shape(),
                "{} does not match the shape of {}",
                label_path.display(),
                path.display()
            );
            Ok((image, gt))
        })
        .collect::<Result<_>>()?;
    let n_classes = match args.classes {
        Some(n) => n,
        None => {
            let max = dataset.iter().filter_map(|(_, gt)| gt.max_label()).max().unwrap_or(0);
            (max as usize + 1).max(2)
        }
    };
    let report = train_with_history(&dataset, n_classes, None, &cfg.train, &cfg.evolution)?;
    write_model(&args.out, &report.params)?;
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<()> {
    if args.classes == 0 {
        bail!("--classes must be at least 1");
    }
    let gts = list_files(&args.gt, "pgm")?;
    ensure!(!gts.is_empty(), "no .pgm label maps in {}", args.gt.display());
    let matrices: Vec<ConfusionMatrix> = gts
        .par_iter()
        .map(|gt_path| -> Result<_> {
            let name = gt_path.file_name().context("label map without a file name")?;
            let pred_path = args.pred.join(name);
            let gt = read_labels(gt_path, Some(args.classes))?;
            let pred = read_labels(&pred_path, Some(args.classes))?;
            confusion(&pred, &gt, args.classes).with_context(|| format!("comparing {}", pred_path.display()))
        })
        .collect::<Result<_>>()?;
    // Summed in file order so the result does not depend on scheduling.
    let mut total = ConfusionMatrix::zeros(args.classes);
    for m in &matrices {
        total.accumulate(m)?;
    }
    print!("{}", report(&total)?);
    Ok(())
}

fn edt_cmd(args: &EdtArgs) -> Result<()> {
    let mask = read_mask(&args.mask)?;
    let distances = edt::<f64>(&mask);
    write_stack(&args.out, &Stack::new(vec![distances])?)?;
    Ok(())
}
