use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use rayon::prelude::*;
use simseg::correct::correct_all;
use simseg::detect::Detection;
use simseg::io::{self, DatasetLayout};
use simseg::metrics::{self, EvalOptions, EvalResult, LabelMatching, SegmentMatching, VideoTally};
use simseg::postprocess::{self, PredictionSet, SmoothConfig};
use simseg::synth::{self, Means, SegmentLengths, SynthSpec};
use simseg::{CorrectionConfig, DetectConfig, LabelSequence};

use crate::labels::Codec;
use crate::{
    plot, CorrectArgs, DatasetArgs, DetectArgs, EvalArgs, Outcome, PlotArgs, SmoothArgs, SynthArgs,
    VoteArgs,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IdMatching {
    None,
    Hungarian,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum F1Matching {
    Maximum,
    Greedy,
}

fn layout(ds: &DatasetArgs) -> Result<Option<DatasetLayout>> {
    Ok(match (&ds.manifest, &ds.data) {
        (Some(m), _) => Some(DatasetLayout::from_manifest(m)?),
        (None, Some(root)) => Some(DatasetLayout::standard(root)?),
        (None, None) => None,
    })
}

/// Video ids and output directory of a batch run.
fn batch(ds: &DatasetArgs) -> Result<(Vec<String>, PathBuf)> {
    let split = ds
        .split
        .as_ref()
        .context("give an input file, or --split for a batch run")?;
    let out_dir = ds.out_dir.clone().context("batch runs need --out-dir")?;
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    Ok((io::load_bundle(split)?, out_dir))
}

fn need_layout(ds: &DatasetArgs) -> Result<DatasetLayout> {
    layout(ds)?.context("batch runs need --data (or SIMSEG_DATA) or --manifest")
}

/// Runs `f` on every id in parallel; results keep the input order.
fn for_each_video<T, F>(ids: &[String], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&str) -> Result<T> + Sync,
{
    ids.par_iter()
        .map(|id| f(id).with_context(|| format!("video {id}")))
        .collect()
}

fn describe(d: &Detection) -> String {
    let p = &d.proposals;
    format!(
        "b_intrv={}\ncosine candidates={} kept={}\ndtw candidates={} kept={}\ncluster candidates={} kept={}\nboundaries={}\n",
        p.b_intrv,
        p.cosine_candidates.len(),
        p.cosine_bounds.len(),
        p.dtw_candidates.len(),
        p.dtw_bounds.len(),
        d.raw.cluster.bounds.len(),
        p.cluster_bounds.len(),
        d.boundaries.len(),
    )
}

fn degenerate(d: &Detection) -> bool {
    d.raw.cluster.degenerate || d.boundaries.is_empty()
}

pub fn detect(a: &DetectArgs, seed: u64) -> Result<Outcome> {
    let cfg = DetectConfig {
        b_intrv: a.b_intrv,
        num_classes: a.num_classes,
        dim_reduce: a.dim_reduce,
        dtw_unit: a.dtw_unit,
        seed,
        kmeans_restarts: a.kmeans_restarts,
    };
    let run =
        |features: &Path, out: Option<&Path>, labels_out: Option<&Path>| -> Result<Detection> {
            let feat = io::load_features(features, a.orientation)?;
            let d = simseg::detect::detect(&feat, &cfg)?;
            if a.b_intrv == simseg::Setting::Auto {
                log::info!(
                    "{}: b_intrv auto resolved to {}",
                    features.display(),
                    d.proposals.b_intrv
                );
            }
            if let Some(out) = out {
                io::save_boundaries(out, &d.boundaries)?;
            }
            if let Some(path) = labels_out {
                Codec::Numeric.save(path, &d.segment_labels())?;
            }
            Ok(d)
        };

    if let Some(features) = &a.features {
        let d = run(features, a.out.as_deref(), a.labels_out.as_deref())?;
        print!("{}", describe(&d));
        if a.out.is_none() {
            print!("{}", io::format_boundaries(&d.boundaries));
        }
        return Ok(report_degenerate(&[(features.display().to_string(), &d)]));
    }

    let layout = need_layout(&a.dataset)?;
    let (ids, out_dir) = batch(&a.dataset)?;
    let labels_dir = out_dir.join("labels");
    if a.labels_out.is_some() {
        fs::create_dir_all(&labels_dir)?;
    }
    let found = for_each_video(&ids, |id| {
        let labels_out = a
            .labels_out
            .as_ref()
            .map(|_| labels_dir.join(format!("{id}.txt")));
        run(
            &layout.features_of(id),
            Some(&out_dir.join(format!("{id}.txt"))),
            labels_out.as_deref(),
        )
    })?;
    for (id, d) in ids.iter().zip(&found) {
        log::info!(
            "{id}: {} boundaries (b_intrv {})",
            d.boundaries.len(),
            d.proposals.b_intrv
        );
    }
    let named: Vec<(String, &Detection)> = ids.iter().cloned().zip(&found).collect();
    Ok(report_degenerate(&named))
}

fn report_degenerate(runs: &[(String, &Detection)]) -> Outcome {
    let mut outcome = Outcome::Done;
    for (name, d) in runs {
        if degenerate(d) {
            log::warn!(
                "{name}: degenerate detection ({})",
                if d.raw.cluster.degenerate {
                    "empty cluster"
                } else {
                    "no boundaries"
                }
            );
            outcome = Outcome::Degenerate;
        }
    }
    outcome
}

fn pred_dir(given: &Option<PathBuf>, ds: &DatasetArgs) -> Result<PathBuf> {
    if let Some(p) = given {
        return Ok(p.clone());
    }
    need_layout(ds)?
        .predictions
        .context("no prediction directory: pass --pred-dir or set `predictions` in the manifest")
}

/// Batch runs fall back to the dataset's mapping.
fn batch_codec(mapping: &Option<PathBuf>, batch: bool, ds: &DatasetArgs) -> Result<Codec> {
    let fallback = match (mapping, batch) {
        (None, true) => layout(ds)?.map(|l| l.mapping),
        _ => None,
    };
    Codec::new(mapping.as_deref().or(fallback.as_deref()))
}

pub fn correct(a: &CorrectArgs, seed: u64) -> Result<Outcome> {
    let cfg = CorrectionConfig {
        b_win: a.b_win,
        b_seg: a.b_seg,
        seed,
        ..CorrectionConfig::default()
    };
    cfg.validate()?;
    let codec = batch_codec(&a.mapping, a.pred.is_none(), &a.dataset)?;
    let run = |features: &Path, pred: &Path, out: &Path, report: Option<&Path>| -> Result<()> {
        let feat = io::load_features(features, a.orientation)?;
        let labels = codec.load(pred)?;
        let (fixed, rep) = correct_all(&feat, &labels, &cfg)?;
        log::info!(
            "{}: moved {} of {} boundaries (b_win {}, b_seg {})",
            pred.display(),
            rep.moved(),
            rep.boundaries.len(),
            rep.b_win,
            rep.b_seg
        );
        codec.save(out, &fixed)?;
        if let Some(path) = report {
            let text: String = rep
                .boundaries
                .iter()
                .map(|b| format!("{} {} {}\n", b.original, b.corrected, b.iterations))
                .collect();
            io::write_atomic(path, text.as_bytes())?;
        }
        Ok(())
    };

    if let (Some(features), Some(pred)) = (&a.features, &a.pred) {
        let out = a.out.as_ref().context("--out is required")?;
        run(features, pred, out, a.report.as_deref())?;
        return Ok(Outcome::Done);
    }
    if a.features.is_some() != a.pred.is_some() {
        bail!("give both --features and --pred, or neither for a batch run");
    }
    let layout = need_layout(&a.dataset)?;
    let preds = pred_dir(&a.pred_dir, &a.dataset)?;
    let (ids, out_dir) = batch(&a.dataset)?;
    for_each_video(&ids, |id| {
        run(
            &layout.features_of(id),
            &preds.join(format!("{id}.txt")),
            &out_dir.join(format!("{id}.txt")),
            None,
        )
    })?;
    Ok(Outcome::Done)
}

pub fn smooth(a: &SmoothArgs) -> Result<Outcome> {
    let cfg = SmoothConfig {
        s_win: a.s_win,
        stride: a.stride,
    };
    let codec = batch_codec(&a.mapping, a.pred.is_none(), &a.dataset)?;
    let run = |pred: &Path, out: &Path| -> Result<()> {
        let labels = codec.load(pred)?;
        if a.s_win == simseg::Setting::Auto {
            log::info!(
                "{}: s_win auto resolved to {}",
                pred.display(),
                postprocess::auto_s_win(&labels)
            );
        }
        codec.save(out, &postprocess::smooth(&labels, &cfg)?)
    };
    if let Some(pred) = &a.pred {
        run(pred, a.out.as_ref().context("--out is required")?)?;
        return Ok(Outcome::Done);
    }
    let preds = pred_dir(&a.pred_dir, &a.dataset)?;
    let (ids, out_dir) = batch(&a.dataset)?;
    for_each_video(&ids, |id| {
        run(
            &preds.join(format!("{id}.txt")),
            &out_dir.join(format!("{id}.txt")),
        )
    })?;
    Ok(Outcome::Done)
}

pub fn vote(a: &VoteArgs) -> Result<Outcome> {
    let codec = Codec::new(a.mapping.as_deref())?;
    let mut sources = a
        .preds
        .iter()
        .map(|p| codec.load(p))
        .collect::<Result<Vec<_>>>()?;
    // numeric inputs may see different largest ids
    let classes = sources
        .iter()
        .map(LabelSequence::class_count)
        .max()
        .unwrap_or(0);
    for s in &mut sources {
        *s = LabelSequence::new(s.as_slice().to_vec(), classes)?;
    }
    let trusted = a.trusted.unwrap_or(sources.len() - 1);
    let set = PredictionSet::with_trusted(sources, trusted)?;
    codec.save(&a.out, &postprocess::vote(&set))?;
    Ok(Outcome::Done)
}

struct EvalSetup {
    gt_codec: Codec,
    pred_codec: Codec,
    matching: Option<LabelMatching>,
    opts: EvalOptions,
}

impl EvalSetup {
    fn tally(&self, pred: &Path, gt: &Path) -> Result<VideoTally> {
        let gt = self.gt_codec.load(gt)?;
        let mut pred = self.pred_codec.load(pred)?;
        if let Some(how) = self.matching {
            pred = metrics::match_labels(&pred, &gt, how)?;
        }
        Ok(metrics::tally(&pred, &gt, &self.opts)?)
    }
}

fn mean_result(rows: &[(String, EvalResult)]) -> EvalResult {
    let n = rows.len() as f64;
    let avg = |f: fn(&EvalResult) -> f64| rows.iter().map(|(_, r)| f(r)).sum::<f64>() / n;
    EvalResult {
        acc: avg(|r| r.acc),
        edit: avg(|r| r.edit),
        f1_10: avg(|r| r.f1_10),
        f1_25: avg(|r| r.f1_25),
        f1_50: avg(|r| r.f1_50),
        boundary_f1: avg(|r| r.boundary_f1),
    }
}

fn txt_stems(dir: &Path) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let p = entry?.path();
        if p.extension().is_some_and(|e| e == "txt") {
            if let Some(stem) = p.file_stem() {
                ids.push(stem.to_string_lossy().into_owned());
            }
        }
    }
    ids.sort();
    if ids.is_empty() {
        bail!("no .txt predictions in {}", dir.display());
    }
    Ok(ids)
}

pub fn eval(a: &EvalArgs) -> Result<Outcome> {
    let layout = layout(&a.dataset)?;
    let mapping = a
        .mapping
        .clone()
        .or_else(|| layout.as_ref().map(|l| l.mapping.clone()));
    let gt_codec = Codec::new(mapping.as_deref())?;
    let matching = match a.matching {
        IdMatching::None => None,
        IdMatching::Hungarian => Some(LabelMatching::Hungarian),
        IdMatching::Greedy => Some(LabelMatching::Greedy),
    };
    let pred_codec = match matching {
        Some(_) => Codec::Numeric,
        None => Codec::new(mapping.as_deref())?,
    };
    let ignore = a
        .ignore
        .iter()
        .map(|n| gt_codec.class_id(n))
        .collect::<Result<Vec<_>>>()?;
    let setup = EvalSetup {
        gt_codec,
        pred_codec,
        matching,
        opts: EvalOptions {
            boundary_tolerance: a.boundary_tolerance,
            ignore,
            matching: match a.f1_matching {
                F1Matching::Maximum => SegmentMatching::Maximum,
                F1Matching::Greedy => SegmentMatching::Greedy,
            },
        },
    };

    let rows: Vec<(String, EvalResult)> = if let (Some(pred), Some(gt)) = (&a.pred, &a.gt) {
        vec![(
            "video".into(),
            EvalResult::from_tallies(&[setup.tally(pred, gt)?])?,
        )]
    } else {
        let preds = match &a.pred_dir {
            Some(p) => p.clone(),
            None => layout
                .as_ref()
                .and_then(|l| l.predictions.clone())
                .context("give --pred/--gt, or --pred-dir with --gt-dir or a dataset")?,
        };
        let gts = match &a.gt_dir {
            Some(g) => g.clone(),
            None => layout
                .as_ref()
                .map(|l| l.ground_truth.clone())
                .context("no ground-truth directory")?,
        };
        let splits = if a.splits.is_empty() {
            layout
                .as_ref()
                .map(|l| l.splits.clone())
                .unwrap_or_default()
        } else {
            a.splits.clone()
        };
        let groups: Vec<(String, Vec<String>)> = if splits.is_empty() {
            vec![("all".into(), txt_stems(&preds)?)]
        } else {
            splits
                .iter()
                .map(|s| {
                    let name = s.file_stem().map_or_else(
                        || s.display().to_string(),
                        |n| n.to_string_lossy().into_owned(),
                    );
                    Ok((name, io::load_bundle(s)?))
                })
                .collect::<Result<_>>()?
        };
        groups
            .iter()
            .map(|(name, ids)| {
                let tallies = for_each_video(ids, |id| {
                    setup.tally(
                        &preds.join(format!("{id}.txt")),
                        &gts.join(format!("{id}.txt")),
                    )
                })?;
                Ok((name.clone(), EvalResult::from_tallies(&tallies)?))
            })
            .collect::<Result<_>>()?
    };

    let average = mean_result(&rows);
    let mut kv = String::new();
    if rows.len() > 1 {
        for (name, r) in &rows {
            for (k, v) in r.fields() {
                kv.push_str(&format!("{name}.{k}={v:.4}\n"));
            }
        }
    }
    kv.push_str(&average.to_key_values());

    if a.kv {
        print!("{kv}");
    } else {
        print!("{}", table(&rows, &average));
    }
    if let Some(out) = &a.out {
        io::write_atomic(out, kv.as_bytes())?;
    }
    Ok(Outcome::Done)
}

fn table(rows: &[(String, EvalResult)], average: &EvalResult) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(7);
    let mut out = format!(
        "{:<width$} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}\n",
        "split", "Acc", "Edit", "F1@10", "F1@25", "F1@50", "BF1", "Avg"
    );
    let line = |name: &str, r: &EvalResult| {
        let mut s = format!("{name:<width$}");
        for (_, v) in r.fields() {
            s.push_str(&format!(" {v:>7.2}"));
        }
        s.push_str(&format!(" {:>7.2}\n", r.average()));
        s
    };
    for (name, r) in rows {
        out.push_str(&line(name, r));
    }
    if rows.len() > 1 {
        out.push_str(&line("Average", average));
    }
    out
}

pub fn synth(a: &SynthArgs, seed: u64) -> Result<Outcome> {
    if a.videos == 0 {
        bail!("--videos must be positive");
    }
    let root = &a.out_dir;
    let dirs = ["features", "groundTruth", "splits"];
    for d in dirs {
        fs::create_dir_all(root.join(d))
            .with_context(|| format!("creating {}", root.join(d).display()))?;
    }
    if a.pred_shift.is_some() {
        fs::create_dir_all(root.join("predictions"))?;
    }
    let names: Vec<String> = (0..a.segments).map(|k| format!("class{k}")).collect();
    let mapping = io::ClassMapping::new(names)?;
    mapping.save(&root.join("mapping.txt"))?;

    // class k has the same mean in every video
    let mut means = Means::Sampled {
        separation: a.separation,
    };
    let mut bundle = String::new();
    for i in 0..a.videos {
        let id = format!("vid{i:02}");
        let video = synth::generate(&SynthSpec {
            dim: a.dim,
            lengths: SegmentLengths::Sampled {
                count: a.segments,
                min: a.min_len,
                max: a.max_len,
            },
            means: means.clone(),
            noise_sigma: a.noise,
            seed: seed.wrapping_add(i as u64),
        })?;
        means = Means::Explicit(video.means.clone());
        io::save_features(
            &root.join("features").join(format!("{id}.npy")),
            &video.features,
        )?;
        io::save_labels(
            &root.join("groundTruth").join(format!("{id}.txt")),
            &video.labels,
            &mapping,
        )?;
        if let Some(shift) = a.pred_shift {
            let pred = synth::perturb_boundaries(
                &video.labels,
                shift,
                seed.wrapping_add(1000 + i as u64),
            )?;
            io::save_labels(
                &root.join("predictions").join(format!("{id}.txt")),
                &pred,
                &mapping,
            )?;
        }
        bundle.push_str(&format!("{id}.txt\n"));
    }
    io::write_atomic(&root.join("splits").join("all.bundle"), bundle.as_bytes())?;
    let mut manifest = String::from("features=features\ngroundtruth=groundTruth\nmapping=mapping.txt\nsplits=splits/all.bundle\n");
    if a.pred_shift.is_some() {
        manifest.push_str("predictions=predictions\n");
    }
    io::write_atomic(&root.join("dataset.manifest"), manifest.as_bytes())?;
    log::info!("wrote {} videos to {}", a.videos, root.display());
    Ok(Outcome::Done)
}

pub fn plot(a: &PlotArgs) -> Result<Outcome> {
    let codec = Codec::new(a.mapping.as_deref())?;
    if !a.titles.is_empty() && a.titles.len() != a.labels.len() {
        bail!(
            "{} titles for {} label files",
            a.titles.len(),
            a.labels.len()
        );
    }
    let rows = a
        .labels
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let title = a.titles.get(i).cloned().unwrap_or_else(|| {
                p.file_stem().map_or_else(
                    || p.display().to_string(),
                    |s| s.to_string_lossy().into_owned(),
                )
            });
            Ok((title, codec.load(p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    if a.text {
        print!("{}", plot::text(&rows, a.width));
        let mut classes: Vec<usize> = rows
            .iter()
            .flat_map(|(_, l)| l.as_slice().iter().copied())
            .collect();
        classes.sort_unstable();
        classes.dedup();
        let legend: Vec<String> = classes
            .iter()
            .map(|&c| {
                let (r, g, b) = plot::class_rgb(c);
                format!(
                    "\x1b[38;2;{r};{g};{b}m\u{2588}\x1b[0m {}",
                    codec.class_name(c)
                )
            })
            .collect();
        println!("{}", legend.join("  "));
        return Ok(Outcome::Done);
    }
    let svg = plot::svg(&rows);
    match &a.out {
        Some(out) => io::write_atomic(out, svg.as_bytes())?,
        None => print!("{svg}"),
    }
    Ok(Outcome::Done)
}
