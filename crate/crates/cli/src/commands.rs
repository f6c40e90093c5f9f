use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context};
use serde::Serialize;

use wireframe_core::annotate::{derive_junctions, render_target_heatmap};
use wireframe_core::construct::{binarize, construct_wireframe};
use wireframe_core::eval::{
    junction_pr, line_pixel_pr, MatchCounts, PixelCounts, PrCounts, PrCurve,
};
use wireframe_core::gridcodec::{decode, encode};
use wireframe_core::hough::hough_segments;
use wireframe_core::loss::{heatmap_l2_loss, junction_loss, sample_cells};
use wireframe_core::synth::{random_scene, SceneParams};

use crate::args::*;
use crate::config::{parse_gap, parse_sweep, parse_weights, Settings};
use crate::error::{usage, CliError, CliResult};
use crate::formats::*;
use crate::pr::{curve_to_csv, curve_to_svg};

fn io_err(e: std::io::Error) -> CliError {
    CliError::Data(anyhow::Error::new(e).context("writing to stdout"))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    let settings = Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::Defaults => out
            .write_all(settings.to_config_text().as_bytes())
            .map_err(io_err),
        Command::Synth(a) => synth(a, settings),
        Command::DeriveGt(a) => derive_gt(a, settings),
        Command::Encode(a) => encode_cmd(a, settings),
        Command::Decode(a) => decode_cmd(a, settings),
        Command::Construct(a) => construct(a, settings),
        Command::Hough(a) => hough(a, settings),
        Command::Eval(a) => eval(a, settings, out),
        Command::Loss(a) => loss(a, settings, out),
    }
}

fn synth(a: SynthArgs, s: Settings) -> CliResult<()> {
    if a.width == 0 || a.height == 0 || a.min_segments > a.max_segments {
        return Err(usage(
            "synth needs a non-empty image and min-segments <= max-segments",
        ));
    }
    let params = SceneParams {
        width: a.width,
        height: a.height,
        min_segments: a.min_segments,
        max_segments: a.max_segments,
        ..SceneParams::default()
    };
    let scene = random_scene(&params, a.seed.unwrap_or(s.seed));
    write_json(
        &a.out,
        &SceneFile::from_segments(scene.width, scene.height, &scene.lines),
    )?;
    Ok(())
}

fn derive_gt(a: DeriveGtArgs, mut s: Settings) -> CliResult<()> {
    if let Some(r) = a.merge_radius {
        s.merge_radius = r;
    }
    if !(s.merge_radius >= 0.0) {
        return Err(usage("merge radius must be >= 0"));
    }
    let file: SceneFile = read_json(&a.scene)?;
    let scene = file
        .to_scene()
        .with_context(|| format!("validating {}", a.scene.display()))?;
    let js = derive_junctions(&scene, s.merge_radius);
    write_json(
        &a.out_junctions,
        &JunctionFile::new(scene.width, scene.height, &js),
    )?;
    write_wfhm(&a.out_heatmap, &render_target_heatmap(&scene))?;
    Ok(())
}

fn encode_cmd(a: EncodeArgs, mut s: Settings) -> CliResult<()> {
    if let Some(r) = a.merge_radius {
        s.merge_radius = r;
    }
    if let Some(g) = a.grid {
        s.grid = g;
    }
    if let Some(b) = a.bins {
        s.bins = b;
    }
    let (w, h, js) = match (&a.junctions, &a.scene) {
        (Some(p), None) => {
            let f: JunctionFile = read_json(p)?;
            let js = f.to_junctions()?;
            (f.width, f.height, js)
        }
        (None, Some(p)) => {
            let f: SceneFile = read_json(p)?;
            let scene = f.to_scene()?;
            (f.width, f.height, derive_junctions(&scene, s.merge_radius))
        }
        _ => return Err(usage("encode needs exactly one of --junctions and --scene")),
    };
    let cfg = s.grid_for(w, h);
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let enc = encode(&js, &cfg).context("encoding junctions")?;
    write_json(&a.out, &GridFile::from(&enc))?;
    Ok(())
}

fn decode_cmd(a: DecodeArgs, mut s: Settings) -> CliResult<()> {
    s.tau_c = a.tau_c.unwrap_or(s.tau_c);
    s.tau_b = a.tau_b.unwrap_or(s.tau_b);
    let f: GridFile = read_json(&a.grid)?;
    let enc = f.to_encoding()?;
    let js = decode(&enc, s.tau_c, s.tau_b);
    write_json(&a.out, &JunctionFile::new(f.image_w, f.image_h, &js))?;
    Ok(())
}

fn construct(a: ConstructArgs, mut s: Settings) -> CliResult<()> {
    s.omega = a.omega.unwrap_or(s.omega);
    s.tau_c = a.tau_c.unwrap_or(s.tau_c);
    s.tau_b = a.tau_b.unwrap_or(s.tau_b);
    s.delta_ray = a.delta_ray.unwrap_or(s.delta_ray);
    s.nms_radius = a.nms_radius.unwrap_or(s.nms_radius);
    s.boundary_frac = a.boundary_frac.unwrap_or(s.boundary_frac);
    s.kappa_min = a.kappa_min.unwrap_or(s.kappa_min);
    if let Some(g) = &a.max_ray_gap {
        s.max_ray_gap = parse_gap(g)?;
    }
    let params = s.construction();
    params.validate().map_err(|e| usage(e.to_string()))?;

    let jf: JunctionFile = read_json(&a.junctions)?;
    let js = jf
        .to_junctions()
        .with_context(|| format!("validating {}", a.junctions.display()))?;
    let heat = read_wfhm(&a.heatmap)?;
    if (jf.width, jf.height) != (heat.width, heat.height) {
        return Err(anyhow::anyhow!(
            "junction file is {}x{} but heat map is {}x{}",
            jf.width,
            jf.height,
            heat.width,
            heat.height
        )
        .into());
    }
    let wf = construct_wireframe(&js, &heat, &params)?;
    write_json(&a.out, &WireframeFile::new(heat.width, heat.height, &wf))?;
    Ok(())
}

fn hough(a: HoughArgs, mut s: Settings) -> CliResult<()> {
    s.omega = a.omega.unwrap_or(s.omega);
    s.seed = a.seed.unwrap_or(s.seed);
    s.hough.threshold = a.threshold.unwrap_or(s.hough.threshold);
    s.hough.min_length = a.min_length.unwrap_or(s.hough.min_length);
    s.hough.max_gap = a.max_gap.unwrap_or(s.hough.max_gap);
    let params = s.hough_params();
    params.validate().map_err(|e| usage(e.to_string()))?;
    let heat = read_wfhm(&a.heatmap)?;
    let segs = hough_segments(&binarize(&heat, s.omega), &params)?;
    write_json(
        &a.out,
        &SceneFile::from_segments(heat.width, heat.height, &segs),
    )?;
    Ok(())
}

fn json_files(dir: &Path) -> anyhow::Result<BTreeSet<String>> {
    let mut names = BTreeSet::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            if let Some(n) = path.file_name().and_then(|n| n.to_str()) {
                names.insert(n.to_string());
            }
        }
    }
    Ok(names)
}

/// `(gt, pred)` file pairs, matched by file name when both are directories.
/// A prediction directory without any `.json` file means nothing was
/// predicted for any image (`None`).
pub fn paired_files(gt: &Path, pred: &Path) -> CliResult<Vec<(PathBuf, Option<PathBuf>)>> {
    match (gt.is_dir(), pred.is_dir()) {
        (false, false) => Ok(vec![(gt.to_path_buf(), Some(pred.to_path_buf()))]),
        (true, true) => {
            let (g, p) = (json_files(gt)?, json_files(pred)?);
            if p.is_empty() {
                return Ok(g.iter().map(|n| (gt.join(n), None)).collect());
            }
            let only_g: Vec<&String> = g.difference(&p).collect();
            let only_p: Vec<&String> = p.difference(&g).collect();
            if !only_g.is_empty() || !only_p.is_empty() {
                return Err(anyhow::anyhow!(
                    "ground truth and predictions do not pair up; missing predictions: {only_g:?}; unmatched predictions: {only_p:?}"
                )
                .into());
            }
            Ok(g.iter().map(|n| (gt.join(n), Some(pred.join(n)))).collect())
        }
        _ => Err(usage(
            "--gt and --pred must both be files or both be directories",
        )),
    }
}

fn same_dims(path: &Path, gt: (usize, usize), pred: (usize, usize)) -> anyhow::Result<()> {
    ensure!(
        gt == pred,
        "{}: ground truth is {}x{} but prediction is {}x{}",
        path.display(),
        gt.0,
        gt.1,
        pred.0,
        pred.1
    );
    Ok(())
}

/// Dataset-level curve: counts are pooled over all images at each
/// threshold before dividing.
pub fn eval_curve(
    kind: EvalKind,
    pairs: &[(PathBuf, Option<PathBuf>)],
    s: &Settings,
) -> CliResult<PrCurve> {
    let cfg = s.eval();
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let curve = match kind {
        EvalKind::Junctions => {
            let mut pooled = vec![MatchCounts::default(); cfg.sweep.len()];
            for (g, p) in pairs {
                let (gw, gh, gj) = read_junction_set(g)?;
                let pj = match p {
                    Some(p) => {
                        let (pw, ph, pj) = read_junction_set(p)?;
                        same_dims(p, (gw, gh), (pw, ph))?;
                        pj
                    }
                    None => Vec::new(),
                };
                let gj: Vec<_> = gj.into_iter().filter(|j| !j.derived).collect();
                for (acc, &t) in pooled.iter_mut().zip(&cfg.sweep) {
                    let kept: Vec<_> = pj
                        .iter()
                        .filter(|j| !j.derived && j.confidence > t)
                        .cloned()
                        .collect();
                    *acc += junction_pr(&gj, &kept, &cfg, gw, gh);
                }
            }
            pooled
                .iter()
                .zip(&cfg.sweep)
                .map(|(c, &t)| c.at(t))
                .collect()
        }
        EvalKind::Lines => {
            let mut pooled = vec![PixelCounts::default(); cfg.sweep.len()];
            for (g, p) in pairs {
                let (gw, gh, gl) = read_line_set(g)?;
                let pl = match p {
                    Some(p) => {
                        let (pw, ph, pl) = read_line_set(p)?;
                        same_dims(p, (gw, gh), (pw, ph))?;
                        pl
                    }
                    None => Vec::new(),
                };
                let gl: Vec<_> = gl.into_iter().map(|(s, _)| s).collect();
                for (acc, &t) in pooled.iter_mut().zip(&cfg.sweep) {
                    let kept: Vec<_> = pl
                        .iter()
                        .filter(|(_, sc)| *sc > t)
                        .map(|(s, _)| *s)
                        .collect();
                    *acc += line_pixel_pr(&gl, &kept, &cfg, gw, gh);
                }
            }
            pooled
                .iter()
                .zip(&cfg.sweep)
                .map(|(c, &t)| c.at(t))
                .collect()
        }
    };
    Ok(curve)
}

fn eval(a: EvalArgs, mut s: Settings, out: &mut dyn Write) -> CliResult<()> {
    s.tol_frac = a.tol_frac.unwrap_or(s.tol_frac);
    if let Some(sw) = &a.sweep {
        s.sweep = parse_sweep(sw)?;
    }
    let pairs = paired_files(&a.gt, &a.pred)?;
    let curve = eval_curve(a.kind, &pairs, &s)?;
    let csv = curve_to_csv(&curve);
    match &a.csv {
        Some(p) => write_text(p, &csv)?,
        None => out.write_all(csv.as_bytes()).map_err(io_err)?,
    }
    if let Some(p) = &a.svg {
        write_text(p, &curve_to_svg(&curve))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct LossOutput {
    total: f64,
    conf_c: f64,
    loc_c: f64,
    conf_b: f64,
    loc_b: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    heatmap: Option<f64>,
}

fn loss(a: LossArgs, mut s: Settings, out: &mut dyn Write) -> CliResult<()> {
    if let Some(w) = &a.weights {
        s.weights = parse_weights(w)?;
    }
    s.rmax = a.rmax.unwrap_or(s.rmax);
    s.seed = a.seed.unwrap_or(s.seed);
    s.merge_radius = a.merge_radius.unwrap_or(s.merge_radius);
    if s.rmax.is_nan() || s.rmax < 0.0 {
        return Err(usage("rmax must be >= 0 or inf"));
    }

    let pred = read_json::<GridFile>(&a.pred_grid)?.to_encoding()?;
    let sf: SceneFile = read_json(&a.scene)?;
    let scene = sf.to_scene()?;
    let cfg = pred.config;
    if (cfg.image_w, cfg.image_h) != (scene.width, scene.height) {
        return Err(anyhow::anyhow!(
            "grid covers a {}x{} image but the scene is {}x{}",
            cfg.image_w,
            cfg.image_h,
            scene.width,
            scene.height
        )
        .into());
    }
    let gt = derive_junctions(&scene, s.merge_radius);
    let target = encode(&gt, &cfg).context("encoding ground truth")?;
    let mask = sample_cells(&target, s.rmax, s.seed);
    let r = junction_loss(&pred, &gt, &s.weights, &mask)?;
    let heatmap = match &a.pred_heatmap {
        None => None,
        Some(p) => {
            let h = read_wfhm(p)?;
            Some(heatmap_l2_loss(&h, &render_target_heatmap(&scene))?.loss)
        }
    };
    let report = LossOutput {
        total: r.total,
        conf_c: r.conf_c,
        loc_c: r.loc_c,
        conf_b: r.conf_b,
        loc_b: r.loc_b,
        heatmap,
    };
    out.write_all(to_json(&report).as_bytes()).map_err(io_err)
}

impl From<wireframe_core::Error> for CliError {
    fn from(e: wireframe_core::Error) -> Self {
        CliError::Data(e.into())
    }
}
