use std::fmt::Write as _;
use std::path::Path;

use super::{
    image_seed, pca_fit, quantile, ssim, write_text, EvalError, NormalPredictor, Representation,
};
use crate::imaging::{to_grayscale, Image};
use crate::photometric::DatasetManifest;

pub const SCATTER_CSV: &str = "scatter.csv";
pub const SSIM_CSV: &str = "ssim.csv";
pub const SSIM_SUMMARY_CSV: &str = "ssim_summary.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterRow {
    pub representation: Representation,
    pub object_id: String,
    pub light_index: usize,
    pub pc1: f64,
    pub pc2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsimRow {
    pub representation: Representation,
    pub object_id: String,
    pub light_index: usize,
    pub ssim: f64,
}

/// Five-number summary of one representation's SSIM distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SsimSummary {
    pub representation: Representation,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityReport {
    pub scatter: Vec<ScatterRow>,
    pub ssim: Vec<SsimRow>,
    pub summary: Vec<SsimSummary>,
}

impl AmbiguityReport {
    pub fn summary_for(&self, rep: Representation) -> Option<&SsimSummary> {
        self.summary.iter().find(|s| s.representation == rep)
    }

    pub fn scatter_csv(&self) -> String {
        let mut s = String::from("representation,object_id,light_index,pc1,pc2\n");
        for r in &self.scatter {
            let _ = writeln!(s, "{},{},{},{},{}", r.representation, r.object_id, r.light_index, r.pc1, r.pc2);
        }
        s
    }

    pub fn ssim_csv(&self) -> String {
        let mut s = String::from("representation,object_id,light_index,ssim\n");
        for r in &self.ssim {
            let _ = writeln!(s, "{},{},{},{}", r.representation, r.object_id, r.light_index, r.ssim);
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("representation,min,q1,median,q3,max\n");
        for r in &self.summary {
            let _ = writeln!(s, "{},{},{},{},{},{}", r.representation, r.min, r.q1, r.median, r.q3, r.max);
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<(), EvalError> {
        write_text(&dir.join(SCATTER_CSV), &self.scatter_csv())?;
        write_text(&dir.join(SSIM_CSV), &self.ssim_csv())?;
        write_text(&dir.join(SSIM_SUMMARY_CSV), &self.summary_csv())
    }
}

/// For every lit image of every object, compares the color image and its
/// predicted normal image against the per-object mean image of the same
/// representation (SSIM), and arranges each representation in its own
/// 2-D PCA space of raw grayscale pixels.
pub fn run_ambiguity_eval(
    manifest: &DatasetManifest,
    predictor: &mut dyn NormalPredictor,
    seed: u64,
    out_dir: Option<&Path>,
) -> Result<AmbiguityReport, EvalError> {
    if manifest.objects.len() < 2 || manifest.objects.iter().any(|o| o.images.len() < 2) {
        return Err(EvalError::InvalidArgument(
            "ambiguity evaluation needs at least two objects with two or more images each".into(),
        ));
    }
    let mut images: Vec<(Representation, Vec<Vec<Image>>)> = vec![
        (Representation::Color, Vec::new()),
        (Representation::Normal, Vec::new()),
    ];
    for (o, obj) in manifest.objects.iter().enumerate() {
        let color = manifest.load_images(o)?;
        let normal = color
            .iter()
            .enumerate()
            .map(|(l, img)| predictor.predict_image(&obj.id, img, image_seed(seed, o, l)))
            .collect::<Result<Vec<_>, _>>()?;
        images[0].1.push(color);
        images[1].1.push(normal);
    }

    let mut report = AmbiguityReport {
        scatter: Vec::new(),
        ssim: Vec::new(),
        summary: Vec::new(),
    };
    for (rep, per_object) in &images {
        let flat: Vec<Vec<f64>> = per_object
            .iter()
            .flatten()
            .map(|img| to_grayscale(img).into_data())
            .collect();
        let pca = pca_fit(&flat, 2)?;
        let mut k = 0;
        let mut scores = Vec::new();
        for (o, imgs) in per_object.iter().enumerate() {
            let id = &manifest.objects[o].id;
            let mean = mean_image(imgs)?;
            for (l, img) in imgs.iter().enumerate() {
                let p = pca.project(&flat[k])?;
                k += 1;
                report.scatter.push(ScatterRow {
                    representation: *rep,
                    object_id: id.clone(),
                    light_index: l,
                    pc1: p[0],
                    pc2: p[1],
                });
                let s = ssim(img, &mean)?;
                scores.push(s);
                report.ssim.push(SsimRow {
                    representation: *rep,
                    object_id: id.clone(),
                    light_index: l,
                    ssim: s,
                });
            }
        }
        scores.sort_by(f64::total_cmp);
        report.summary.push(SsimSummary {
            representation: *rep,
            min: scores[0],
            q1: quantile(&scores, 0.25),
            median: quantile(&scores, 0.5),
            q3: quantile(&scores, 0.75),
            max: scores[scores.len() - 1],
        });
    }
    if let Some(dir) = out_dir {
        report.write(dir)?;
    }
    Ok(report)
}

fn mean_image(imgs: &[Image]) -> Result<Image, EvalError> {
    let first = &imgs[0];
    if imgs.iter().any(|i| !i.same_size(first) || i.channels() != first.channels()) {
        return Err(EvalError::DimensionMismatch(
            "images of one object differ in size".into(),
        ));
    }
    let mut acc = vec![0.0; first.data().len()];
    for img in imgs {
        acc.iter_mut().zip(img.data()).for_each(|(a, v)| *a += v);
    }
    acc.iter_mut().for_each(|a| *a /= imgs.len() as f64);
    Ok(Image::from_fn(first.width(), first.height(), first.channels(), |x, y, c| {
        acc[(y * first.width() + x) * first.channels() + c]
    })?)
}
