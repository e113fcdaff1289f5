use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    degrade, f_score, image_seed, svm_train, write_text, DegradeSpec, EvalError,
    FeatureExtractor, NormalPredictor, Representation, Standardizer,
};
use crate::imaging::{rotate_translate, Image};
use crate::photometric::DatasetManifest;

pub const RECOGNITION_CSV: &str = "recognition.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct RecognitionOptions {
    pub grid: Vec<DegradeSpec>,
    pub seed: u64,
    /// SVM regularization constant.
    pub c: f64,
    pub max_rotation_deg: f64,
    /// Largest translation as a fraction of the image width.
    pub max_shift: f64,
}

impl RecognitionOptions {
    pub fn new(grid: Vec<DegradeSpec>, seed: u64) -> Self {
        Self {
            grid,
            seed,
            c: 1.0,
            max_rotation_deg: 5.0,
            max_shift: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecognitionRow {
    pub spec: DegradeSpec,
    pub representation: Representation,
    /// Macro-averaged F1.
    pub f_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecognitionReport {
    pub rows: Vec<RecognitionRow>,
}

impl RecognitionReport {
    pub fn f_score(&self, spec: &DegradeSpec, rep: Representation) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.spec == *spec && r.representation == rep)
            .map(|r| r.f_score)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,amount,representation,f_score\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                r.spec.kind(),
                r.spec.amount(),
                r.representation,
                r.f_score
            );
        }
        s
    }
}

struct Features {
    color: Vec<f64>,
    normal: Vec<f64>,
}

impl Features {
    fn get(&self, rep: Representation) -> Vec<f64> {
        match rep {
            Representation::Color => self.color.clone(),
            Representation::Normal => self.normal.clone(),
            Representation::Combined => [self.color.as_slice(), &self.normal].concat(),
        }
    }
}

const REPRESENTATIONS: [Representation; 3] = [
    Representation::Color,
    Representation::Combined,
    Representation::Normal,
];

/// Few-shot identification: even-indexed lights register each object,
/// odd-indexed lights are recognized after a small random rigid warp and
/// each degradation of the grid. Degradations hit the color photograph
/// before its normal image is predicted. One SVM per representation on
/// features z-scored with registration-set statistics.
pub fn run_recognition_eval(
    manifest: &DatasetManifest,
    predictor: &mut dyn NormalPredictor,
    extractor: &mut dyn FeatureExtractor,
    opts: &RecognitionOptions,
    out_dir: Option<&Path>,
) -> Result<RecognitionReport, EvalError> {
    if manifest.objects.len() < 2 {
        return Err(EvalError::InvalidArgument("recognition needs at least two objects".into()));
    }
    if let Some(o) = manifest
        .objects
        .iter()
        .find(|o| o.images.len() < 2 || o.images.len() % 2 != 0)
    {
        return Err(EvalError::InvalidArgument(format!(
            "object {} has {} images; an even count of at least two is required",
            o.id,
            o.images.len()
        )));
    }
    let mut warp_rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut train: Vec<Features> = Vec::new();
    let mut train_labels = Vec::new();
    let mut tests: Vec<(usize, usize, Image)> = Vec::new();
    for (o, obj) in manifest.objects.iter().enumerate() {
        for (l, img) in manifest.load_images(o)?.into_iter().enumerate() {
            if l % 2 == 0 {
                let normal = predictor.predict_image(&obj.id, &img, image_seed(opts.seed, o, l))?;
                train.push(Features {
                    color: extractor.extract(&img)?,
                    normal: extractor.extract(&normal)?,
                });
                train_labels.push(o);
            } else {
                let angle = warp_rng.random_range(-opts.max_rotation_deg..=opts.max_rotation_deg);
                let shift = opts.max_shift * img.width() as f64;
                let dx = warp_rng.random_range(-shift..=shift);
                let dy = warp_rng.random_range(-shift..=shift);
                tests.push((o, l, rotate_translate(&img, angle, dx, dy)));
            }
        }
    }

    let mut models = Vec::new();
    for rep in REPRESENTATIONS {
        let raw: Vec<Vec<f64>> = train.iter().map(|f| f.get(rep)).collect();
        let st = Standardizer::fit(&raw)?;
        let xs = raw.iter().map(|x| st.apply(x)).collect::<Result<Vec<_>, _>>()?;
        models.push((st, svm_train(&xs, &train_labels, opts.c, opts.seed)?));
    }

    let truth: Vec<usize> = tests.iter().map(|t| t.0).collect();
    let mut rows = Vec::new();
    for spec in &opts.grid {
        let mut predicted = vec![Vec::with_capacity(tests.len()); REPRESENTATIONS.len()];
        for (o, l, img) in &tests {
            let degraded = degrade(img, spec);
            let id = &manifest.objects[*o].id;
            let normal = predictor.predict_image(id, &degraded, image_seed(opts.seed, *o, *l))?;
            let f = Features {
                color: extractor.extract(&degraded)?,
                normal: extractor.extract(&normal)?,
            };
            for (r, rep) in REPRESENTATIONS.iter().enumerate() {
                let (st, model) = &models[r];
                predicted[r].push(model.predict(&st.apply(&f.get(*rep))?)?);
            }
        }
        for (r, rep) in REPRESENTATIONS.iter().enumerate() {
            rows.push(RecognitionRow {
                spec: *spec,
                representation: *rep,
                f_score: f_score(&predicted[r], &truth)?,
            });
        }
    }
    rows.sort_by(|a, b| {
        (a.spec.kind().name(), a.spec.amount(), a.representation.name())
            .partial_cmp(&(b.spec.kind().name(), b.spec.amount(), b.representation.name()))
            .expect("finite amounts")
    });
    let report = RecognitionReport { rows };
    if let Some(dir) = out_dir {
        write_text(&dir.join(RECOGNITION_CSV), &report.to_csv())?;
    }
    Ok(report)
}
