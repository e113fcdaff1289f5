//! JSON dataset description:
//! `{"objects":[{"id":..,"images":[{"path":..,"light":[x,y,z]}],"normal":..,"albedo":..}]}`
//! with paths relative to the manifest file.

use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CapturedStack, LightDirection, LightRig, PhotometricError};
use crate::imaging::{decode_normal_rgb, load_png, Image, NormalMap};

/// Unit-length tolerance applied to lights when a manifest is loaded.
const LIGHT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub path: String,
    pub light: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectEntry {
    pub id: String,
    pub images: Vec<ImageEntry>,
    pub normal: Option<String>,
    pub albedo: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub objects: Vec<ObjectEntry>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn new(objects: Vec<ObjectEntry>, base_dir: impl Into<PathBuf>) -> Self {
        Self {
            objects,
            base_dir: base_dir.into(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PhotometricError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| PhotometricError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut manifest: Self = serde_json::from_str(&text)
            .map_err(|e| PhotometricError::Manifest(format!("{}: {e}", path.display())))?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        for obj in &manifest.objects {
            for img in &obj.images {
                LightDirection::from_unit(img.light, LIGHT_TOLERANCE).map_err(|_| {
                    PhotometricError::Manifest(format!(
                        "object {}: light {:?} for {} is not a unit vector facing the surface",
                        obj.id, img.light, img.path
                    ))
                })?;
            }
        }
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PhotometricError> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| PhotometricError::Manifest(e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|source| PhotometricError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.base_dir.join(rel)
    }

    /// Same content with every path re-expressed relative to `new_dir`.
    pub fn rebased(&self, new_dir: &Path) -> Self {
        let fix = |p: &str| relative_path(&absolute(&self.resolve(p)), &absolute(new_dir));
        let objects = self
            .objects
            .iter()
            .map(|o| ObjectEntry {
                id: o.id.clone(),
                images: o
                    .images
                    .iter()
                    .map(|i| ImageEntry {
                        path: fix(&i.path),
                        light: i.light,
                    })
                    .collect(),
                normal: o.normal.as_deref().map(fix),
                albedo: o.albedo.as_deref().map(fix),
            })
            .collect();
        Self::new(objects, new_dir)
    }

    pub fn object_index(&self, id: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.id == id)
    }

    pub fn rig(&self, object: usize) -> Result<LightRig, PhotometricError> {
        let lights = self.objects[object]
            .images
            .iter()
            .map(|i| LightDirection::from_unit(i.light, LIGHT_TOLERANCE))
            .collect::<Result<Vec<_>, _>>()?;
        LightRig::new(lights)
    }

    pub fn load_image(&self, object: usize, light: usize) -> Result<Image, PhotometricError> {
        Ok(load_png(self.resolve(&self.objects[object].images[light].path))?)
    }

    pub fn load_images(&self, object: usize) -> Result<Vec<Image>, PhotometricError> {
        (0..self.objects[object].images.len())
            .map(|k| self.load_image(object, k))
            .collect()
    }

    pub fn load_stack(&self, object: usize) -> Result<CapturedStack, PhotometricError> {
        CapturedStack::new(
            self.load_images(object)?,
            self.rig(object)?,
            self.objects[object].id.clone(),
        )
    }

    /// Ground-truth normal map, if the object lists one.
    pub fn load_normal(&self, object: usize) -> Result<Option<NormalMap>, PhotometricError> {
        match &self.objects[object].normal {
            Some(rel) => Ok(Some(decode_normal_rgb(&load_png(self.resolve(rel))?)?)),
            None => Ok(None),
        }
    }

    pub fn image_count(&self) -> usize {
        self.objects.iter().map(|o| o.images.len()).sum()
    }
}

fn absolute(p: &Path) -> PathBuf {
    let joined = if p.is_absolute() {
        p.to_path_buf()
    } else {
        std::env::current_dir().unwrap_or_default().join(p)
    };
    // lexical normalization; symlinks are left alone
    let mut out = PathBuf::new();
    for c in joined.components() {
        match c {
            Component::ParentDir => {
                out.pop();
            }
            Component::CurDir => {}
            other => out.push(other.as_os_str()),
        }
    }
    out
}

fn relative_path(target: &Path, base: &Path) -> String {
    let t: Vec<_> = target.components().collect();
    let b: Vec<_> = base.components().collect();
    let common = t.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let mut rel = PathBuf::new();
    for _ in common..b.len() {
        rel.push("..");
    }
    for c in &t[common..] {
        rel.push(c.as_os_str());
    }
    rel.to_string_lossy().replace('\\', "/")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths() {
        assert_eq!(
            relative_path(Path::new("/a/b/c/x.png"), Path::new("/a/b")),
            "c/x.png"
        );
        assert_eq!(
            relative_path(Path::new("/a/data/x.png"), Path::new("/a/out/run")),
            "../../data/x.png"
        );
    }

    #[test]
    fn load_rejects_non_unit_lights() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        std::fs::write(
            &p,
            r#"{"objects":[{"id":"a","images":[{"path":"x.png","light":[0,0,2]}],"normal":null,"albedo":null}]}"#,
        )
        .unwrap();
        assert!(matches!(
            DatasetManifest::load(&p),
            Err(PhotometricError::Manifest(_))
        ));
    }

    #[test]
    fn json_shape() {
        let m = DatasetManifest::new(
            vec![ObjectEntry {
                id: "a".into(),
                images: vec![ImageEntry {
                    path: "a/l0.png".into(),
                    light: [0.0, 0.0, 1.0],
                }],
                normal: None,
                albedo: Some("a/alb.png".into()),
            }],
            "/tmp",
        );
        let v: serde_json::Value = serde_json::to_value(&m).unwrap();
        assert_eq!(v["objects"][0]["normal"], serde_json::Value::Null);
        assert_eq!(v["objects"][0]["images"][0]["light"][2], 1.0);
        assert_eq!(v.as_object().unwrap().len(), 1);
    }
}
