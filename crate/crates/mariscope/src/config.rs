//! Pipeline configuration (JSON). Every field has a default, so `{}` is a
//! valid configuration.

use std::path::{Path, PathBuf};

use mariscope_core::background::BackgroundMethod;
use mariscope_core::foreground::{Connectivity, TrackerParams};
use mariscope_core::{HorizonConfig, Interpolation};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::CameraClass;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub horizon: HorizonConfig,
    pub registration: RegistrationConfig,
    pub background: BackgroundConfig,
    pub detection: DetectionConfig,
    pub eval: EvalConfig,
    pub pipeline: PipelineConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegistrationConfig {
    /// `false` passes frames through with identity transforms. Unset means
    /// on for at-sea cameras and off for on-shore ones, whose frames are
    /// already registered.
    pub enabled: Option<bool>,
    pub mode: RegistrationMode,
    /// Landmark CSV for `landmarks` mode.
    pub landmarks: Option<PathBuf>,
    /// Defaults to `max(20, H/20)`.
    pub strip_height: Option<usize>,
    /// Defaults to `W/4`.
    pub max_shift: Option<usize>,
    /// Strip matches whose correlation peak is below this keep the previous
    /// frame's horizontal shift.
    pub min_peak: f64,
    pub interpolation: Interpolation,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        RegistrationConfig {
            enabled: None,
            mode: RegistrationMode::HorizonStrip,
            landmarks: None,
            strip_height: None,
            max_shift: None,
            min_peak: 0.0,
            interpolation: Interpolation::Bilinear,
        }
    }
}

impl RegistrationConfig {
    pub fn enabled_for(&self, camera: CameraClass) -> bool {
        self.enabled.unwrap_or(camera == CameraClass::AtSea)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegistrationMode {
    /// Roll and pitch from the horizon only.
    #[serde(rename = "horizon")]
    Horizon,
    /// Horizon plus yaw from strip cross-correlation.
    #[default]
    #[serde(rename = "horizon+strip")]
    HorizonStrip,
    /// Similarity transforms fitted to landmark point pairs.
    #[serde(rename = "landmarks")]
    Landmarks,
}

impl RegistrationMode {
    pub fn from_name(s: &str) -> Option<Self> {
        serde_json::from_value(serde_json::Value::String(s.into())).ok()
    }

    pub fn uses_horizon(self) -> bool {
        self != RegistrationMode::Landmarks
    }
}

/// `method` selects the model and defaults to `gmm`; the remaining keys are
/// that model's parameters plus `warmup`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BackgroundConfig {
    #[serde(flatten)]
    pub method: BackgroundMethod,
    pub warmup: usize,
}

impl<'de> Deserialize<'de> for BackgroundConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut map = serde_json::Map::<String, serde_json::Value>::deserialize(d)?;
        let warmup = match map.remove("warmup") {
            Some(v) => serde_json::from_value(v).map_err(D::Error::custom)?,
            None => BackgroundConfig::default().warmup,
        };
        map.entry("method").or_insert_with(|| "gmm".into());
        let method = serde_json::from_value(serde_json::Value::Object(map)).map_err(D::Error::custom)?;
        Ok(BackgroundConfig { method, warmup })
    }
}

impl Default for BackgroundConfig {
    fn default() -> Self {
        BackgroundConfig { method: BackgroundMethod::default(), warmup: 50 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionConfig {
    pub connectivity: Connectivity,
    pub min_area: usize,
    #[serde(flatten)]
    pub tracker: TrackerParams,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig { connectivity: Connectivity::Eight, min_area: 15, tracker: TrackerParams::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub iou_threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { iou_threshold: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Frames processed per batch; bounds memory use.
    pub chunk_frames: usize,
    pub overlays: bool,
    /// Extension of written images: `ppm`/`pgm` or `png`.
    pub image_format: ImageFormat,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { chunk_frames: 32, overlays: false, image_format: ImageFormat::Pnm }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    #[default]
    Pnm,
    Png,
}

impl ImageFormat {
    /// File extension for a frame with `channels` samples per pixel.
    pub fn ext(self, gray: bool) -> &'static str {
        match (self, gray) {
            (ImageFormat::Png, _) => "png",
            (ImageFormat::Pnm, true) => "pgm",
            (ImageFormat::Pnm, false) => "ppm",
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Config = serde_json::from_str(&text).map_err(|e| Error::format(path, e))?;
        if let (Some(l), Some(base)) = (&cfg.registration.landmarks, path.parent()) {
            cfg.registration.landmarks = Some(base.join(l));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if self.pipeline.chunk_frames == 0 {
            return bad("pipeline.chunk_frames must be at least 1");
        }
        if !(self.eval.iou_threshold > 0.0 && self.eval.iou_threshold < 1.0) {
            return bad("eval.iou_threshold must be in (0, 1)");
        }
        if self.registration.mode == RegistrationMode::Landmarks && self.registration.landmarks.is_none() {
            return bad("registration.mode \"landmarks\" needs registration.landmarks");
        }
        if !(self.registration.min_peak >= -1.0 && self.registration.min_peak <= 1.0) {
            return bad("registration.min_peak must be in [-1, 1]");
        }
        if !(self.detection.tracker.max_dist >= 0.0 && self.detection.tracker.eps >= 0.0) {
            return bad("detection distances must be non-negative");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mariscope_core::background::SingleGaussianParams;

    #[test]
    fn empty_object_is_default() {
        let c: Config = serde_json::from_str("{}").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.detection.min_area, 15);
        assert_eq!(c.detection.tracker.gap_max, 5);
    }

    #[test]
    fn background_method_defaults_to_mixture() {
        let c: Config = serde_json::from_str(r#"{"background": {"warmup": 20, "components": 3}}"#).unwrap();
        assert_eq!(c.background.warmup, 20);
        match c.background.method {
            BackgroundMethod::Gmm(p) => assert_eq!(p.components, 3),
            m => panic!("unexpected {m:?}"),
        }
    }

    #[test]
    fn nested_overrides() {
        let c: Config = serde_json::from_str(
            r#"{"horizon": {"metric": "bhattacharyya", "hough": {"top_k": 5}},
                "background": {"method": "single-gaussian", "learning_rate": 0.05, "warmup": 10},
                "detection": {"connectivity": "4", "eps": 3.0}}"#,
        )
        .unwrap();
        assert_eq!(c.horizon.hough.top_k, 5);
        assert_eq!(c.background.warmup, 10);
        assert_eq!(c.background.method, BackgroundMethod::SingleGaussian(SingleGaussianParams { learning_rate: 0.05, ..Default::default() }));
        assert_eq!(c.detection.connectivity, Connectivity::Four);
        assert_eq!(c.detection.tracker.eps, 3.0);
    }

    #[test]
    fn round_trips_through_json() {
        let c = Config::default();
        let back: Config = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<Config>(r#"{"registraton": {}}"#).is_err());
    }
}
