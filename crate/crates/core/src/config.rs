//! Pipeline parameters and their flat `key = value` text form.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::verify::ScoreVariant;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VotingMode {
    Hierarchical,
    Vanilla,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    // submap accumulation
    pub r_v: f64,
    pub d_s: f64,
    // plane segmentation
    pub s_v: f64,
    pub sigma_lambda: f64,
    pub merge_normal_deg: f64,
    pub merge_dist_m: f64,
    pub gravity_tol_deg: f64,
    // lines and corners
    pub s_i: f64,
    pub l_min_px: f64,
    pub merge_endpoint_m: f64,
    pub merge_angle_deg: f64,
    pub extend_m: f64,
    pub nms_radius_m: f64,
    // descriptors
    pub r_s: f64,
    pub r_a_deg: f64,
    pub l_max: f64,
    pub min_angle_deg: f64,
    // voting
    pub r_xy: f64,
    pub r_yaw_deg: f64,
    pub residual_max_m: f64,
    pub top_l: usize,
    pub top_k: usize,
    pub top_j: usize,
    pub voting: VotingMode,
    // verification
    pub s_r: f64,
    pub k_d: u32,
    pub lambda: f64,
    pub score_variant: ScoreVariant,
    pub confidence_threshold: f64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            r_v: 0.8,
            d_s: 15.0,
            s_v: 2.0,
            sigma_lambda: 10.0,
            merge_normal_deg: 10.0,
            merge_dist_m: 0.1,
            gravity_tol_deg: 15.0,
            s_i: 60.0,
            l_min_px: 30.0,
            merge_endpoint_m: 0.3,
            merge_angle_deg: 5.0,
            extend_m: 1.0,
            nms_radius_m: 0.5,
            r_s: 0.5,
            r_a_deg: 3.0,
            l_max: 30.0,
            min_angle_deg: 10.0,
            r_xy: 0.15,
            r_yaw_deg: 1.0,
            residual_max_m: 0.3,
            top_l: 10000,
            top_k: 5000,
            top_j: 1500,
            voting: VotingMode::Hierarchical,
            s_r: 0.2,
            k_d: 5,
            lambda: 0.5,
            score_variant: ScoreVariant::Osc,
            confidence_threshold: 0.75,
            threads: 0,
        }
    }
}

/// Every configuration key, in echo order.
pub const CONFIG_KEYS: &[&str] = &[
    "r_v",
    "d_s",
    "s_v",
    "sigma_lambda",
    "merge_normal_deg",
    "merge_dist_m",
    "gravity_tol_deg",
    "s_i",
    "l_min_px",
    "merge_endpoint_m",
    "merge_angle_deg",
    "extend_m",
    "nms_radius_m",
    "r_s",
    "r_a_deg",
    "l_max",
    "min_angle_deg",
    "r_xy",
    "r_yaw_deg",
    "residual_max_m",
    "top_l",
    "top_k",
    "top_j",
    "voting",
    "s_r",
    "k_d",
    "lambda",
    "score_variant",
    "confidence_threshold",
    "threads",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::InvalidArgument(format!("bad value `{v}` for `{key}`")))
}

fn variant_name(v: ScoreVariant) -> &'static str {
    match v {
        ScoreVariant::Osc => "osc",
        ScoreVariant::AwardOnly => "osc1",
        ScoreVariant::FreeFreeAward => "osc2",
        ScoreVariant::OccupiedFreePenalty => "osc3",
    }
}

impl PipelineConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "r_v" => self.r_v = num(key, v)?,
            "d_s" => self.d_s = num(key, v)?,
            "s_v" => self.s_v = num(key, v)?,
            "sigma_lambda" => self.sigma_lambda = num(key, v)?,
            "merge_normal_deg" => self.merge_normal_deg = num(key, v)?,
            "merge_dist_m" => self.merge_dist_m = num(key, v)?,
            "gravity_tol_deg" => self.gravity_tol_deg = num(key, v)?,
            "s_i" => self.s_i = num(key, v)?,
            "l_min_px" => self.l_min_px = num(key, v)?,
            "merge_endpoint_m" => self.merge_endpoint_m = num(key, v)?,
            "merge_angle_deg" => self.merge_angle_deg = num(key, v)?,
            "extend_m" => self.extend_m = num(key, v)?,
            "nms_radius_m" => self.nms_radius_m = num(key, v)?,
            "r_s" => self.r_s = num(key, v)?,
            "r_a_deg" => self.r_a_deg = num(key, v)?,
            "l_max" => self.l_max = num(key, v)?,
            "min_angle_deg" => self.min_angle_deg = num(key, v)?,
            "r_xy" => self.r_xy = num(key, v)?,
            "r_yaw_deg" => self.r_yaw_deg = num(key, v)?,
            "residual_max_m" => self.residual_max_m = num(key, v)?,
            "top_l" => self.top_l = num(key, v)?,
            "top_k" => self.top_k = num(key, v)?,
            "top_j" => self.top_j = num(key, v)?,
            "voting" => {
                self.voting = match v {
                    "hierarchical" => VotingMode::Hierarchical,
                    "vanilla" => VotingMode::Vanilla,
                    _ => return Err(Error::InvalidArgument(format!("voting must be hierarchical or vanilla, got `{v}`"))),
                }
            }
            "s_r" => self.s_r = num(key, v)?,
            "k_d" => self.k_d = num(key, v)?,
            "lambda" => self.lambda = num(key, v)?,
            "score_variant" => {
                self.score_variant = match v {
                    "osc" => ScoreVariant::Osc,
                    "osc1" => ScoreVariant::AwardOnly,
                    "osc2" => ScoreVariant::FreeFreeAward,
                    "osc3" => ScoreVariant::OccupiedFreePenalty,
                    _ => return Err(Error::InvalidArgument(format!("unknown score_variant `{v}`"))),
                }
            }
            "confidence_threshold" => self.confidence_threshold = num(key, v)?,
            "threads" => self.threads = num(key, v)?,
            _ => return Err(Error::InvalidArgument(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "r_v" => self.r_v.to_string(),
            "d_s" => self.d_s.to_string(),
            "s_v" => self.s_v.to_string(),
            "sigma_lambda" => self.sigma_lambda.to_string(),
            "merge_normal_deg" => self.merge_normal_deg.to_string(),
            "merge_dist_m" => self.merge_dist_m.to_string(),
            "gravity_tol_deg" => self.gravity_tol_deg.to_string(),
            "s_i" => self.s_i.to_string(),
            "l_min_px" => self.l_min_px.to_string(),
            "merge_endpoint_m" => self.merge_endpoint_m.to_string(),
            "merge_angle_deg" => self.merge_angle_deg.to_string(),
            "extend_m" => self.extend_m.to_string(),
            "nms_radius_m" => self.nms_radius_m.to_string(),
            "r_s" => self.r_s.to_string(),
            "r_a_deg" => self.r_a_deg.to_string(),
            "l_max" => self.l_max.to_string(),
            "min_angle_deg" => self.min_angle_deg.to_string(),
            "r_xy" => self.r_xy.to_string(),
            "r_yaw_deg" => self.r_yaw_deg.to_string(),
            "residual_max_m" => self.residual_max_m.to_string(),
            "top_l" => self.top_l.to_string(),
            "top_k" => self.top_k.to_string(),
            "top_j" => self.top_j.to_string(),
            "voting" => match self.voting {
                VotingMode::Hierarchical => "hierarchical".into(),
                VotingMode::Vanilla => "vanilla".into(),
            },
            "s_r" => self.s_r.to_string(),
            "k_d" => self.k_d.to_string(),
            "lambda" => self.lambda.to_string(),
            "score_variant" => variant_name(self.score_variant).into(),
            "confidence_threshold" => self.confidence_threshold.to_string(),
            "threads" => self.threads.to_string(),
            _ => return None,
        })
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, source_name: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::parse(source_name, idx + 1, format!("expected `key = value`, got `{line}`")));
            };
            self.set(k.trim(), v).map_err(|e| Error::parse(source_name, idx + 1, e.to_string()))?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(&text, &path.display().to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The effective configuration as `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for k in CONFIG_KEYS {
            let _ = writeln!(out, "{k} = {}", self.get(k).expect("known key"));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("r_v", self.r_v),
            ("d_s", self.d_s),
            ("s_v", self.s_v),
            ("merge_normal_deg", self.merge_normal_deg),
            ("merge_dist_m", self.merge_dist_m),
            ("gravity_tol_deg", self.gravity_tol_deg),
            ("s_i", self.s_i),
            ("l_min_px", self.l_min_px),
            ("merge_endpoint_m", self.merge_endpoint_m),
            ("merge_angle_deg", self.merge_angle_deg),
            ("extend_m", self.extend_m),
            ("nms_radius_m", self.nms_radius_m),
            ("r_s", self.r_s),
            ("r_a_deg", self.r_a_deg),
            ("l_max", self.l_max),
            ("min_angle_deg", self.min_angle_deg),
            ("r_xy", self.r_xy),
            ("r_yaw_deg", self.r_yaw_deg),
            ("residual_max_m", self.residual_max_m),
            ("s_r", self.s_r),
            ("lambda", self.lambda),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("`{k}` must be positive, got {v}")));
            }
        }
        if self.sigma_lambda.is_nan() || self.sigma_lambda <= 1.0 {
            return Err(Error::InvalidArgument("`sigma_lambda` must exceed 1".into()));
        }
        if self.k_d == 0 {
            return Err(Error::InvalidArgument("`k_d` must be at least 1".into()));
        }
        if !(self.top_l >= self.top_k && self.top_k >= self.top_j && self.top_j >= 1) {
            return Err(Error::InvalidArgument(format!(
                "need top_l ≥ top_k ≥ top_j ≥ 1, got {}/{}/{}",
                self.top_l, self.top_k, self.top_j
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = PipelineConfig::default();
        cfg.set("lambda", "0.25").unwrap();
        cfg.set("voting", "vanilla").unwrap();
        cfg.set("score_variant", "osc3").unwrap();
        let mut back = PipelineConfig::default();
        back.apply_text(&cfg.to_text(), "t").unwrap();
        assert_eq!(back, cfg);
        assert_eq!(PipelineConfig::default().to_text().lines().count(), CONFIG_KEYS.len());
    }

    #[test]
    fn rejects_bad_input() {
        let mut cfg = PipelineConfig::default();
        assert!(cfg.set("nope", "1").is_err());
        assert!(cfg.set("r_s", "abc").is_err());
        assert!(matches!(cfg.apply_text("r_s 0.5\n", "c"), Err(Error::Parse { line: 1, .. })));
        cfg.top_j = cfg.top_k + 1;
        assert!(cfg.validate().is_err());
        assert!(PipelineConfig::default().validate().is_ok());
    }
}
