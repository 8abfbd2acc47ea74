//! OpenPose BODY_25 keypoints.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

pub const NUM_KEYPOINTS: usize = 25;

/// BODY_25 joint indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(usize)]
pub enum Joint {
    Nose = 0,
    Neck = 1,
    RShoulder = 2,
    RElbow = 3,
    RWrist = 4,
    LShoulder = 5,
    LElbow = 6,
    LWrist = 7,
    MidHip = 8,
    RHip = 9,
    RKnee = 10,
    RAnkle = 11,
    LHip = 12,
    LKnee = 13,
    LAnkle = 14,
    REye = 15,
    LEye = 16,
    REar = 17,
    LEar = 18,
    LBigToe = 19,
    LSmallToe = 20,
    LHeel = 21,
    RBigToe = 22,
    RSmallToe = 23,
    RHeel = 24,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Keypoint {
    pub position: Point<f64>,
    pub confidence: f64,
}

impl Keypoint {
    pub fn is_missing(&self) -> bool {
        self.confidence <= 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keypoints {
    points: Vec<Keypoint>,
    image_w: usize,
    image_h: usize,
}

#[derive(Deserialize)]
struct OpenPoseFile {
    people: Vec<OpenPosePerson>,
}

#[derive(Deserialize)]
struct OpenPosePerson {
    pose_keypoints_2d: Vec<f64>,
}

impl Keypoints {
    /// Builds from a flat `[x0, y0, c0, x1, ...]` list of 75 values,
    /// clamping coordinates into the image.
    pub fn from_flat(values: &[f64], image_w: usize, image_h: usize) -> Result<Self> {
        if values.len() != NUM_KEYPOINTS * 3 {
            return Err(Error::InvalidParams(format!(
                "expected {} keypoint values, got {}",
                NUM_KEYPOINTS * 3,
                values.len()
            )));
        }
        if image_w == 0 || image_h == 0 {
            return Err(Error::InvalidParams("image dimensions must be positive".into()));
        }
        let max_x = (image_w - 1) as f64;
        let max_y = (image_h - 1) as f64;
        let points = values
            .chunks_exact(3)
            .map(|c| Keypoint {
                position: Point::new(c[0].clamp(0.0, max_x), c[1].clamp(0.0, max_y)),
                confidence: c[2],
            })
            .collect();
        Ok(Self { points, image_w, image_h })
    }

    pub fn from_openpose_json(text: &str, path: &Path, image_w: usize, image_h: usize) -> Result<Self> {
        let file: OpenPoseFile = serde_json::from_str(text).map_err(|e| Error::malformed(path, e))?;
        let person = file
            .people
            .first()
            .ok_or_else(|| Error::NoPersonDetected { path: path.to_path_buf() })?;
        let n = person.pose_keypoints_2d.len();
        if n != NUM_KEYPOINTS * 3 {
            return Err(Error::malformed(path, format!("pose_keypoints_2d has {n} values, expected 75")));
        }
        Self::from_flat(&person.pose_keypoints_2d, image_w, image_h).map_err(|e| Error::malformed(path, e))
    }

    pub fn to_openpose_json(&self) -> String {
        let flat: Vec<f64> = self.points.iter().flat_map(|k| [k.position.x, k.position.y, k.confidence]).collect();
        serde_json::json!({
            "version": 1.3,
            "people": [{ "person_id": [-1], "pose_keypoints_2d": flat }],
        })
        .to_string()
    }

    pub fn get(&self, joint: Joint) -> &Keypoint {
        &self.points[joint as usize]
    }

    /// Position of a joint, or `None` when it was not detected.
    pub fn position(&self, joint: Joint) -> Option<Point<f64>> {
        let k = self.get(joint);
        (!k.is_missing()).then_some(k.position)
    }

    pub fn points(&self) -> &[Keypoint] {
        &self.points
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.image_w, self.image_h)
    }

    /// Applies `f` to every detected position; used by equivariance tests and
    /// synthetic fixture generation. No clamping is applied.
    pub fn map_positions(&self, f: impl Fn(Point<f64>) -> Point<f64>) -> Self {
        let points = self
            .points
            .iter()
            .map(|k| Keypoint { position: f(k.position), confidence: k.confidence })
            .collect();
        Self { points, ..*self }
    }
}

/// Reads `people[0].pose_keypoints_2d` from an OpenPose JSON file.
pub fn load_keypoints(path: &Path, image_w: usize, image_h: usize) -> Result<Keypoints> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Keypoints::from_openpose_json(&text, path, image_w, image_h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn json_with(values: &[f64]) -> String {
        serde_json::json!({ "people": [{ "pose_keypoints_2d": values }] }).to_string()
    }

    fn parse(text: &str) -> Result<Keypoints> {
        Keypoints::from_openpose_json(text, Path::new("k.json"), 384, 512)
    }

    #[test]
    fn all_zero_means_all_missing() {
        let kp = parse(&json_with(&[0.0; 75])).unwrap();
        assert_eq!(kp.points().len(), 25);
        assert!(kp.points().iter().all(Keypoint::is_missing));
    }

    #[test]
    fn midhip_passes_through() {
        let mut v = [0.0; 75];
        v[24..27].copy_from_slice(&[192.0, 300.0, 0.9]);
        let kp = parse(&json_with(&v)).unwrap();
        let k = kp.get(Joint::MidHip);
        assert_eq!(k.position, Point::new(192.0, 300.0));
        assert_eq!(k.confidence, 0.9);
    }

    #[test]
    fn out_of_bounds_x_is_clamped() {
        let mut v = [0.0; 75];
        v[0..3].copy_from_slice(&[500.0, -3.0, 0.5]);
        let kp = parse(&json_with(&v)).unwrap();
        assert_eq!(kp.get(Joint::Nose).position, Point::new(383.0, 0.0));
    }

    #[test]
    fn wrong_count_is_malformed() {
        assert!(matches!(parse(&json_with(&[0.0; 74])), Err(Error::MalformedFile { .. })));
        assert!(matches!(parse("not json"), Err(Error::MalformedFile { .. })));
    }

    #[test]
    fn empty_people_is_no_person() {
        assert!(matches!(parse(r#"{"people": []}"#), Err(Error::NoPersonDetected { .. })));
    }

    #[test]
    fn json_round_trip() {
        let mut v = [0.0; 75];
        v[27..30].copy_from_slice(&[10.5, 20.25, 0.7]);
        let kp = parse(&json_with(&v)).unwrap();
        assert_eq!(parse(&kp.to_openpose_json()).unwrap(), kp);
    }
}
