//! Pose-anchored sampling grid: 8 nodes along each arm and a 5×8 lattice over
//! the torso, 56 nodes in all, in a fixed order so that node `i` refers to the
//! same body location on every image.

use serde::{Deserialize, Serialize};

use crate::annotations::{DenseposeMap, Joint, Keypoints, LabelMap, LabelSet, RgbImage, Role, ARM_PARTS, TORSO_PARTS};
use crate::error::{Error, Result};
use crate::geometry::{along_polyline, bilinear, Point};
use crate::scalar::Real;

pub const ARM_NODES: usize = 8;
pub const TORSO_COLS: usize = 5;
pub const TORSO_ROWS: usize = 8;
pub const TORSO_NODES: usize = TORSO_COLS * TORSO_ROWS;
pub const GRID_NODES: usize = 2 * ARM_NODES + TORSO_NODES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    LeftArm,
    Torso,
    RightArm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeStatus {
    Active,
    /// Occluded: the body part under the node is not the expected one.
    Missed,
    /// Outside the tried-on garment.
    Unused,
    /// Could not be placed because a keypoint is missing.
    Invalid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node<T> {
    pub region: Region,
    pub index: usize,
    pub position: Point<T>,
    pub status: NodeStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonGrid<T> {
    pub width: usize,
    pub height: usize,
    pub nodes: Vec<Node<T>>,
}

/// DensePose parts a node must sit on to count as visible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityParts {
    pub arm: LabelSet,
    pub torso: LabelSet,
}

impl Default for VisibilityParts {
    fn default() -> Self {
        Self { arm: ARM_PARTS.into_iter().collect(), torso: TORSO_PARTS.into_iter().collect() }
    }
}

fn arm_nodes<T: Real>(region: Region, chain: [Option<Point<f64>>; 3]) -> impl Iterator<Item = Node<T>> {
    let pts: Option<Vec<Point<T>>> = chain.iter().map(|p| p.map(Point::cast)).collect();
    (0..ARM_NODES).map(move |i| match &pts {
        Some(pts) => Node {
            region,
            index: i,
            position: along_polyline(pts, T::of_usize(i) / T::of_usize(ARM_NODES - 1)),
            status: NodeStatus::Active,
        },
        None => Node { region, index: i, position: Point::new(T::zero(), T::zero()), status: NodeStatus::Invalid },
    })
}

pub fn build_grid<T: Real>(kp: &Keypoints) -> Result<SkeletonGrid<T>> {
    let ls = kp.position(Joint::LShoulder);
    let rs = kp.position(Joint::RShoulder);
    let lh = kp.position(Joint::LHip);
    let rh = kp.position(Joint::RHip);
    if ls.is_none() && rs.is_none() {
        return Err(Error::MissingCoreKeypoints("both shoulders"));
    }
    if lh.is_none() && rh.is_none() {
        return Err(Error::MissingCoreKeypoints("both hips"));
    }

    let mut nodes = Vec::with_capacity(GRID_NODES);
    nodes.extend(arm_nodes(Region::LeftArm, [ls, kp.position(Joint::LElbow), kp.position(Joint::LWrist)]));

    let corners = [ls, rs, rh, lh];
    match corners.iter().copied().collect::<Option<Vec<_>>>() {
        Some(c) => {
            let quad = [c[0].cast(), c[1].cast(), c[2].cast(), c[3].cast()];
            for row in 0..TORSO_ROWS {
                let v = T::of_usize(row) / T::of_usize(TORSO_ROWS - 1);
                for col in 0..TORSO_COLS {
                    let u = T::of_usize(col) / T::of_usize(TORSO_COLS - 1);
                    nodes.push(Node {
                        region: Region::Torso,
                        index: row * TORSO_COLS + col,
                        position: bilinear(quad, u, v),
                        status: NodeStatus::Active,
                    });
                }
            }
        }
        None => nodes.extend((0..TORSO_NODES).map(|i| Node {
            region: Region::Torso,
            index: i,
            position: Point::new(T::zero(), T::zero()),
            status: NodeStatus::Invalid,
        })),
    }

    nodes.extend(arm_nodes(Region::RightArm, [rs, kp.position(Joint::RElbow), kp.position(Joint::RWrist)]));
    let (width, height) = kp.dims();
    Ok(SkeletonGrid { width, height, nodes })
}

impl<T: Real> SkeletonGrid<T> {
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().enumerate().filter(|(_, n)| n.status == NodeStatus::Active).map(|(i, _)| i)
    }

    pub fn active_count(&self) -> usize {
        self.active().count()
    }

    pub fn count(&self, region: Region) -> usize {
        self.nodes.iter().filter(|n| n.region == region).count()
    }

    /// Sets `to` on nodes in `from` that fail `keep`.
    fn demote(&self, from: &[NodeStatus], to: NodeStatus, keep: impl Fn(&Node<T>, usize, usize) -> bool) -> Self {
        let mut out = self.clone();
        for n in out.nodes.iter_mut().filter(|n| from.contains(&n.status)) {
            let visible = match n.position.pixel(self.width, self.height) {
                Some((x, y)) => keep(n, x, y),
                None => false,
            };
            if !visible {
                n.status = to;
            }
        }
        out
    }

    fn check_dims(&self, what: &str, dims: (usize, usize)) -> Result<()> {
        if dims != self.dims() {
            return Err(Error::dims(what, self.dims(), dims));
        }
        Ok(())
    }

    /// Demotes nodes whose densepose part is not in their region's expected
    /// group. Occlusion outranks lying off the garment, so Unused nodes can
    /// become Missed too; this makes the two filters commute.
    pub fn filter_missed_with(&self, dp: &DenseposeMap, parts: &VisibilityParts) -> Result<Self> {
        self.check_dims("densepose map", dp.dims())?;
        Ok(self.demote(&[NodeStatus::Active, NodeStatus::Unused], NodeStatus::Missed, |n, x, y| {
            let group = match n.region {
                Region::Torso => &parts.torso,
                Region::LeftArm | Region::RightArm => &parts.arm,
            };
            group.contains(dp.get(x, y))
        }))
    }

    pub fn filter_missed(&self, dp: &DenseposeMap) -> Result<Self> {
        self.filter_missed_with(dp, &VisibilityParts::default())
    }

    /// Demotes active nodes that do not sit on the top garment.
    pub fn filter_unused(&self, parse: &LabelMap) -> Result<Self> {
        self.check_dims("parse map", parse.dims())?;
        let top = parse.role_ids(Role::UpperClothes);
        Ok(self.demote(&[NodeStatus::Active], NodeStatus::Unused, |_, x, y| top.contains(parse.get(x, y))))
    }

    /// Draws node markers on a copy of `image`: green active, red missed,
    /// yellow unused.
    pub fn overlay(&self, image: &RgbImage) -> RgbImage {
        let mut out = image.clone();
        let (w, h) = out.dims();
        for n in &self.nodes {
            let color = match n.status {
                NodeStatus::Active => [0, 220, 0],
                NodeStatus::Missed => [230, 0, 0],
                NodeStatus::Unused => [240, 200, 0],
                NodeStatus::Invalid => continue,
            };
            let Some((cx, cy)) = n.position.pixel(w, h) else { continue };
            for y in cy.saturating_sub(2)..=(cy + 2).min(h - 1) {
                for x in cx.saturating_sub(2)..=(cx + 2).min(w - 1) {
                    out.put(x, y, color);
                }
            }
        }
        out
    }
}

pub fn filter_missed<T: Real>(grid: &SkeletonGrid<T>, dp: &DenseposeMap) -> Result<SkeletonGrid<T>> {
    grid.filter_missed(dp)
}

pub fn filter_unused<T: Real>(grid: &SkeletonGrid<T>, parse: &LabelMap) -> Result<SkeletonGrid<T>> {
    grid.filter_unused(parse)
}

/// Sorted indices active in both grids.
pub fn common_active<T: Real>(real: &SkeletonGrid<T>, virt: &SkeletonGrid<T>) -> Vec<usize> {
    real.nodes
        .iter()
        .zip(&virt.nodes)
        .enumerate()
        .filter(|(_, (a, b))| a.status == NodeStatus::Active && b.status == NodeStatus::Active)
        .map(|(i, _)| i)
        .collect()
}
