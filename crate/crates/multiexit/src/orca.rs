//! Optimal Reciprocal Collision Avoidance.
//!
//! Each frame, every pedestrian gets one half-plane constraint in velocity
//! space per nearby pedestrian and per nearby wall segment. The collision-free
//! velocity closest to the preferred one is found by an incremental 2D linear
//! program; when the constraints are infeasible the velocity minimizing the
//! maximum constraint violation is used instead, keeping obstacle constraints
//! hard.
//!
//! Agent-agent constraints follow the reciprocal velocity-obstacle
//! construction of Van den Berg et al. (RVO2), each agent taking half the
//! required relative-velocity correction. Wall segments are linearized at the
//! closest point: the velocity component toward the wall may not exceed the
//! remaining gap divided by the obstacle horizon, so a single frame can never
//! penetrate.

use crate::geometry::{closest_point_on_segment, Vec2};
use serde::{Deserialize, Serialize};

const EPSILON: f64 = 1e-10;
/// Deterministic lateral tilt applied to break exact head-on symmetry.
const SYMMETRY_PERTURBATION: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct PedestrianState {
    pub id: u32,
    pub position: Vec2,
    pub velocity: Vec2,
    /// Collision-free velocity produced by the last ORCA solve.
    pub optimal_velocity: Vec2,
    /// Policy-chosen velocity before collision filtering.
    pub preferred_velocity: Vec2,
    pub radius: f64,
    /// Units per frame.
    pub max_speed: f64,
    pub active: bool,
}

impl PedestrianState {
    pub fn new(id: u32, position: Vec2, radius: f64, max_speed: f64) -> Self {
        assert!(radius > 0.0 && max_speed > 0.0);
        PedestrianState {
            id,
            position,
            velocity: Vec2::ZERO,
            optimal_velocity: Vec2::ZERO,
            preferred_velocity: Vec2::ZERO,
            radius,
            max_speed,
            active: true,
        }
    }
}

/// A wall piece. Pedestrians must keep `radius` clearance from the segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSegment {
    pub endpoint_a: Vec2,
    pub endpoint_b: Vec2,
}

impl ObstacleSegment {
    pub fn new(endpoint_a: Vec2, endpoint_b: Vec2) -> Self {
        assert!(endpoint_a != endpoint_b, "degenerate obstacle segment");
        ObstacleSegment {
            endpoint_a,
            endpoint_b,
        }
    }
}

/// Half-plane in velocity space. A velocity `v` is feasible iff
/// `(v - point) . normal >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlaneConstraint {
    pub point: Vec2,
    pub normal: Vec2,
}

impl HalfPlaneConstraint {
    /// Boundary direction such that the feasible side lies to its left.
    fn direction(&self) -> Vec2 {
        Vec2::new(self.normal.y, -self.normal.x)
    }

    pub fn satisfied_by(&self, v: Vec2) -> bool {
        (v - self.point).dot(self.normal) >= 0.0
    }

    /// Signed violation; positive means infeasible.
    pub fn violation(&self, v: Vec2) -> f64 {
        -(v - self.point).dot(self.normal)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OrcaParams {
    /// Agent-agent time horizon, frames.
    pub time_horizon: f64,
    /// Obstacle time horizon, frames.
    pub obstacle_horizon: f64,
    /// Neighbor cutoff distance as a multiple of the subject radius.
    pub neighbor_cutoff_factor: f64,
    pub max_neighbors: usize,
}

impl Default for OrcaParams {
    fn default() -> Self {
        OrcaParams {
            time_horizon: 10.0,
            obstacle_horizon: 5.0,
            neighbor_cutoff_factor: 15.0,
            max_neighbors: 10,
        }
    }
}

/// Constraints for one subject: obstacle constraints first, then agent
/// constraints in ascending neighbor id. The obstacle prefix stays hard in
/// the infeasible fallback.
pub fn compute_constraints(
    subject: &PedestrianState,
    neighbors: &[&PedestrianState],
    obstacles: &[ObstacleSegment],
    params: &OrcaParams,
) -> Vec<HalfPlaneConstraint> {
    let (constraints, _) = compute_constraints_split(subject, neighbors, obstacles, params);
    constraints
}

/// Like [`compute_constraints`] but also returns the number of leading
/// obstacle constraints.
pub fn compute_constraints_split(
    subject: &PedestrianState,
    neighbors: &[&PedestrianState],
    obstacles: &[ObstacleSegment],
    params: &OrcaParams,
) -> (Vec<HalfPlaneConstraint>, usize) {
    assert!(subject.active);
    assert!(params.time_horizon > 0.0 && params.obstacle_horizon > 0.0);

    let mut constraints = Vec::new();
    for segment in obstacles {
        if let Some(c) = obstacle_constraint(subject, segment, params.obstacle_horizon) {
            constraints.push(c);
        }
    }
    let n_obstacle = constraints.len();

    let cutoff = params.neighbor_cutoff_factor * subject.radius;
    let mut near: Vec<&PedestrianState> = neighbors
        .iter()
        .copied()
        .filter(|n| n.active && n.id != subject.id)
        .filter(|n| n.position.distance(subject.position) <= cutoff)
        .collect();
    near.sort_by(|a, b| {
        let da = a.position.distance(subject.position);
        let db = b.position.distance(subject.position);
        da.partial_cmp(&db).unwrap().then(a.id.cmp(&b.id))
    });
    near.truncate(params.max_neighbors);
    // Fixed constraint order for reproducibility.
    near.sort_by_key(|n| n.id);

    for other in near {
        constraints.push(agent_constraint(subject, other, params.time_horizon));
    }
    (constraints, n_obstacle)
}

fn agent_constraint(
    subject: &PedestrianState,
    other: &PedestrianState,
    time_horizon: f64,
) -> HalfPlaneConstraint {
    let relative_position = other.position - subject.position;
    let mut relative_velocity = subject.velocity - other.velocity;
    let dist_sq = relative_position.norm_sq();
    let combined_radius = subject.radius + other.radius;
    let combined_radius_sq = combined_radius * combined_radius;

    let u;
    let normal;

    if dist_sq > combined_radius_sq {
        let inv_horizon = 1.0 / time_horizon;
        // Vector from the truncation-disc center to the relative velocity.
        let mut w = relative_velocity - relative_position * inv_horizon;

        // Exact head-on tie: the relative velocity lies on the VO axis beyond
        // the truncation disc, so neither cone leg is preferred. Tilt the
        // relative velocity by the subject-relative perpendicular; the two
        // agents' tilts are opposite in the world frame, so they dodge to
        // complementary sides deterministically.
        if w.norm_sq() >= EPSILON
            && w.dot(relative_position) >= 0.0
            && relative_position.det(w).abs() < 1e-9
        {
            let lateral = relative_position.perp().normalized().unwrap();
            relative_velocity += lateral * SYMMETRY_PERTURBATION;
            w = relative_velocity - relative_position * inv_horizon;
        }

        let w_len_sq = w.norm_sq();
        let dot1 = w.dot(relative_position);

        if w_len_sq < EPSILON {
            // Relative velocity exactly at the truncation-disc center:
            // project backwards along the axis (pure braking), which keeps
            // mirror-symmetric configurations mirror-symmetric.
            let unit_w = -relative_position.normalized().unwrap();
            normal = unit_w;
            u = unit_w * (combined_radius * inv_horizon);
        } else if dot1 < 0.0 && dot1 * dot1 > combined_radius_sq * w_len_sq {
            // Closest exit of the VO is through the truncation disc.
            let w_len = w_len_sq.sqrt();
            let unit_w = w * (1.0 / w_len);
            normal = unit_w;
            u = unit_w * (combined_radius * inv_horizon - w_len);
        } else {
            // Closest exit is through one of the cone legs.
            let leg = (dist_sq - combined_radius_sq).sqrt();
            let direction = if relative_position.det(w) > 0.0 {
                Vec2::new(
                    relative_position.x * leg - relative_position.y * combined_radius,
                    relative_position.x * combined_radius + relative_position.y * leg,
                ) * (1.0 / dist_sq)
            } else {
                Vec2::new(
                    relative_position.x * leg + relative_position.y * combined_radius,
                    -relative_position.x * combined_radius + relative_position.y * leg,
                ) * (-1.0 / dist_sq)
            };
            let dot2 = relative_velocity.dot(direction);
            u = direction * dot2 - relative_velocity;
            // Feasible side is to the left of the leg direction.
            normal = direction.perp();
        }
    } else {
        // Discs already overlap: push apart over the current time step.
        let inv_time_step = 1.0;
        let offset = if dist_sq > EPSILON {
            relative_position * inv_time_step
        } else {
            // Coincident centers: deterministic separation axis by id order.
            let sign = if subject.id < other.id { 1.0 } else { -1.0 };
            Vec2::new(0.0, sign * EPSILON.sqrt())
        };
        let w = relative_velocity - offset;
        let w_len = w.norm();
        let unit_w = if w_len > EPSILON {
            w * (1.0 / w_len)
        } else {
            (-offset).normalized().unwrap_or(Vec2::new(0.0, 1.0))
        };
        normal = unit_w;
        u = unit_w * (combined_radius * inv_time_step - w_len);
    }

    HalfPlaneConstraint {
        point: subject.velocity + u * 0.5,
        normal,
    }
}

fn obstacle_constraint(
    subject: &PedestrianState,
    segment: &ObstacleSegment,
    obstacle_horizon: f64,
) -> Option<HalfPlaneConstraint> {
    let cp = closest_point_on_segment(subject.position, segment.endpoint_a, segment.endpoint_b);
    let diff = cp - subject.position;
    let dist = diff.norm();
    if dist < EPSILON {
        // Center exactly on the segment: forbid all motion along the inward
        // normal; push out along the segment's perpendicular.
        let n = (segment.endpoint_b - segment.endpoint_a)
            .perp()
            .normalized()?;
        return Some(HalfPlaneConstraint {
            point: n * subject.radius,
            normal: n,
        });
    }
    let toward = diff * (1.0 / dist);
    let gap = dist - subject.radius;
    if gap >= subject.max_speed * obstacle_horizon {
        return None; // cannot bind
    }
    // Approach speed toward the wall limited to gap / horizon; when already
    // overlapping the bound is negative and forces outward motion this frame.
    let bound = if gap >= 0.0 {
        gap / obstacle_horizon
    } else {
        gap
    };
    Some(HalfPlaneConstraint {
        point: toward * bound,
        normal: -toward,
    })
}

/// Velocity inside all half-planes and the speed disc, closest to
/// `preferred`. Falls back to minimizing the maximum violation when the
/// intersection is empty.
pub fn solve_velocity(
    constraints: &[HalfPlaneConstraint],
    preferred: Vec2,
    max_speed: f64,
) -> Vec2 {
    solve_velocity_split(constraints, 0, preferred, max_speed)
}

/// As [`solve_velocity`], keeping the first `n_obstacle` constraints hard in
/// the infeasible fallback.
pub fn solve_velocity_split(
    constraints: &[HalfPlaneConstraint],
    n_obstacle: usize,
    preferred: Vec2,
    max_speed: f64,
) -> Vec2 {
    assert!(max_speed > 0.0);
    let mut result = Vec2::ZERO;
    let fail = linear_program_2(constraints, max_speed, preferred, false, &mut result);
    if let Some(begin) = fail {
        linear_program_3(constraints, n_obstacle, begin, max_speed, &mut result);
    }
    result
}

/// Re-optimize along the boundary line of constraint `line_no`, subject to
/// constraints `0..line_no` and the speed disc. Returns false if infeasible.
fn linear_program_1(
    constraints: &[HalfPlaneConstraint],
    line_no: usize,
    radius: f64,
    opt_velocity: Vec2,
    direction_opt: bool,
    result: &mut Vec2,
) -> bool {
    let line = &constraints[line_no];
    let dir = line.direction();
    let dot_product = line.point.dot(dir);
    let discriminant = dot_product * dot_product + radius * radius - line.point.norm_sq();
    if discriminant < 0.0 {
        return false; // boundary line misses the speed disc
    }
    let sqrt_disc = discriminant.sqrt();
    let mut t_left = -dot_product - sqrt_disc;
    let mut t_right = -dot_product + sqrt_disc;

    for prev in constraints.iter().take(line_no) {
        let prev_dir = prev.direction();
        let denominator = dir.det(prev_dir);
        let numerator = prev_dir.det(line.point - prev.point);
        if denominator.abs() <= EPSILON {
            if numerator < 0.0 {
                return false;
            }
            continue;
        }
        let t = numerator / denominator;
        if denominator >= 0.0 {
            t_right = t_right.min(t);
        } else {
            t_left = t_left.max(t);
        }
        if t_left > t_right {
            return false;
        }
    }

    let t = if direction_opt {
        if opt_velocity.dot(dir) > 0.0 {
            t_right
        } else {
            t_left
        }
    } else {
        (dir.dot(opt_velocity - line.point)).clamp(t_left, t_right)
    };
    *result = line.point + dir * t;
    true
}

/// Incremental 2D LP over the half-planes and the speed disc. Returns
/// `Some(i)` with the first infeasible constraint index on failure.
fn linear_program_2(
    constraints: &[HalfPlaneConstraint],
    radius: f64,
    opt_velocity: Vec2,
    direction_opt: bool,
    result: &mut Vec2,
) -> Option<usize> {
    *result = if direction_opt {
        // opt_velocity is a unit direction: optimize to the disc edge.
        opt_velocity * radius
    } else if opt_velocity.norm_sq() > radius * radius {
        opt_velocity.normalized().unwrap() * radius
    } else {
        opt_velocity
    };

    for i in 0..constraints.len() {
        if constraints[i].violation(*result) > 0.0 {
            let temp = *result;
            if !linear_program_1(constraints, i, radius, opt_velocity, direction_opt, result) {
                *result = temp;
                return Some(i);
            }
        }
    }
    None
}

/// 3rd-stage LP: minimize the maximum violation of the soft constraints from
/// `begin` on, keeping the first `n_obstacle` constraints hard.
fn linear_program_3(
    constraints: &[HalfPlaneConstraint],
    n_obstacle: usize,
    begin: usize,
    radius: f64,
    result: &mut Vec2,
) {
    let mut distance = 0.0;
    for i in begin..constraints.len() {
        if constraints[i].violation(*result) <= distance {
            continue;
        }
        let dir_i = constraints[i].direction();
        let mut proj: Vec<HalfPlaneConstraint> = constraints[..n_obstacle.min(i)].to_vec();
        for j in n_obstacle..i {
            let dir_j = constraints[j].direction();
            let determinant = dir_i.det(dir_j);
            let point = if determinant.abs() <= EPSILON {
                if dir_i.dot(dir_j) > 0.0 {
                    continue; // parallel, same direction: redundant
                }
                (constraints[i].point + constraints[j].point) * 0.5
            } else {
                constraints[i].point
                    + dir_i * (dir_j.det(constraints[i].point - constraints[j].point) / determinant)
            };
            let direction = (dir_j - dir_i).normalized().unwrap_or(dir_i);
            // Rebuild the half-plane from its boundary direction.
            proj.push(HalfPlaneConstraint {
                point,
                normal: Vec2::new(-direction.y, direction.x),
            });
        }
        let temp = *result;
        let toward = Vec2::new(-dir_i.y, dir_i.x); // constraint normal
        if linear_program_2(&proj, radius, toward, true, result).is_some() {
            // Should not happen by construction; keep the previous result.
            *result = temp;
        }
        distance = constraints[i].violation(*result);
    }
}

/// Set every active pedestrian's `optimal_velocity` from a single immutable
/// snapshot of all states (simultaneous update).
pub fn step_velocities(
    all: &mut [PedestrianState],
    obstacles: &[ObstacleSegment],
    params: &OrcaParams,
) {
    let snapshot: Vec<PedestrianState> = all.to_vec();
    for ped in all.iter_mut() {
        if !ped.active {
            continue;
        }
        let subject = snapshot.iter().find(|p| p.id == ped.id).unwrap();
        let neighbors: Vec<&PedestrianState> =
            snapshot.iter().filter(|p| p.id != ped.id).collect();
        let (constraints, n_obstacle) =
            compute_constraints_split(subject, &neighbors, obstacles, params);
        ped.optimal_velocity = solve_velocity_split(
            &constraints,
            n_obstacle,
            subject.preferred_velocity,
            subject.max_speed,
        );
    }
}
