//! Fixed-step world stepped with sequential impulses.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::collide::{self, Collider, ContactPoint, Placed};

/// Rigid-body state. `inverse_mass == 0` marks a static body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyState {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
    pub linear_velocity: Vector3<f64>,
    pub angular_velocity: Vector3<f64>,
    pub inverse_mass: f64,
    /// Body-frame inverse inertia tensor.
    pub inverse_inertia: Matrix3<f64>,
}

impl BodyState {
    pub fn is_static(&self) -> bool {
        self.inverse_mass == 0.0
    }

    pub fn mass(&self) -> f64 {
        if self.is_static() {
            f64::INFINITY
        } else {
            1.0 / self.inverse_mass
        }
    }

    pub fn world_inverse_inertia(&self) -> Matrix3<f64> {
        let r = self.orientation.to_rotation_matrix().into_inner();
        r * self.inverse_inertia * r.transpose()
    }

    pub fn velocity_at(&self, point: &Vector3<f64>) -> Vector3<f64> {
        self.linear_velocity + self.angular_velocity.cross(&(point - self.position))
    }

    pub fn kinetic_energy(&self) -> f64 {
        if self.is_static() {
            return 0.0;
        }
        let inertia = self
            .world_inverse_inertia()
            .try_inverse()
            .unwrap_or_else(Matrix3::zeros);
        0.5 * self.mass() * self.linear_velocity.norm_squared()
            + 0.5 * self.angular_velocity.dot(&(inertia * self.angular_velocity))
    }

    pub fn momentum(&self) -> Vector3<f64> {
        if self.is_static() {
            Vector3::zeros()
        } else {
            self.linear_velocity * self.mass()
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|x| x.is_finite())
            && self.orientation.coords.iter().all(|x| x.is_finite())
            && self.linear_velocity.iter().all(|x| x.is_finite())
            && self.angular_velocity.iter().all(|x| x.is_finite())
    }

    fn apply_impulse(&mut self, impulse: &Vector3<f64>, point: &Vector3<f64>) {
        if self.is_static() {
            return;
        }
        self.linear_velocity += impulse * self.inverse_mass;
        let r = point - self.position;
        self.angular_velocity += self.world_inverse_inertia() * r.cross(impulse);
    }
}

#[derive(Debug, Clone)]
pub struct Body {
    pub state: BodyState,
    pub collider: Collider,
    pub restitution: f64,
    pub friction: f64,
    /// m, used to scale penetration tolerances
    pub characteristic_size: f64,
}

impl Body {
    /// Solid sphere.
    pub fn sphere(center: Vector3<f64>, radius: f64, mass: f64, restitution: f64, friction: f64) -> Self {
        let i = 0.4 * mass * radius * radius;
        Body {
            state: BodyState {
                position: center,
                orientation: UnitQuaternion::identity(),
                linear_velocity: Vector3::zeros(),
                angular_velocity: Vector3::zeros(),
                inverse_mass: 1.0 / mass,
                inverse_inertia: Matrix3::identity() / i,
            },
            collider: Collider::Sphere { radius },
            restitution,
            friction,
            characteristic_size: 2.0 * radius,
        }
    }

    /// Solid cube with edge length `edge`.
    pub fn cube(center: Vector3<f64>, edge: f64, mass: f64, restitution: f64, friction: f64) -> Self {
        let i = mass * edge * edge / 6.0;
        Body {
            state: BodyState {
                position: center,
                orientation: UnitQuaternion::identity(),
                linear_velocity: Vector3::zeros(),
                angular_velocity: Vector3::zeros(),
                inverse_mass: 1.0 / mass,
                inverse_inertia: Matrix3::identity() / i,
            },
            collider: Collider::Cube { half: 0.5 * edge },
            restitution,
            friction,
            characteristic_size: edge,
        }
    }

    pub fn with_velocity(mut self, v: Vector3<f64>) -> Self {
        self.state.linear_velocity = v;
        self
    }

    pub fn make_static(mut self) -> Self {
        self.state.inverse_mass = 0.0;
        self.state.inverse_inertia = Matrix3::zeros();
        self
    }

    fn placed(&self) -> Placed {
        Placed {
            collider: self.collider,
            center: self.state.position,
            rotation: self.state.orientation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub iterations: usize,
    /// Baumgarte positional-correction factor.
    pub baumgarte: f64,
    /// m, penetration tolerated before Baumgarte correction engages
    pub slop: f64,
    /// m/s, persistent-contact speeds below this are zeroed
    pub sleep_speed: f64,
    /// m/s, approach speeds below this are treated as inelastic
    pub restitution_threshold: f64,
    /// J, kinetic energy a contact solve may add before restitution is
    /// scaled back
    pub energy_tolerance: f64,
    pub projection_iterations: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            iterations: 20,
            baumgarte: 0.2,
            slop: 1e-3,
            sleep_speed: 1e-3,
            restitution_threshold: 0.1,
            energy_tolerance: 1e-9,
            projection_iterations: 16,
        }
    }
}

/// Second body of a contact pair; `None` is the ground plane.
pub type PairKey = (usize, Option<usize>);

/// Per-pair contact outcome of one substep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairImpulse {
    /// N·s, summed normal impulse over the pair's contact points
    pub impulse: f64,
    /// m/s, largest pre-solve approach speed among the points
    pub approach_speed: f64,
    /// m/s, post-solve separation speed at that point
    pub separation_speed: f64,
}

/// Invariant measurements for one substep.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepDiagnostics {
    /// J, kinetic energy after minus before the contact solve
    pub energy_change: f64,
    /// kg·m/s, largest linear-momentum change over contact islands that
    /// touch neither the ground nor a static body
    pub momentum_error: f64,
    /// Largest post-step overlap divided by the smaller characteristic size
    /// of the pair.
    pub penetration_ratio: f64,
    pub contact_points: usize,
}

#[derive(Debug, Clone, Default)]
pub struct StepReport {
    pub pairs: BTreeMap<PairKey, PairImpulse>,
    pub diagnostics: StepDiagnostics,
}

struct SolverContact {
    a: usize,
    b: Option<usize>,
    point: Vector3<f64>,
    normal: Vector3<f64>,
    ra: Vector3<f64>,
    rb: Vector3<f64>,
    normal_mass: f64,
    /// Separation speed for a non-bouncing contact.
    target: f64,
    /// Separation speed owed to restitution, zero when not an impact.
    bounce: f64,
    approach: f64,
    friction: f64,
    acc_normal: f64,
    acc_tangent: Vector3<f64>,
}

#[derive(Debug, Clone)]
pub struct World {
    pub bodies: Vec<Body>,
    pub gravity: Vector3<f64>,
    pub ground: bool,
    pub params: SolverParams,
    pub collect_diagnostics: bool,
    touching: BTreeSet<usize>,
    touching_pairs: BTreeSet<PairKey>,
}

impl World {
    pub fn new(gravity: Vector3<f64>) -> Self {
        World {
            bodies: Vec::new(),
            gravity,
            ground: true,
            params: SolverParams::default(),
            collect_diagnostics: false,
            touching: BTreeSet::new(),
            touching_pairs: BTreeSet::new(),
        }
    }

    pub fn add(&mut self, body: Body) -> usize {
        self.bodies.push(body);
        self.bodies.len() - 1
    }

    pub fn states(&self) -> Vec<BodyState> {
        self.bodies.iter().map(|b| b.state.clone()).collect()
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.bodies.iter().map(|b| b.state.kinetic_energy()).sum()
    }

    /// Kinetic plus gravitational potential energy (ground at y = 0).
    pub fn mechanical_energy(&self) -> f64 {
        let g = -self.gravity.y;
        self.kinetic_energy()
            + self
                .bodies
                .iter()
                .filter(|b| !b.state.is_static())
                .map(|b| b.state.mass() * g * b.state.position.y)
                .sum::<f64>()
    }

    /// Largest current overlap relative to the pair's smaller size.
    pub fn penetration_ratio(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.bodies.iter().enumerate() {
            let pa = a.placed();
            if self.ground && !a.state.is_static() {
                worst = worst.max(-collide::ground_gap(&pa) / a.characteristic_size);
            }
            for b in &self.bodies[i + 1..] {
                if a.state.is_static() && b.state.is_static() {
                    continue;
                }
                let gap = collide::pair_gap(&pa, &b.placed());
                let size = a.characteristic_size.min(b.characteristic_size);
                worst = worst.max(-gap / size);
            }
        }
        worst
    }

    fn speculative_margin(&self, a: usize, b: Option<usize>, dt: f64) -> f64 {
        let sweep = |k: usize| {
            let s = &self.bodies[k].state;
            s.linear_velocity.norm() + s.angular_velocity.norm() * self.bodies[k].collider.bounding_radius()
        };
        let speed = sweep(a) + b.map_or(0.0, sweep);
        speed * dt + self.params.slop
    }

    fn generate_contacts(&self, dt: f64) -> Vec<(usize, Option<usize>, ContactPoint)> {
        self.generate_contacts_with(|a, b| self.speculative_margin(a, b, dt))
    }

    fn generate_contacts_with(
        &self,
        margin_for: impl Fn(usize, Option<usize>) -> f64,
    ) -> Vec<(usize, Option<usize>, ContactPoint)> {
        let mut out = Vec::new();
        let mut scratch = Vec::new();
        for (i, a) in self.bodies.iter().enumerate() {
            let pa = a.placed();
            if self.ground && !a.state.is_static() {
                scratch.clear();
                collide::against_ground(&pa, margin_for(i, None), &mut scratch);
                out.extend(scratch.iter().map(|c| (i, None, *c)));
            }
            for (j, b) in self.bodies.iter().enumerate().skip(i + 1) {
                if a.state.is_static() && b.state.is_static() {
                    continue;
                }
                let pb = b.placed();
                let margin = margin_for(i, Some(j));
                if (pa.center - pb.center).norm()
                    > a.collider.bounding_radius() + b.collider.bounding_radius() + margin
                {
                    continue;
                }
                scratch.clear();
                collide::between(&pa, &pb, margin, &mut scratch);
                out.extend(scratch.iter().map(|c| (i, Some(j), *c)));
            }
        }
        out
    }

    fn relative_velocity(&self, c: &SolverContact) -> Vector3<f64> {
        let va = self.bodies[c.a].state.velocity_at(&c.point);
        let vb = c
            .b
            .map_or(Vector3::zeros(), |b| self.bodies[b].state.velocity_at(&c.point));
        va - vb
    }

    fn effective_mass(&self, c: &SolverContact, dir: &Vector3<f64>) -> f64 {
        let part = |state: &BodyState, r: &Vector3<f64>| {
            if state.is_static() {
                return 0.0;
            }
            let rn = r.cross(dir);
            state.inverse_mass + (state.world_inverse_inertia() * rn).cross(r).dot(dir)
        };
        let k = part(&self.bodies[c.a].state, &c.ra)
            + c.b.map_or(0.0, |b| part(&self.bodies[b].state, &c.rb));
        if k > 0.0 {
            1.0 / k
        } else {
            0.0
        }
    }

    fn apply(&mut self, c: &SolverContact, impulse: &Vector3<f64>) {
        self.bodies[c.a].state.apply_impulse(impulse, &c.point);
        if let Some(b) = c.b {
            self.bodies[b].state.apply_impulse(&-impulse, &c.point);
        }
    }

    fn solve(&mut self, contacts: &mut [SolverContact], restitution_scale: f64) {
        for _ in 0..self.params.iterations {
            for k in 0..contacts.len() {
                let c = &contacts[k];
                let target = c.target.max(c.bounce * restitution_scale);
                let vn = self.relative_velocity(c).dot(&c.normal);
                let dj = (target - vn) * c.normal_mass;
                let new = (c.acc_normal + dj).max(0.0);
                let impulse = c.normal * (new - c.acc_normal);
                self.apply(&contacts[k], &impulse);
                contacts[k].acc_normal = new;

                let c = &contacts[k];
                let v = self.relative_velocity(c);
                let vt = v - c.normal * v.dot(&c.normal);
                let speed = vt.norm();
                if speed > 1e-12 && c.friction > 0.0 {
                    let t = vt / speed;
                    let mt = self.effective_mass(c, &t);
                    let mut acc = c.acc_tangent - t * (speed * mt);
                    let limit = c.friction * c.acc_normal;
                    let n = acc.norm();
                    if n > limit {
                        acc *= limit / n;
                    }
                    let delta = acc - c.acc_tangent;
                    self.apply(&contacts[k], &delta);
                    contacts[k].acc_tangent = acc;
                }
            }
        }
    }

    /// Pushes overlapping bodies apart along contact normals, weighted by
    /// inverse mass. Velocities are untouched.
    fn project_positions(&mut self) {
        for _ in 0..self.params.projection_iterations {
            let overlaps: Vec<_> = self
                .generate_contacts_with(|_, _| 0.0)
                .into_iter()
                .filter(|(_, _, cp)| cp.gap < 0.0)
                .collect();
            if overlaps.is_empty() {
                return;
            }
            let mut deepest: BTreeMap<PairKey, ContactPoint> = BTreeMap::new();
            for (a, b, cp) in overlaps {
                let e = deepest.entry((a, b)).or_insert(cp);
                if cp.gap < e.gap {
                    *e = cp;
                }
            }
            for ((a, b), cp) in deepest {
                let wa = self.bodies[a].state.inverse_mass;
                let wb = b.map_or(0.0, |b| self.bodies[b].state.inverse_mass);
                if wa + wb == 0.0 {
                    continue;
                }
                let push = cp.normal * (-cp.gap / (wa + wb));
                self.bodies[a].state.position += push * wa;
                if let Some(b) = b {
                    self.bodies[b].state.position -= push * wb;
                }
            }
        }
    }

    /// Advances the world by one substep: gravity, contact impulses, then
    /// positions.
    pub fn step(&mut self, dt: f64) -> StepReport {
        assert!(dt > 0.0, "substep must be positive");
        let p = self.params;
        for body in &mut self.bodies {
            if !body.state.is_static() {
                body.state.linear_velocity += self.gravity * dt;
            }
        }

        let raw = self.generate_contacts(dt);
        let mut contacts: Vec<SolverContact> = raw
            .into_iter()
            .map(|(a, b, cp)| {
                let ba = &self.bodies[a];
                let (e, mu) = match b {
                    Some(b) => (
                        ba.restitution * self.bodies[b].restitution,
                        ba.friction * self.bodies[b].friction,
                    ),
                    None => (ba.restitution, ba.friction),
                };
                let mut c = SolverContact {
                    a,
                    b,
                    point: cp.point,
                    normal: cp.normal,
                    ra: cp.point - ba.state.position,
                    rb: b.map_or(Vector3::zeros(), |b| cp.point - self.bodies[b].state.position),
                    normal_mass: 0.0,
                    target: 0.0,
                    bounce: 0.0,
                    approach: 0.0,
                    friction: mu,
                    acc_normal: 0.0,
                    acc_tangent: Vector3::zeros(),
                };
                c.normal_mass = self.effective_mass(&c, &cp.normal);
                let vn = self.relative_velocity(&c).dot(&cp.normal);
                let accel = |k: usize| {
                    if self.bodies[k].state.is_static() {
                        Vector3::zeros()
                    } else {
                        self.gravity
                    }
                };
                let an = (accel(a) - b.map_or(Vector3::zeros(), accel)).dot(&cp.normal);
                let vn0 = vn - an * dt;
                // Speed at the moment of touching, not at the end of the substep.
                let hit = (vn0 * vn0 - 2.0 * an * cp.gap.max(0.0)).max(0.0).sqrt();
                c.approach = (-vn).max(0.0).min(hit);
                let bias = p.baumgarte / dt * (-cp.gap - p.slop).max(0.0);
                let impact = c.approach > p.restitution_threshold
                    && -vn * dt >= cp.gap
                    && !self.touching_pairs.contains(&(a, b));
                if impact {
                    c.bounce = e * c.approach;
                    c.target = bias;
                } else if cp.gap > 0.0 {
                    c.target = -cp.gap / dt;
                } else {
                    c.target = bias;
                }
                c
            })
            .collect();

        let diag = self.collect_diagnostics;
        let momenta_before: Vec<Vector3<f64>> = if diag {
            self.bodies.iter().map(|b| b.state.momentum()).collect()
        } else {
            Vec::new()
        };
        let ke_before = self.kinetic_energy();
        let saved: Vec<(Vector3<f64>, Vector3<f64>)> = self
            .bodies
            .iter()
            .map(|b| (b.state.linear_velocity, b.state.angular_velocity))
            .collect();
        let mut scale = 1.0;
        loop {
            self.solve(&mut contacts, scale);
            let gain = self.kinetic_energy() - ke_before;
            if gain <= p.energy_tolerance || scale == 0.0 {
                break;
            }
            // Sequential restitution over several points can add energy.
            scale = if scale > 1.0 / 64.0 { scale * 0.5 } else { 0.0 };
            for (body, (v, w)) in self.bodies.iter_mut().zip(&saved) {
                body.state.linear_velocity = *v;
                body.state.angular_velocity = *w;
            }
            for c in &mut contacts {
                c.acc_normal = 0.0;
                c.acc_tangent = Vector3::zeros();
            }
        }

        let mut active = BTreeSet::new();
        let mut report = StepReport::default();
        for c in contacts.iter().filter(|c| c.acc_normal > 0.0) {
            active.insert(c.a);
            if let Some(b) = c.b {
                active.insert(b);
            }
            let separation = self.relative_velocity(c).dot(&c.normal);
            let entry = report.pairs.entry((c.a, c.b)).or_insert(PairImpulse {
                impulse: 0.0,
                approach_speed: -1.0,
                separation_speed: 0.0,
            });
            entry.impulse += c.acc_normal;
            if c.approach > entry.approach_speed {
                entry.approach_speed = c.approach;
                entry.separation_speed = separation;
            }
        }

        // Zero residual jitter at persistent contacts.
        for &k in active.intersection(&self.touching) {
            let body = &mut self.bodies[k];
            let r = body.collider.bounding_radius();
            if body.state.linear_velocity.norm() < p.sleep_speed
                && body.state.angular_velocity.norm() * r < p.sleep_speed
            {
                body.state.linear_velocity = Vector3::zeros();
                body.state.angular_velocity = Vector3::zeros();
            }
        }

        if diag {
            report.diagnostics.energy_change = self.kinetic_energy() - ke_before;
            report.diagnostics.momentum_error =
                self.isolated_momentum_error(&contacts, &momenta_before);
            report.diagnostics.contact_points = contacts.len();
        }

        for (k, body) in self.bodies.iter_mut().enumerate() {
            let s = &mut body.state;
            if s.is_static() {
                continue;
            }
            s.position += s.linear_velocity * dt;
            if !active.contains(&k) {
                // Exact position update for constant acceleration.
                s.position -= 0.5 * self.gravity * dt * dt;
            }
            let spin = UnitQuaternion::from_scaled_axis(s.angular_velocity * dt);
            s.orientation = UnitQuaternion::new_normalize((spin * s.orientation).into_inner());
        }
        self.project_positions();
        self.touching = active;
        self.touching_pairs = report.pairs.keys().copied().collect();

        if diag {
            report.diagnostics.penetration_ratio = self.penetration_ratio();
        }
        report
    }

    /// Momentum change over contact islands with no external contact.
    fn isolated_momentum_error(&self, contacts: &[SolverContact], before: &[Vector3<f64>]) -> f64 {
        let n = self.bodies.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut external = vec![false; n];
        let mut involved = vec![false; n];
        for c in contacts.iter().filter(|c| c.acc_normal > 0.0) {
            involved[c.a] = true;
            match c.b {
                Some(b) if !self.bodies[b].state.is_static() => {
                    involved[b] = true;
                    let (ra, rb) = (find(&mut parent, c.a), find(&mut parent, b));
                    parent[ra] = rb;
                }
                _ => external[c.a] = true,
            }
        }
        let mut island_external = vec![false; n];
        for k in 0..n {
            if external[k] {
                let r = find(&mut parent, k);
                island_external[r] = true;
            }
        }
        let mut delta: BTreeMap<usize, Vector3<f64>> = BTreeMap::new();
        let mut members: BTreeMap<usize, usize> = BTreeMap::new();
        for k in 0..n {
            if !involved[k] {
                continue;
            }
            let r = find(&mut parent, k);
            *delta.entry(r).or_insert_with(Vector3::zeros) += self.bodies[k].state.momentum() - before[k];
            *members.entry(r).or_insert(0) += 1;
        }
        delta
            .iter()
            .filter(|(r, _)| !island_external[**r] && members[*r] >= 2)
            .map(|(_, d)| d.norm())
            .fold(0.0, f64::max)
    }
}
