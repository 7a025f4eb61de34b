//! Far-field multipath channel model and the candidate-position dictionaries.
//!
//! Every user sees `L` plane waves. For an element at revolving angle `ψ` and
//! height `z`, the user-`k` response (one entry of the array-position
//! manifold `b(ψ, z)`) is
//!
//! ```text
//! b_k(ψ, z) = 1/√L Σ_l β*_{k,l} g(ϑ_{k,l}, φ_{k,l} − ψ)
//!             · exp(−j 2π/λ (R φx cos ψ + R φy sin ψ + z θ))
//! ```
//!
//! with `g` the element field amplitude and `(φx, φy, θ)` the direction
//! cosines of the path. Stacking `b` over placed elements gives the rows of
//! the downlink channel matrix `H` (user `k` on row `k`).

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{FclaError, Result};
use crate::geometry::{check_spacing, FclaConfig, Position, PositionGrid};
use crate::linalg::CMat;

/// Elevation range of drawn paths, radians.
pub const ELEVATION_RANGE: (f64, f64) = (PI / 6.0, 5.0 * PI / 6.0);

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub beta: Complex64,
    /// Elevation ϑ, radians.
    pub theta: f64,
    /// Azimuth φ, radians.
    pub phi: f64,
    /// Direction cosines `(sin ϑ cos φ, sin ϑ sin φ, cos ϑ)`.
    pub direction: [f64; 3],
}

impl Path {
    pub fn new(beta: Complex64, theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self {
            beta,
            theta,
            phi,
            direction: [st * cp, st * sp, ct],
        }
    }
}

/// The paths of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub paths: Vec<Path>,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// Draws `users` path sets of `paths` paths each: azimuth uniform on
/// `[0, 2π)`, elevation uniform on `[π/6, 5π/6]`, gains i.i.d. CN(0, 1).
pub fn draw_paths(users: usize, paths: usize, seed: u64) -> Vec<PathSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_paths_with(&mut rng, users, paths)
}

pub fn draw_paths_with<R: Rng>(rng: &mut R, users: usize, paths: usize) -> Vec<PathSet> {
    let (lo, hi) = ELEVATION_RANGE;
    (0..users)
        .map(|_| PathSet {
            paths: (0..paths)
                .map(|_| {
                    let theta = rng.random_range(lo..=hi);
                    let phi = rng.random_range(0.0..2.0 * PI);
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Path::new(Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2, theta, phi)
                })
                .collect(),
        })
        .collect()
}

/// Response of user `user` at a single element placed at `(psi, z)`.
pub fn apm_entry(user: &PathSet, psi: f64, z: f64, config: &FclaConfig) -> Complex64 {
    let wavenumber = 2.0 * PI / config.wavelength;
    let (sin_psi, cos_psi) = psi.sin_cos();
    let r = config.radius;
    let sum: Complex64 = user
        .paths
        .iter()
        .map(|p| {
            let [vx, vy, vz] = p.direction;
            let gain = config.pattern.amplitude(p.theta, p.phi, psi);
            if gain == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let phase = -wavenumber * (r * vx * cos_psi + r * vy * sin_psi + z * vz);
            p.beta.conj() * gain * Complex64::from_polar(1.0, phase)
        })
        .sum();
    sum / (user.len() as f64).sqrt()
}

/// Downlink channel at a concrete placement: `K × (#elements)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub entries: CMat,
    pub positions: Vec<Position>,
}

pub fn synthesize_channel(
    users: &[PathSet],
    positions: &[Position],
    config: &FclaConfig,
) -> Result<ChannelMatrix> {
    check_spacing(positions, config)?;
    Ok(ChannelMatrix {
        entries: response_matrix(users, positions, config),
        positions: positions.to_vec(),
    })
}

fn response_matrix(users: &[PathSet], positions: &[Position], config: &FclaConfig) -> CMat {
    CMat::from_fn(users.len(), positions.len(), |k, j| {
        apm_entry(&users[k], positions[j].psi, positions[j].z, config)
    })
}

/// Grid coordinates of one dictionary column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    /// Group (block) the column belongs to.
    pub group: usize,
    /// Position within its group.
    pub member: usize,
    pub psi_index: usize,
    pub z_index: usize,
    pub position: Position,
}

/// Candidate responses, one column per candidate position, laid out
/// group-major: column `group * group_width + member`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    pub entries: CMat,
    pub atoms: Vec<Atom>,
    pub group_width: usize,
}

impl Dictionary {
    /// Wraps raw entries, checking that the atom metadata is consistent with
    /// the group-major layout.
    pub fn new(entries: CMat, atoms: Vec<Atom>, group_width: usize) -> Result<Self> {
        if atoms.len() != entries.ncols() {
            return Err(FclaError::DimensionMismatch(format!(
                "{} atoms for {} dictionary columns",
                atoms.len(),
                entries.ncols()
            )));
        }
        if group_width == 0 || !entries.ncols().is_multiple_of(group_width) {
            return Err(FclaError::DimensionMismatch(format!(
                "{} columns do not split into groups of {group_width}",
                entries.ncols()
            )));
        }
        for (g, atom) in atoms.iter().enumerate() {
            if atom.group * group_width + atom.member != g || atom.member >= group_width {
                return Err(FclaError::DimensionMismatch(format!(
                    "atom {g} claims group {} member {}",
                    atom.group, atom.member
                )));
            }
        }
        Ok(Self {
            entries,
            atoms,
            group_width,
        })
    }

    /// Joint (height × angle) layout over `grid` for caller-supplied entries.
    pub fn with_joint_layout(entries: CMat, grid: &PositionGrid) -> Result<Self> {
        let width = grid.angle_count();
        let atoms = (0..grid.height_count())
            .flat_map(|gv| {
                (0..width).map(move |gh| Atom {
                    group: gv,
                    member: gh,
                    psi_index: gh,
                    z_index: gv,
                    position: Position {
                        psi: grid.psi[gh],
                        z: grid.z[gv],
                    },
                })
            })
            .collect();
        Self::new(entries, atoms, width)
    }

    pub fn users(&self) -> usize {
        self.entries.nrows()
    }

    pub fn len(&self) -> usize {
        self.entries.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.ncols() == 0
    }

    pub fn group_count(&self) -> usize {
        self.len() / self.group_width
    }

    pub fn group_of(&self, column: usize) -> usize {
        column / self.group_width
    }

    pub fn column_of(&self, group: usize, member: usize) -> usize {
        group * self.group_width + member
    }

    pub fn atom(&self, column: usize) -> &Atom {
        &self.atoms[column]
    }

    pub fn columns(&self, columns: &[usize]) -> CMat {
        crate::linalg::gather_columns(&self.entries, columns)
    }

    pub fn group_columns(&self, group: usize) -> std::ops::Range<usize> {
        let start = group * self.group_width;
        start..start + self.group_width
    }
}

/// All `G_V · G_H` grid points; group = height slot, member = angle slot.
pub fn build_joint_dictionary(
    users: &[PathSet],
    grid: &PositionGrid,
    config: &FclaConfig,
) -> Dictionary {
    let positions: Vec<Position> = grid
        .z
        .iter()
        .flat_map(|&z| grid.psi.iter().map(move |&psi| Position { psi, z }))
        .collect();
    let entries = response_matrix(users, &positions, config);
    Dictionary::with_joint_layout(entries, grid).expect("joint layout matches grid by construction")
}

/// Angle candidates at fixed ring heights; group = ring, member = angle slot.
pub fn build_angle_dictionary(
    users: &[PathSet],
    height_indices: &[usize],
    grid: &PositionGrid,
    config: &FclaConfig,
) -> Result<Dictionary> {
    let (atoms, width) = angle_atoms(height_indices, grid)?;
    let positions: Vec<Position> = atoms.iter().map(|a| a.position).collect();
    Dictionary::new(response_matrix(users, &positions, config), atoms, width)
}

/// [`build_angle_dictionary`] with columns copied from a joint dictionary
/// over the same grid instead of recomputed.
pub fn angle_dictionary_from_joint(
    joint: &Dictionary,
    height_indices: &[usize],
    grid: &PositionGrid,
) -> Result<Dictionary> {
    let (atoms, width) = angle_atoms(height_indices, grid)?;
    gather_from_joint(joint, atoms, width)
}

/// Height candidates for fixed per-ring angle sets. Group `ring * G_V + g_v`
/// holds ring `ring`'s `N` angles placed at height slot `g_v`.
pub fn build_height_dictionary(
    users: &[PathSet],
    angle_indices: &[Vec<usize>],
    grid: &PositionGrid,
    config: &FclaConfig,
) -> Result<Dictionary> {
    let (atoms, width) = height_atoms(angle_indices, grid)?;
    let positions: Vec<Position> = atoms.iter().map(|a| a.position).collect();
    Dictionary::new(response_matrix(users, &positions, config), atoms, width)
}

/// [`build_height_dictionary`] with columns copied from a joint dictionary.
pub fn height_dictionary_from_joint(
    joint: &Dictionary,
    angle_indices: &[Vec<usize>],
    grid: &PositionGrid,
) -> Result<Dictionary> {
    let (atoms, width) = height_atoms(angle_indices, grid)?;
    gather_from_joint(joint, atoms, width)
}

fn gather_from_joint(joint: &Dictionary, atoms: Vec<Atom>, width: usize) -> Result<Dictionary> {
    let columns: Vec<usize> = atoms.iter().map(|a| joint.column_of(a.z_index, a.psi_index)).collect();
    if columns.iter().any(|&c| c >= joint.len()) {
        return Err(FclaError::DimensionMismatch("joint dictionary does not cover the grid".into()));
    }
    Dictionary::new(joint.columns(&columns), atoms, width)
}

fn angle_atoms(height_indices: &[usize], grid: &PositionGrid) -> Result<(Vec<Atom>, usize)> {
    for (i, &a) in height_indices.iter().enumerate() {
        if a >= grid.height_count() {
            return Err(FclaError::InvalidConfig(format!(
                "height index {a} outside grid of {}",
                grid.height_count()
            )));
        }
        if height_indices[..i].contains(&a) {
            return Err(FclaError::SpacingViolation(format!(
                "height slot {a} assigned to more than one ring"
            )));
        }
    }
    let width = grid.angle_count();
    let mut atoms = Vec::with_capacity(height_indices.len() * width);
    for (ring, &zi) in height_indices.iter().enumerate() {
        for gh in 0..width {
            atoms.push(Atom {
                group: ring,
                member: gh,
                psi_index: gh,
                z_index: zi,
                position: Position {
                    psi: grid.psi[gh],
                    z: grid.z[zi],
                },
            });
        }
    }
    Ok((atoms, width))
}

fn height_atoms(angle_indices: &[Vec<usize>], grid: &PositionGrid) -> Result<(Vec<Atom>, usize)> {
    let width = angle_indices.first().map_or(0, Vec::len);
    if width == 0 {
        return Err(FclaError::InvalidConfig("no angles supplied".into()));
    }
    for (ring, set) in angle_indices.iter().enumerate() {
        if set.len() != width {
            return Err(FclaError::InvalidConfig(format!(
                "ring {ring} has {} angles, expected {width}",
                set.len()
            )));
        }
        for (i, &a) in set.iter().enumerate() {
            if a >= grid.angle_count() {
                return Err(FclaError::InvalidConfig(format!(
                    "angle index {a} outside grid of {}",
                    grid.angle_count()
                )));
            }
            if set[..i].contains(&a) {
                return Err(FclaError::SpacingViolation(format!(
                    "ring {ring} repeats angle slot {a}"
                )));
            }
        }
    }
    let g_v = grid.height_count();
    let mut atoms = Vec::with_capacity(angle_indices.len() * g_v * width);
    for (ring, set) in angle_indices.iter().enumerate() {
        for gv in 0..g_v {
            for (n, &gh) in set.iter().enumerate() {
                atoms.push(Atom {
                    group: ring * g_v + gv,
                    member: n,
                    psi_index: gh,
                    z_index: gv,
                    position: Position {
                        psi: grid.psi[gh],
                        z: grid.z[gv],
                    },
                });
            }
        }
    }
    Ok((atoms, width))
}

/// Flat record used for JSON interchange of drawn paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub user: usize,
    pub path: usize,
    pub beta_re: f64,
    pub beta_im: f64,
    pub theta_el: f64,
    pub phi_az: f64,
}

pub fn write_paths_json<W: Write>(users: &[PathSet], writer: W) -> Result<()> {
    let records: Vec<PathRecord> = users
        .iter()
        .enumerate()
        .flat_map(|(user, set)| {
            set.paths.iter().enumerate().map(move |(path, p)| PathRecord {
                user,
                path,
                beta_re: p.beta.re,
                beta_im: p.beta.im,
                theta_el: p.theta,
                phi_az: p.phi,
            })
        })
        .collect();
    serde_json::to_writer_pretty(writer, &records)?;
    Ok(())
}

pub fn read_paths_json<R: Read>(reader: R) -> Result<Vec<PathSet>> {
    let records: Vec<PathRecord> = serde_json::from_reader(reader)?;
    let mut users: Vec<PathSet> = Vec::new();
    for r in records {
        if r.user > users.len() {
            return Err(FclaError::InvalidConfig(format!("path records skip user {}", users.len())));
        }
        if r.user == users.len() {
            users.push(PathSet { paths: Vec::new() });
        }
        let set = &mut users[r.user];
        if r.path != set.len() {
            return Err(FclaError::InvalidConfig(format!(
                "user {} path records out of order at {}",
                r.user, r.path
            )));
        }
        set.paths.push(Path::new(Complex64::new(r.beta_re, r.beta_im), r.theta_el, r.phi_az));
    }
    if let Some(first) = users.first() {
        if users.iter().any(|u| u.len() != first.len()) {
            return Err(FclaError::InvalidConfig("users have differing path counts".into()));
        }
    }
    Ok(users)
}
