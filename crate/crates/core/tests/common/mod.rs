//! Independent oracles shared by the integration and acceptance tests.
//!
//! Nothing here calls into the solver or projection code under test: the
//! dense sweep assembles its own matrices from the mesh coordinates and
//! solves every nodal inequality as a small quadratic program.

#![allow(dead_code)]

use chsh::{Mesh, ModelParams};
use rand::Rng;

/// Dense stiffness and lumped mass straight from the P1 basis gradients.
pub fn dense_operators(mesh: &Mesh) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = mesh.n_nodes();
    let mut a = vec![vec![0.0; n]; n];
    let mut m = vec![0.0; n];
    for tri in &mesh.elements {
        let p: Vec<[f64; 2]> = tri.iter().map(|&v| mesh.nodes[v]).collect();
        let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let area = 0.5 * det.abs();
        // gradient of the barycentric coordinate of vertex k
        let grad = |k: usize| -> [f64; 2] {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            [(p[i][1] - p[j][1]) / det, (p[j][0] - p[i][0]) / det]
        };
        for k in 0..3 {
            m[tri[k]] += area / 3.0;
            for l in 0..3 {
                let (gk, gl) = (grad(k), grad(l));
                a[tri[k]][tri[l]] += area * (gk[0] * gl[0] + gk[1] * gl[1]);
            }
        }
    }
    (a, m)
}

/// `∂F1/∂φ`, `∂F1/∂ψ` of the polynomial potential.
pub fn f1_gradient(phi: f64, psi: f64, p: &ModelParams) -> (f64, f64) {
    let s = psi - 0.5;
    (
        -p.alpha * phi + p.delta * phi * s,
        -p.g * s * s - p.gamma * s + 0.5 * p.delta * phi * phi,
    )
}

pub fn f1_value(phi: f64, psi: f64, p: &ModelParams) -> f64 {
    let s = psi - 0.5;
    -0.5 * p.alpha * phi * phi - p.g / 3.0 * s * s * s - 0.5 * p.gamma * s * s + 0.5 * p.delta * phi * phi * s
}

pub const K_VERTICES: [(f64, f64); 3] = [(-1.0, 0.0), (1.0, 0.0), (0.0, 1.0)];

pub fn inside_k(x: (f64, f64)) -> bool {
    x.1 >= 0.0 && x.0 + x.1 <= 1.0 && x.1 - x.0 <= 1.0
}

/// Minimiser over `K` of `½ xᵀ H x - bᵀ x` for symmetric positive definite `H`,
/// by enumerating the interior critical point, the three edges and the
/// three vertices.
pub fn qp_on_k(h: [[f64; 2]; 2], b: (f64, f64)) -> (f64, f64) {
    let obj = |x: (f64, f64)| {
        0.5 * (h[0][0] * x.0 * x.0 + 2.0 * h[0][1] * x.0 * x.1 + h[1][1] * x.1 * x.1) - b.0 * x.0 - b.1 * x.1
    };
    let mut candidates: Vec<(f64, f64)> = K_VERTICES.to_vec();
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let free = ((h[1][1] * b.0 - h[0][1] * b.1) / det, (h[0][0] * b.1 - h[1][0] * b.0) / det);
    if inside_k(free) {
        return free;
    }
    for e in 0..3 {
        let p0 = K_VERTICES[e];
        let p1 = K_VERTICES[(e + 1) % 3];
        let d = (p1.0 - p0.0, p1.1 - p0.1);
        // minimise obj(p0 + t d) over t in [0, 1]
        let hd = (h[0][0] * d.0 + h[0][1] * d.1, h[1][0] * d.0 + h[1][1] * d.1);
        let hp = (h[0][0] * p0.0 + h[0][1] * p0.1, h[1][0] * p0.0 + h[1][1] * p0.1);
        let curv = d.0 * hd.0 + d.1 * hd.1;
        let slope = d.0 * (hp.0 - b.0) + d.1 * (hp.1 - b.1);
        let t = (-slope / curv).clamp(0.0, 1.0);
        candidates.push((p0.0 + t * d.0, p0.1 + t * d.1));
    }
    candidates
        .into_iter()
        .min_by(|x, y| obj(*x).total_cmp(&obj(*y)))
        .unwrap()
}

/// Nodal unknowns of one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub w: Vec<f64>,
    pub z: Vec<f64>,
    pub q: Vec<f64>,
}

/// `k` Gauss–Seidel sweeps for one time step written directly from the
/// block system: row `j` of every product with `A` uses the newest values
/// of the other nodes, the nodal `(w, z, q)` are affine in `(φ_j, ψ_j)`,
/// and the nodal variational inequality is the quadratic program whose
/// gradient is the row-`j` residual.
pub fn dense_gs(
    a: &[Vec<f64>],
    m: &[f64],
    p: &ModelParams,
    prev: &DenseState,
    start: &DenseState,
    sweeps: usize,
) -> DenseState {
    let n = m.len();
    let tau = p.tau;
    let w2 = p.omega * p.omega;
    let matvec = |v: &[f64], j: usize| -> f64 { (0..n).map(|i| a[j][i] * v[i]).sum() };

    // explicit parts of the time level
    let mut rn = vec![0.0; n];
    let mut sn = vec![0.0; n];
    for j in 0..n {
        let (gp, gs) = f1_gradient(prev.phi[j], prev.psi[j], p);
        let (gp_minus, gs_minus) = (gp - p.c_f * prev.phi[j], gs - p.c_f * prev.psi[j]);
        rn[j] = 0.5 * p.sigma * matvec(&prev.psi, j) - m[j] * gp_minus;
        sn[j] = 0.5 * p.lambda * w2 * w2 * m[j] - m[j] * gs_minus + 0.5 * p.sigma * matvec(&prev.phi, j);
    }

    let mut x = start.clone();
    for _ in 0..sweeps {
        for j in 0..n {
            let off = |v: &[f64]| -> f64 { (0..n).filter(|&i| i != j).map(|i| a[j][i] * v[i]).sum() };
            let (ajj, mj) = (a[j][j], m[j]);
            let (off_w, off_phi, off_psi, off_q) = (off(&x.w), off(&x.phi), off(&x.psi), off(&x.q));
            // M φ + τ (A W)_j = M φⁿ
            let w_of = |phi: f64| (m[j] * prev.phi[j] - m[j] * phi - tau * off_w) / (tau * ajj);
            // M ψ + τ M z = M ψⁿ
            let z_of = |psi: f64| (prev.psi[j] - psi) / tau;
            // (A Ψ)_j = M q
            let q_of = |psi: f64| (ajj * psi + off_psi) / mj;
            // row-j residuals of the inequality at (φ_j, ψ_j)
            let g = |phi: f64, psi: f64| -> (f64, f64) {
                let a_phi = ajj * phi + off_phi;
                let a_psi = ajj * psi + off_psi;
                let a_q = ajj * q_of(psi) + off_q;
                (
                    p.eps * a_phi - 0.5 * p.sigma * a_psi + mj * p.c_f * phi - mj * w_of(phi) - rn[j],
                    p.lambda * w2 * w2 * mj * psi - 0.5 * p.sigma * a_phi - mj * z_of(psi)
                        + mj * p.c_f * psi
                        + p.lambda * a_q
                        - 2.0 * p.lambda * w2 * a_psi
                        - sn[j],
                )
            };
            // g is affine: recover its matrix and offset numerically
            let g0 = g(0.0, 0.0);
            let g1 = g(1.0, 0.0);
            let g2 = g(0.0, 1.0);
            let h = [[g1.0 - g0.0, g2.0 - g0.0], [g1.1 - g0.1, g2.1 - g0.1]];
            let sym = 0.5 * (h[0][1] + h[1][0]);
            let (phi, psi) = qp_on_k([[h[0][0], sym], [sym, h[1][1]]], (-g0.0, -g0.1));
            x.phi[j] = phi;
            x.psi[j] = psi;
            x.w[j] = w_of(phi);
            x.z[j] = z_of(psi);
            x.q[j] = q_of(psi);
        }
    }
    x
}

/// Random symmetric positive definite metric `[[a11, -a12], [-a12, a22]]`
/// with largest eigenvalue 1 and condition number in `[1, max_cond]`,
/// returned as `(a11, a12, a22)`.
pub fn random_metric(rng: &mut impl Rng, max_cond: f64) -> (f64, f64, f64) {
    let cond = 10f64.powf(rng.random_range(0.0..=max_cond.log10()));
    let (l1, l2) = (1.0, 1.0 / cond);
    let th: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let (c, s) = (th.cos(), th.sin());
    let a11 = l1 * c * c + l2 * s * s;
    let a22 = l1 * s * s + l2 * c * c;
    let off = (l1 - l2) * c * s;
    (a11, -off, a22)
}

/// Minimiser of the metric distance to `x` over `K` by brute force: a
/// `1e-2` grid over `K`, then compass search from the best grid point along
/// the coordinate and edge directions, starting at step `1e-3` and halving
/// it down to `1e-13`.
pub fn brute_force_projection(metric: (f64, f64, f64), x: (f64, f64)) -> (f64, f64) {
    let (a11, a12, a22) = metric;
    let dist = |y: (f64, f64)| {
        let d = (x.0 - y.0, x.1 - y.1);
        a11 * d.0 * d.0 - 2.0 * a12 * d.0 * d.1 + a22 * d.1 * d.1
    };
    let res: f64 = 1e-2;
    let steps = (1.0 / res).round() as i64;
    let mut best = ((0.0, 0.0), f64::INFINITY);
    for iy in 0..=steps {
        let psi = iy as f64 * res;
        let span = steps - iy;
        for ix in -span..=span {
            let y = (ix as f64 * res, psi);
            let d = dist(y);
            if d < best.1 {
                best = (y, d);
            }
        }
    }
    let dirs = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (1.0, 1.0),
        (-1.0, -1.0),
        (1.0, -1.0),
        (-1.0, 1.0),
    ];
    let mut step = 1e-3;
    while step > 1e-13 {
        let mut moved = true;
        while moved {
            moved = false;
            for d in dirs {
                let y = (best.0 .0 + step * d.0, best.0 .1 + step * d.1);
                // slack so that moves along a slant edge survive rounding
                if y.1 >= -1e-12 && y.0 + y.1 <= 1.0 + 1e-12 && y.1 - y.0 <= 1.0 + 1e-12 {
                    let dy = dist(y);
                    if dy < best.1 {
                        best = (y, dy);
                        moved = true;
                    }
                }
            }
        }
        step *= 0.5;
    }
    best.0
}

/// Random potential coefficients over the ranges used by the presets and
/// the stress runs, with `C_F` from `cf_default`.
pub fn random_params(rng: &mut impl Rng) -> ModelParams {
    let alpha = rng.random_range(0.0..200.0);
    let g = rng.random_range(-3000.0..3000.0);
    let gamma = rng.random_range(0.0..2000.0);
    let delta = rng.random_range(-200.0..200.0);
    ModelParams {
        eps: 1.0 / (16.0 * std::f64::consts::PI),
        lambda: 1e-5,
        omega: 100.0,
        sigma: rng.random_range(-1.0..1.0),
        alpha,
        g,
        gamma,
        delta,
        c_f: chsh::model::cf_default(alpha, g, gamma, delta),
        tau: 1e-6,
    }
}

/// Uniform random point of `K`.
pub fn random_point_in_k(rng: &mut impl Rng) -> (f64, f64) {
    loop {
        let x = (rng.random_range(-1.0..=1.0), rng.random_range(0.0..=1.0));
        if inside_k(x) {
            return x;
        }
    }
}

/// Compares `k` production sweeps against [`dense_gs`] on an `n × n` mesh
/// from a random admissible start; returns the largest per-node deviation.
pub fn sweep_deviation(n: usize, params: &ModelParams, seed: u64, sweeps: usize) -> f64 {
    use chsh::solver::{gs_sweep, init_q0, TimeLevel};
    use rand::SeedableRng;

    let mesh = chsh::build_mesh(n).unwrap();
    let ops = chsh::Operators::assemble(&mesh).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let nn = mesh.n_nodes();
    let pts: Vec<(f64, f64)> = (0..nn).map(|_| random_point_in_k(&mut rng)).collect();
    let phi: Vec<f64> = pts.iter().map(|x| x.0).collect();
    let psi: Vec<f64> = pts.iter().map(|x| x.1).collect();
    let q = init_q0(&ops.mass, &ops.stiffness, &psi).unwrap();
    let mut prev = chsh::State::new(phi, psi, q);
    // nonzero W and Z exercise the W coupling from the first sweep on
    prev.w = (0..nn).map(|_| rng.random_range(-50.0..50.0)).collect();
    prev.z = (0..nn).map(|_| rng.random_range(-50.0..50.0)).collect();

    let level = TimeLevel::new(&prev, &ops, params).unwrap();
    let mut state = prev.clone();
    for _ in 0..sweeps {
        gs_sweep(&mut state, &level, &ops, params, 1.0).unwrap();
    }

    let (a, m) = dense_operators(&mesh);
    let dense_prev = DenseState {
        phi: prev.phi.clone(),
        psi: prev.psi.clone(),
        w: prev.w.clone(),
        z: prev.z.clone(),
        q: prev.q.clone(),
    };
    let oracle = dense_gs(&a, &m, params, &dense_prev, &dense_prev, sweeps);

    // W, Z and Q are recovered by dividing differences of the primal
    // unknowns by τ A_jj / M_jj, τ and M_jj / A_jj; compare them after
    // undoing that scaling so one ulp of Φ or Ψ is not amplified.
    let mut worst = 0.0f64;
    for j in 0..nn {
        let (mj, ajj) = (m[j], a[j][j]);
        let sw = params.tau * ajj / mj;
        let pairs = [
            (state.phi[j], oracle.phi[j]),
            (state.psi[j], oracle.psi[j]),
            (sw * state.w[j], sw * oracle.w[j]),
            (params.tau * state.z[j], params.tau * oracle.z[j]),
            (mj / ajj * state.q[j], mj / ajj * oracle.q[j]),
        ];
        for (got, want) in pairs {
            worst = worst.max((got - want).abs());
        }
    }
    worst
}
