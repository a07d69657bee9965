//! Independent sampling oracle for the closed-form moments and SE.
//!
//! Everything here is estimated directly from channel draws — inner
//! products are formed per realization and averaged — with no code shared
//! with the closed-form moment tables, so agreement between the two is
//! meaningful evidence.
//!
//! Determinism: trials are split into fixed blocks (at most
//! [`BLOCKS`]), each block runs on its own counter-derived random stream,
//! and block results are folded in block order with compensated summation.
//! The outcome is therefore bit-identical for any worker count; blocks
//! double as the resampling unit for delete-one-block jackknife standard
//! errors. Memory holds every block's running sums, which scales as
//! `BLOCKS * K^2 * L^2` and is sized for desk-scale scenarios.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{ChannelSampler, LinkStatistics};
use crate::numeric::IndefiniteError;
use crate::performance::PowerAllocation;
use crate::scenario::ScenarioConfig;
use crate::streams;

/// Number of independent blocks (jackknife resamples).
pub const BLOCKS: usize = 100;

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

/// Compensated (Neumaier) accumulator for the cross-block reduction.
#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

/// Fixed partition of `trials` into at most [`BLOCKS`] near-equal blocks.
fn block_sizes(trials: usize) -> Vec<usize> {
    let blocks = trials.min(BLOCKS).max(1);
    let base = trials / blocks;
    let extra = trials % blocks;
    (0..blocks).map(|c| base + usize::from(c < extra)).collect()
}

/// RNG for one block: one seed, one stream per block index.
fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(streams::MC_BASE + block as u64);
    rng
}

fn build_samplers(
    uav: &[Vec<LinkStatistics>],
    sat: &[LinkStatistics],
) -> Result<(Vec<Vec<ChannelSampler>>, Vec<ChannelSampler>), IndefiniteError> {
    let uav_samplers = uav
        .iter()
        .map(|row| row.iter().map(ChannelSampler::new).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let sat_samplers = sat.iter().map(ChannelSampler::new).collect::<Result<Vec<_>, _>>()?;
    Ok((uav_samplers, sat_samplers))
}

/// Delete-one-block jackknife standard error from leave-one-out values.
fn jackknife_real(loo: &[f64]) -> f64 {
    let b = loo.len() as f64;
    if loo.len() < 2 {
        return f64::INFINITY;
    }
    let mean = loo.iter().sum::<f64>() / b;
    let ss: f64 = loo.iter().map(|v| (v - mean) * (v - mean)).sum();
    ((b - 1.0) / b * ss).sqrt()
}

/// Combined standard error of a complex estimate: root-sum-square of the
/// real-part and imaginary-part jackknife errors.
fn jackknife_complex(loo: &[Complex64]) -> f64 {
    let re: Vec<f64> = loo.iter().map(|z| z.re).collect();
    let im: Vec<f64> = loo.iter().map(|z| z.im).collect();
    let se_re = jackknife_real(&re);
    let se_im = jackknife_real(&im);
    (se_re * se_re + se_im * se_im).sqrt()
}

// ---------------------------------------------------------------------------
// Moment estimation
// ---------------------------------------------------------------------------

/// Per-block running sums for the moment estimator.
#[derive(Debug, Clone)]
struct MomentSums {
    n: usize,
    /// `psi[k][i]` sums of the inner-product vector `psi_{k,i}`.
    psi: Vec<Vec<DVector<Complex64>>>,
    /// `psi_outer[k][i]` sums of `psi psi^H`.
    psi_outer: Vec<Vec<DMatrix<Complex64>>>,
    /// Sums of `||g_k||^2` and `||g_k||^4`.
    g2: Vec<f64>,
    g4: Vec<f64>,
    /// Sums of `|g_k^H g_i|^2` for `i != k` (diagonal stays zero).
    gcross: DMatrix<f64>,
}

impl MomentSums {
    fn zeros(num_uavs: usize, num_gus: usize) -> Self {
        MomentSums {
            n: 0,
            psi: vec![vec![DVector::zeros(num_uavs); num_gus]; num_gus],
            psi_outer: vec![vec![DMatrix::zeros(num_uavs, num_uavs); num_gus]; num_gus],
            g2: vec![0.0; num_gus],
            g4: vec![0.0; num_gus],
            gcross: DMatrix::zeros(num_gus, num_gus),
        }
    }
}

/// Sampled estimates of every closed-form moment, with jackknife standard
/// errors. Complex entries carry a single combined standard error.
#[derive(Debug, Clone)]
pub struct MomentEstimates {
    /// Estimated mean inner products, indexed like the closed-form table.
    pub b: Vec<Vec<DVector<Complex64>>>,
    pub b_se: Vec<Vec<DVector<f64>>>,
    /// Estimated second-moment matrices: covariance form on the diagonal
    /// `i = k`, full second moment off it — matching the closed-form
    /// convention.
    pub csq: Vec<Vec<DMatrix<Complex64>>>,
    pub csq_se: Vec<Vec<DMatrix<f64>>>,
    /// Estimated `E||g_k||^2`.
    pub sat_signal: Vec<f64>,
    pub sat_signal_se: Vec<f64>,
    /// Estimated `E||g_k||^4`.
    pub sat_fourth: Vec<f64>,
    pub sat_fourth_se: Vec<f64>,
    /// Estimated `E|g_k^H g_i|^2`, zero diagonal.
    pub sat_cross: DMatrix<f64>,
    pub sat_cross_se: DMatrix<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Per-block satellite sums retained so linear combinations (the
    /// interference term `B_k`) can be jackknifed after the fact.
    block_g2: Vec<Vec<f64>>,
    block_g4: Vec<Vec<f64>>,
    block_gcross: Vec<DMatrix<f64>>,
    block_n: Vec<usize>,
}

impl MomentEstimates {
    /// Estimated satellite interference
    /// `B_k = eta_k (E||g_k||^4 - (E||g_k||^2)^2) + sum_{i!=k} eta_i E|g_k^H g_i|^2`
    /// with its jackknife standard error.
    pub fn sat_interference(&self, k: usize, eta_sn: &[f64]) -> (f64, f64) {
        let blocks = self.block_n.len();
        let total_n: usize = self.block_n.iter().sum();
        let stat = |g2: f64, g4: f64, cross_row: &[f64], n: f64| -> f64 {
            let m2 = g2 / n;
            let m4 = g4 / n;
            let own = eta_sn[k] * (m4 - m2 * m2);
            let cross: f64 = eta_sn
                .iter()
                .enumerate()
                .map(|(i, &eta)| if i == k { 0.0 } else { eta * cross_row[i] / n })
                .sum();
            own + cross
        };
        let tot_g2: f64 = self.block_g2.iter().map(|b| b[k]).sum();
        let tot_g4: f64 = self.block_g4.iter().map(|b| b[k]).sum();
        let tot_cross: Vec<f64> = (0..eta_sn.len())
            .map(|i| self.block_gcross.iter().map(|b| b[(k, i)]).sum())
            .collect();
        let estimate = stat(tot_g2, tot_g4, &tot_cross, total_n as f64);
        let loo: Vec<f64> = (0..blocks)
            .map(|c| {
                let n = (total_n - self.block_n[c]) as f64;
                let cross: Vec<f64> = (0..eta_sn.len())
                    .map(|i| tot_cross[i] - self.block_gcross[c][(k, i)])
                    .collect();
                stat(
                    tot_g2 - self.block_g2[c][k],
                    tot_g4 - self.block_g4[c][k],
                    &cross,
                    n,
                )
            })
            .collect();
        (estimate, jackknife_real(&loo))
    }
}

/// Estimate every moment by direct sampling. `trials >= 1000` so the
/// jackknife blocks stay meaningful.
pub fn estimate_moments(
    uav: &[Vec<LinkStatistics>],
    sat: &[LinkStatistics],
    trials: usize,
    seed: u64,
) -> Result<MomentEstimates, IndefiniteError> {
    assert!(trials >= 1_000, "need at least 1000 trials, got {trials}");
    let num_uavs = uav.len();
    let num_gus = sat.len();
    assert!(uav.iter().all(|row| row.len() == num_gus), "ragged link table");
    let (uav_samplers, sat_samplers) = build_samplers(uav, sat)?;

    let sizes = block_sizes(trials);
    let blocks: Vec<MomentSums> = sizes
        .par_iter()
        .enumerate()
        .map(|(c, &n_c)| {
            let mut rng = block_rng(seed, c);
            let mut sums = MomentSums::zeros(num_uavs, num_gus);
            let mut h = vec![vec![DVector::<Complex64>::zeros(0); num_gus]; num_uavs];
            let mut g = vec![DVector::<Complex64>::zeros(0); num_gus];
            for _ in 0..n_c {
                for (l, row) in uav_samplers.iter().enumerate() {
                    for (k, sampler) in row.iter().enumerate() {
                        h[l][k] = sampler.sample(&mut rng);
                    }
                }
                for (k, sampler) in sat_samplers.iter().enumerate() {
                    g[k] = sampler.sample(&mut rng);
                }
                for k in 0..num_gus {
                    for i in 0..num_gus {
                        let psi =
                            DVector::from_fn(num_uavs, |l, _| h[l][i].dotc(&h[l][k]));
                        sums.psi_outer[k][i] += &psi * psi.adjoint();
                        sums.psi[k][i] += psi;
                    }
                    let gk2 = g[k].norm_squared();
                    sums.g2[k] += gk2;
                    sums.g4[k] += gk2 * gk2;
                    for i in 0..num_gus {
                        if i != k {
                            sums.gcross[(k, i)] += g[k].dotc(&g[i]).norm_sqr();
                        }
                    }
                }
            }
            sums.n = n_c;
            sums
        })
        .collect();

    // Pooled sums, folded in block order with compensated summation.
    let total_n: usize = blocks.iter().map(|b| b.n).sum();
    let nf = total_n as f64;
    let fold_complex = |get: &dyn Fn(&MomentSums) -> Complex64| -> Complex64 {
        let mut re = Neumaier::default();
        let mut im = Neumaier::default();
        for b in &blocks {
            let v = get(b);
            re.add(v.re);
            im.add(v.im);
        }
        Complex64::new(re.value(), im.value())
    };
    let fold_real = |get: &dyn Fn(&MomentSums) -> f64| -> f64 {
        let mut acc = Neumaier::default();
        for b in &blocks {
            acc.add(get(b));
        }
        acc.value()
    };

    let mut b_est = vec![vec![DVector::<Complex64>::zeros(num_uavs); num_gus]; num_gus];
    let mut b_se = vec![vec![DVector::<f64>::zeros(num_uavs); num_gus]; num_gus];
    let mut csq_est =
        vec![vec![DMatrix::<Complex64>::zeros(num_uavs, num_uavs); num_gus]; num_gus];
    let mut csq_se = vec![vec![DMatrix::<f64>::zeros(num_uavs, num_uavs); num_gus]; num_gus];

    for k in 0..num_gus {
        for i in 0..num_gus {
            // Pooled psi sums for this (k, i).
            let psi_tot =
                DVector::from_fn(num_uavs, |l, _| fold_complex(&|s| s.psi[k][i][l]));
            for l in 0..num_uavs {
                b_est[k][i][l] = psi_tot[l] / nf;
                let loo: Vec<Complex64> = blocks
                    .iter()
                    .map(|c| (psi_tot[l] - c.psi[k][i][l]) / (nf - c.n as f64))
                    .collect();
                b_se[k][i][l] = jackknife_complex(&loo);
            }
            for l in 0..num_uavs {
                for lp in 0..num_uavs {
                    let outer_tot = fold_complex(&|s| s.psi_outer[k][i][(l, lp)]);
                    let (est, loo): (Complex64, Vec<Complex64>) = if i == k {
                        // Covariance form: subtract the estimated mean
                        // outer product, re-estimated inside each
                        // leave-one-out replicate.
                        let est = outer_tot / nf
                            - b_est[k][i][l] * b_est[k][i][lp].conj();
                        let loo = blocks
                            .iter()
                            .map(|c| {
                                let n = nf - c.n as f64;
                                let m_l = (psi_tot[l] - c.psi[k][i][l]) / n;
                                let m_lp = (psi_tot[lp] - c.psi[k][i][lp]) / n;
                                (outer_tot - c.psi_outer[k][i][(l, lp)]) / n
                                    - m_l * m_lp.conj()
                            })
                            .collect();
                        (est, loo)
                    } else {
                        let est = outer_tot / nf;
                        let loo = blocks
                            .iter()
                            .map(|c| (outer_tot - c.psi_outer[k][i][(l, lp)]) / (nf - c.n as f64))
                            .collect();
                        (est, loo)
                    };
                    csq_est[k][i][(l, lp)] = est;
                    csq_se[k][i][(l, lp)] = jackknife_complex(&loo);
                }
            }
        }
    }

    let mut sat_signal = vec![0.0; num_gus];
    let mut sat_signal_se = vec![0.0; num_gus];
    let mut sat_fourth = vec![0.0; num_gus];
    let mut sat_fourth_se = vec![0.0; num_gus];
    let mut sat_cross = DMatrix::zeros(num_gus, num_gus);
    let mut sat_cross_se = DMatrix::zeros(num_gus, num_gus);
    for k in 0..num_gus {
        let g2_tot = fold_real(&|s| s.g2[k]);
        let g4_tot = fold_real(&|s| s.g4[k]);
        sat_signal[k] = g2_tot / nf;
        sat_fourth[k] = g4_tot / nf;
        let loo2: Vec<f64> =
            blocks.iter().map(|c| (g2_tot - c.g2[k]) / (nf - c.n as f64)).collect();
        let loo4: Vec<f64> =
            blocks.iter().map(|c| (g4_tot - c.g4[k]) / (nf - c.n as f64)).collect();
        sat_signal_se[k] = jackknife_real(&loo2);
        sat_fourth_se[k] = jackknife_real(&loo4);
        for i in 0..num_gus {
            if i == k {
                continue;
            }
            let cross_tot = fold_real(&|s| s.gcross[(k, i)]);
            sat_cross[(k, i)] = cross_tot / nf;
            let loo: Vec<f64> = blocks
                .iter()
                .map(|c| (cross_tot - c.gcross[(k, i)]) / (nf - c.n as f64))
                .collect();
            sat_cross_se[(k, i)] = jackknife_real(&loo);
        }
    }

    Ok(MomentEstimates {
        b: b_est,
        b_se,
        csq: csq_est,
        csq_se,
        sat_signal,
        sat_signal_se,
        sat_fourth,
        sat_fourth_se,
        sat_cross,
        sat_cross_se,
        trials: total_n,
        seed,
        block_g2: blocks.iter().map(|b| b.g2.clone()).collect(),
        block_g4: blocks.iter().map(|b| b.g4.clone()).collect(),
        block_gcross: blocks.iter().map(|b| b.gcross.clone()).collect(),
        block_n: blocks.iter().map(|b| b.n).collect(),
    })
}

// ---------------------------------------------------------------------------
// SE estimation
// ---------------------------------------------------------------------------

/// Per-block sums for the SE estimator. UAV and satellite contributions
/// are tracked separately because the two layers carry independent symbol
/// streams: their powers add, their amplitudes never combine coherently.
#[derive(Debug, Clone)]
struct SeSums {
    n: usize,
    /// Sums of the UAV-layer desired inner product `U_{k,k}`.
    u_own: Vec<Complex64>,
    /// Sums of the satellite desired inner product `S_{k,k}`.
    s_own: Vec<Complex64>,
    /// Sums of `|U_{k,i}|^2` for all pairs.
    u_abs2: DMatrix<f64>,
    /// Sums of `|S_{k,i}|^2` for all pairs.
    s_abs2: DMatrix<f64>,
}

/// Sampled per-user SE under the hardening bound, with jackknife errors.
#[derive(Debug, Clone)]
pub struct SeEstimates {
    pub sinr: Vec<f64>,
    /// Per-user SE, bit/s/Hz.
    pub se: Vec<f64>,
    /// Jackknife standard error of each SE estimate.
    pub se_stderr: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

/// Estimate the hardening-bound SE by sampling: per trial, form per-stream
/// received inner products
/// `U_{k,i} = sum_l sqrt(eta_ap[l,i]) h_{l,i}^H h_{l,k}` and
/// `S_{k,i} = sqrt(eta_sn[i]) g_i^H g_k`, then
///
/// ```text
///          |E U_{k,k}|^2 + |E S_{k,k}|^2
/// SINR_k = ------------------------------------------------------------
///          sum_i (E|U_{k,i}|^2 + E|S_{k,i}|^2)
///            - |E U_{k,k}|^2 - |E S_{k,k}|^2 + noise
/// ```
///
/// UAV and satellite streams carry independent symbols, so their mean
/// amplitudes contribute separate coherent powers and every cross term
/// averages out. The allocation is first reduced to the config's
/// transmission mode, so results pair directly with the closed-form
/// report.
pub fn estimate_se(
    config: &ScenarioConfig,
    uav: &[Vec<LinkStatistics>],
    sat: &[LinkStatistics],
    alloc: &PowerAllocation,
    trials: usize,
    seed: u64,
) -> Result<SeEstimates, IndefiniteError> {
    assert!(trials >= 1_000, "need at least 1000 trials, got {trials}");
    let num_uavs = uav.len();
    let num_gus = sat.len();
    let eff = alloc.effective(config.mode);
    let sqrt_ap = DMatrix::from_fn(num_uavs, num_gus, |l, i| eff.eta_ap[(l, i)].max(0.0).sqrt());
    let sqrt_sn: Vec<f64> = eff.eta_sn.iter().map(|&e| e.max(0.0).sqrt()).collect();
    let noise = config.noise_power_w();
    let (uav_samplers, sat_samplers) = build_samplers(uav, sat)?;

    let sizes = block_sizes(trials);
    let blocks: Vec<SeSums> = sizes
        .par_iter()
        .enumerate()
        .map(|(c, &n_c)| {
            let mut rng = block_rng(seed, c);
            let mut sums = SeSums {
                n: n_c,
                u_own: vec![Complex64::new(0.0, 0.0); num_gus],
                s_own: vec![Complex64::new(0.0, 0.0); num_gus],
                u_abs2: DMatrix::zeros(num_gus, num_gus),
                s_abs2: DMatrix::zeros(num_gus, num_gus),
            };
            let mut h = vec![vec![DVector::<Complex64>::zeros(0); num_gus]; num_uavs];
            let mut g = vec![DVector::<Complex64>::zeros(0); num_gus];
            for _ in 0..n_c {
                for (l, row) in uav_samplers.iter().enumerate() {
                    for (k, sampler) in row.iter().enumerate() {
                        h[l][k] = sampler.sample(&mut rng);
                    }
                }
                for (k, sampler) in sat_samplers.iter().enumerate() {
                    g[k] = sampler.sample(&mut rng);
                }
                for k in 0..num_gus {
                    for i in 0..num_gus {
                        let mut u = Complex64::new(0.0, 0.0);
                        for l in 0..num_uavs {
                            if sqrt_ap[(l, i)] > 0.0 {
                                u += h[l][i].dotc(&h[l][k]) * sqrt_ap[(l, i)];
                            }
                        }
                        let s = if sqrt_sn[i] > 0.0 {
                            g[i].dotc(&g[k]) * sqrt_sn[i]
                        } else {
                            Complex64::new(0.0, 0.0)
                        };
                        if i == k {
                            sums.u_own[k] += u;
                            sums.s_own[k] += s;
                        }
                        sums.u_abs2[(k, i)] += u.norm_sqr();
                        sums.s_abs2[(k, i)] += s.norm_sqr();
                    }
                }
            }
            sums
        })
        .collect();

    let total_n: usize = blocks.iter().map(|b| b.n).sum();
    let nf = total_n as f64;
    let mut sinr = vec![0.0; num_gus];
    let mut se = vec![0.0; num_gus];
    let mut se_stderr = vec![0.0; num_gus];
    for k in 0..num_gus {
        let fold_c = |get: &dyn Fn(&SeSums) -> Complex64| -> Complex64 {
            let mut re = Neumaier::default();
            let mut im = Neumaier::default();
            for b in &blocks {
                let v = get(b);
                re.add(v.re);
                im.add(v.im);
            }
            Complex64::new(re.value(), im.value())
        };
        let fold_r = |get: &dyn Fn(&SeSums) -> f64| -> f64 {
            let mut acc = Neumaier::default();
            for b in &blocks {
                acc.add(get(b));
            }
            acc.value()
        };
        let u_own_tot = fold_c(&|b| b.u_own[k]);
        let s_own_tot = fold_c(&|b| b.s_own[k]);
        let u_abs2_tot: Vec<f64> = (0..num_gus).map(|i| fold_r(&|b| b.u_abs2[(k, i)])).collect();
        let s_abs2_tot: Vec<f64> = (0..num_gus).map(|i| fold_r(&|b| b.s_abs2[(k, i)])).collect();

        // Interference-plus-variance denominator: all received power minus
        // the two coherent signal parts; clamped at zero for the
        // deterministic case where they cancel exactly up to round-off.
        let eval_sinr = |u_own: Complex64,
                         s_own: Complex64,
                         u_abs2: &[f64],
                         s_abs2: &[f64],
                         n: f64|
         -> f64 {
            let signal = (u_own / n).norm_sqr() + (s_own / n).norm_sqr();
            let mut den = -signal;
            for &v in u_abs2 {
                den += v / n;
            }
            for &v in s_abs2 {
                den += v / n;
            }
            signal / (den.max(0.0) + noise)
        };

        sinr[k] = eval_sinr(u_own_tot, s_own_tot, &u_abs2_tot, &s_abs2_tot, nf);
        se[k] = (1.0 + sinr[k]).log2();
        let loo: Vec<f64> = blocks
            .iter()
            .map(|c| {
                let n = nf - c.n as f64;
                let u_abs2: Vec<f64> =
                    (0..num_gus).map(|i| u_abs2_tot[i] - c.u_abs2[(k, i)]).collect();
                let s_abs2: Vec<f64> =
                    (0..num_gus).map(|i| s_abs2_tot[i] - c.s_abs2[(k, i)]).collect();
                let s = eval_sinr(
                    u_own_tot - c.u_own[k],
                    s_own_tot - c.s_own[k],
                    &u_abs2,
                    &s_abs2,
                    n,
                );
                (1.0 + s).log2()
            })
            .collect();
        se_stderr[k] = jackknife_real(&loo);
    }

    Ok(SeEstimates {
        sinr,
        se,
        se_stderr,
        trials: total_n,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::LinkStatistics;
    use crate::moments::{assemble_moments, MomentMode};
    use crate::performance;
    use crate::scenario::Mode;
    use approx::assert_relative_eq;

    fn cplx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn deterministic_stats(mu: Vec<Complex64>) -> LinkStatistics {
        let mu = DVector::from_vec(mu);
        let n = mu.len();
        let corr = &mu * mu.adjoint();
        LinkStatistics {
            mu,
            nlos_cov: DMatrix::zeros(n, n),
            corr,
            beta_los: 1.0,
            beta_nlos: 1.0,
            kappa: 1.0,
            pr_los: 1.0,
            aoa: 0.0,
        }
    }

    /// L=3, K=2 correlated Rician scenario for the oracle agreements.
    fn rician_scenario() -> (Vec<Vec<LinkStatistics>>, Vec<LinkStatistics>) {
        let mk = |len: usize, beta: f64, kappa: f64, pr: f64, aoa: f64| {
            LinkStatistics::from_parameters(len, beta, beta, kappa, pr, aoa, 0.2)
        };
        let uav = vec![
            vec![mk(2, 1.1, 2.0, 0.8, 0.3), mk(2, 0.7, 1.5, 0.7, -0.5)],
            vec![mk(2, 0.9, 3.0, 0.9, 1.0), mk(2, 1.3, 2.5, 0.6, 0.1)],
            vec![mk(2, 0.8, 1.0, 0.75, -1.1), mk(2, 1.0, 2.2, 0.85, 0.7)],
        ];
        let sat = vec![mk(3, 0.6, 5.0, 0.95, 0.2), mk(3, 0.5, 4.0, 0.9, -0.3)];
        (uav, sat)
    }

    #[test]
    fn block_sizes_partition_exactly() {
        for trials in [1000, 1234, 20_000, 99, 1] {
            let sizes = block_sizes(trials);
            assert_eq!(sizes.iter().sum::<usize>(), trials);
            let max = *sizes.iter().max().unwrap();
            let min = *sizes.iter().min().unwrap();
            assert!(max - min <= 1);
        }
    }

    #[test]
    fn deterministic_channels_are_estimated_exactly() {
        let uav = vec![vec![deterministic_stats(vec![cplx(0.8, -0.1), cplx(0.2, 0.3)])]];
        let sat = vec![deterministic_stats(vec![cplx(0.5, 0.2)])];
        let est = estimate_moments(&uav, &sat, 1_000, 7).unwrap();
        let m = assemble_moments(&uav, &sat, MomentMode::ExactGaussian).unwrap();
        // No randomness at all: estimates coincide with closed forms and
        // the spread across blocks is zero.
        assert_relative_eq!(est.b[0][0][0].re, m.b[0][0][0].re, max_relative = 1e-12);
        assert!(est.b_se[0][0][0] < 1e-12);
        assert!(est.csq[0][0].norm() < 1e-9);
        assert_relative_eq!(est.sat_signal[0], m.sat_signal[0], max_relative = 1e-12);
        assert_relative_eq!(est.sat_fourth[0], m.sat_fourth[0], max_relative = 1e-12);
        assert!(est.sat_fourth_se[0] < 1e-12);
    }

    #[test]
    fn isotropic_link_fourth_moment_is_six() {
        // mu = 0, R = I_2: E||h||^4 = 6 within 3 SE at 1e5 trials.
        let stats = LinkStatistics {
            mu: DVector::zeros(2),
            nlos_cov: DMatrix::identity(2, 2),
            corr: DMatrix::identity(2, 2),
            beta_los: 0.0,
            beta_nlos: 1.0,
            kappa: 0.0,
            pr_los: 0.0,
            aoa: 0.0,
        };
        let uav = vec![vec![stats.clone()]];
        let sat = vec![stats];
        let est = estimate_moments(&uav, &sat, 100_000, 3).unwrap();
        assert!(
            (est.sat_fourth[0] - 6.0).abs() <= 3.0 * est.sat_fourth_se[0],
            "E||g||^4 = {} +- {}",
            est.sat_fourth[0],
            est.sat_fourth_se[0]
        );
    }

    #[test]
    fn every_moment_matches_the_closed_form_within_three_sigma() {
        let (uav, sat) = rician_scenario();
        let m = assemble_moments(&uav, &sat, MomentMode::ExactGaussian).unwrap();
        let est = estimate_moments(&uav, &sat, 100_000, 42).unwrap();
        let mut checked = 0usize;
        for k in 0..2 {
            for i in 0..2 {
                for l in 0..3 {
                    let d = (est.b[k][i][l] - m.b[k][i][l]).norm();
                    assert!(
                        d <= 3.0 * est.b_se[k][i][l] + 1e-12,
                        "b[{k}][{i}][{l}]: |{} - {}| > 3 x {}",
                        est.b[k][i][l],
                        m.b[k][i][l],
                        est.b_se[k][i][l]
                    );
                    checked += 1;
                    for lp in 0..3 {
                        let d = (est.csq[k][i][(l, lp)] - m.csq[k][i][(l, lp)]).norm();
                        assert!(
                            d <= 3.0 * est.csq_se[k][i][(l, lp)] + 1e-12,
                            "csq[{k}][{i}][({l},{lp})]: |{} - {}| > 3 x {}",
                            est.csq[k][i][(l, lp)],
                            m.csq[k][i][(l, lp)],
                            est.csq_se[k][i][(l, lp)]
                        );
                        checked += 1;
                    }
                }
            }
            let d = (est.sat_signal[k] - m.sat_signal[k]).abs();
            assert!(d <= 3.0 * est.sat_signal_se[k]);
            let d = (est.sat_fourth[k] - m.sat_fourth[k]).abs();
            assert!(d <= 3.0 * est.sat_fourth_se[k]);
            checked += 2;
        }
        // Satellite cross term and the combined interference.
        let d = (est.sat_cross[(0, 1)] - m.sat_cross[(0, 1)]).abs();
        assert!(d <= 3.0 * est.sat_cross_se[(0, 1)]);
        let eta = [0.7, 1.3];
        for k in 0..2 {
            let (b_est, b_se) = est.sat_interference(k, &eta);
            let b_cf = m.sat_interference(k, &eta);
            assert!(
                (b_est - b_cf).abs() <= 3.0 * b_se,
                "B_{k}: |{b_est} - {b_cf}| > 3 x {b_se}"
            );
            checked += 1;
        }
        // 12 b entries + 36 csq entries + 4 satellite moments + 2 B terms.
        assert_eq!(checked, 54, "suite size drifted");
    }

    #[test]
    fn standard_errors_shrink_like_inverse_sqrt_trials() {
        let (uav, sat) = rician_scenario();
        let mut ses = Vec::new();
        for trials in [1_000, 10_000, 100_000] {
            let est = estimate_moments(&uav, &sat, trials, 9).unwrap();
            ses.push(est.sat_fourth_se[0]);
        }
        let ideal = 10f64.sqrt();
        for w in ses.windows(2) {
            let ratio = w[0] / w[1];
            assert!(
                ratio > ideal / 1.5 && ratio < ideal * 1.5,
                "SE ratio {ratio} outside [{}, {}]",
                ideal / 1.5,
                ideal * 1.5
            );
        }
    }

    #[test]
    fn estimates_are_seed_reproducible_and_seed_sensitive() {
        let (uav, sat) = rician_scenario();
        let a = estimate_moments(&uav, &sat, 2_000, 5).unwrap();
        let b = estimate_moments(&uav, &sat, 2_000, 5).unwrap();
        assert_eq!(a.b[0][1][2], b.b[0][1][2]);
        assert_eq!(a.sat_fourth[1], b.sat_fourth[1]);
        let c = estimate_moments(&uav, &sat, 2_000, 6).unwrap();
        assert_ne!(a.sat_fourth[1], c.sat_fourth[1]);
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let (uav, sat) = rician_scenario();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| estimate_moments(&uav, &sat, 5_000, 11).unwrap());
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| estimate_moments(&uav, &sat, 5_000, 11).unwrap());
        for k in 0..2 {
            for i in 0..2 {
                assert_eq!(one.b[k][i], four.b[k][i]);
                assert_eq!(one.csq[k][i], four.csq[k][i]);
            }
        }
        assert_eq!(one.sat_fourth, four.sat_fourth);
        assert_eq!(one.sat_cross, four.sat_cross);
    }

    #[test]
    fn zero_powers_give_exactly_zero_se() {
        let (uav, sat) = rician_scenario();
        let mut cfg = ScenarioConfig::desk();
        cfg.num_uavs = 3;
        cfg.num_gus = 2;
        let alloc = PowerAllocation::zeros(3, 2);
        let est = estimate_se(&cfg, &uav, &sat, &alloc, 1_000, 1).unwrap();
        assert_eq!(est.se, vec![0.0, 0.0]);
        assert_eq!(est.sinr, vec![0.0, 0.0]);
    }

    #[test]
    fn single_link_se_matches_closed_form() {
        // One UAV, one user, correlated Rician link; the hardening bound
        // is computed exactly by the closed form, so the sampled estimate
        // must sit within 3 SE.
        let link = LinkStatistics::from_parameters(4, 2e-13, 2e-13, 3.0, 0.8, 0.4, 0.1);
        let uav = vec![vec![link]];
        let sat = vec![LinkStatistics::from_parameters(2, 1e-15, 1e-15, 5.0, 0.9, 0.0, 0.05)];
        let mut cfg = ScenarioConfig::desk();
        cfg.num_uavs = 1;
        cfg.num_gus = 1;
        cfg.uav_antennas = 4;
        cfg.sat_antennas = 2;
        cfg.mode = Mode::NtnTn;
        let m = assemble_moments(&uav, &sat, MomentMode::ExactGaussian).unwrap();
        let mut alloc = PowerAllocation::zeros(1, 1);
        alloc.eta_ap[(0, 0)] = 0.4;
        alloc.eta_sn = vec![8.0];
        let report = performance::energy_efficiency(&alloc, &m, &cfg);
        let est = estimate_se(&cfg, &uav, &sat, &alloc, 50_000, 21).unwrap();
        assert!(
            (est.se[0] - report.se[0]).abs() <= 3.0 * est.se_stderr[0],
            "SE closed form {} vs MC {} +- {}",
            report.se[0],
            est.se[0],
            est.se_stderr[0]
        );
        assert!(est.se_stderr[0] > 0.0);
    }

    #[test]
    fn multi_user_se_matches_closed_form_in_every_mode() {
        let (uav, sat) = rician_scenario();
        // Rescale the statistics into a realistic power regime by reusing
        // them as-is with small powers and unit-order noise surrogate
        // through the desk config's true noise: use small etas.
        let mut cfg = ScenarioConfig::desk();
        cfg.num_uavs = 3;
        cfg.num_gus = 2;
        let m = assemble_moments(&uav, &sat, MomentMode::ExactGaussian).unwrap();
        let mut alloc = PowerAllocation::zeros(3, 2);
        for l in 0..3 {
            for i in 0..2 {
                alloc.eta_ap[(l, i)] = 1e-14 * (1.0 + (l * 2 + i) as f64);
            }
        }
        alloc.eta_sn = vec![2e-14, 3e-14];
        for mode in [Mode::NtnTn, Mode::TnOnly, Mode::NtnOnly] {
            cfg.mode = mode;
            let report = performance::energy_efficiency(&alloc, &m, &cfg);
            let est = estimate_se(&cfg, &uav, &sat, &alloc, 50_000, 33).unwrap();
            for k in 0..2 {
                assert!(
                    (est.se[k] - report.se[k]).abs() <= 3.0 * est.se_stderr[k] + 1e-12,
                    "{mode:?} user {k}: closed form {} vs MC {} +- {}",
                    report.se[k],
                    est.se[k],
                    est.se_stderr[k]
                );
            }
        }
    }
}
