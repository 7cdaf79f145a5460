//! Channel generation: distance-based path loss, Rayleigh small-scale fading,
//! and the Rician self-interference channel between the co-located
//! transmit/receive chains of a full-duplex base station.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{complex_normal, CMat};
use crate::scenario::{db_to_linear, distance_m, ScenarioConfig, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkClass {
    SbsToSbs,
    UeToSbs,
    UeToUe,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelError {
    NonPositiveDistance(f64),
    BadDump(String),
}

impl core::fmt::Display for ChannelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ChannelError::NonPositiveDistance(d) => {
                write!(f, "path loss needs a positive distance, got {d} km")
            }
            ChannelError::BadDump(msg) => write!(f, "malformed channel dump: {msg}"),
        }
    }
}

impl core::error::Error for ChannelError {}

/// Distance-dependent path loss in dB for the three link classes
/// (distance in kilometers).
pub fn pathloss_db(link: LinkClass, d_km: f64, los: bool) -> Result<f64, ChannelError> {
    if !(d_km > 0.0) {
        return Err(ChannelError::NonPositiveDistance(d_km));
    }
    let log_d = crate::fmath::log10(d_km);
    let (a, b) = match (link, los) {
        (LinkClass::SbsToSbs, true) => (98.4, 20.9),
        (LinkClass::SbsToSbs, false) => (169.36, 40.0),
        (LinkClass::UeToSbs, true) => (103.8, 20.9),
        (LinkClass::UeToSbs, false) => (145.4, 37.5),
        (LinkClass::UeToUe, true) => (98.5, 20.0),
        (LinkClass::UeToUe, false) => (175.78, 40.0),
    };
    Ok(a + b * log_d)
}

/// Thermal noise power in watts over `bandwidth_hz` with the given receiver
/// noise figure, at the standard -174 dBm/Hz density.
pub fn noise_power(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    noise_power_from_density(-174.0, bandwidth_hz, noise_figure_db)
}

pub fn noise_power_from_density(density_dbm_hz: f64, bandwidth_hz: f64, nf_db: f64) -> f64 {
    let dbm = density_dbm_hz + 10.0 * crate::fmath::log10(bandwidth_hz) + nf_db;
    crate::fmath::powf(10.0, (dbm - 30.0) / 10.0)
}

/// LOS probability at distance `d_m`: `exp(-d/d0)`.
pub fn los_probability(d_m: f64, d0_m: f64) -> f64 {
    crate::fmath::exp(-d_m / d0_m)
}

/// All complex channel coefficients for one scheduling period.
///
/// Indexing follows receiver-first order for the SBS-to-SBS matrices:
/// `h_bs[rx][tx][n]` maps the transmit antennas of SBS `tx` onto the receive
/// antennas of SBS `rx`; the diagonal `rx == tx` block is the residual
/// self-interference channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// `h_dl[b][i][n]`: SBS `b` to DL UE `i` on sub-carrier `n` (len M_T).
    pub h_dl: Vec<Vec<Vec<Vec<Complex64>>>>,
    /// `h_ul[b][j][n]`: UL UE `j` to SBS `b` (len M_R).
    pub h_ul: Vec<Vec<Vec<Vec<Complex64>>>>,
    /// `g[j][i][n]`: UL UE `j` to DL UE `i` scalar cross link.
    pub g: Vec<Vec<Vec<Complex64>>>,
    /// `h_bs[rx][tx][n]`: M_R x M_T inter-SBS (or self-interference) matrix.
    pub h_bs: Vec<Vec<Vec<CMat>>>,
    /// Noise power per sub-carrier at an SBS receiver, watts.
    pub sigma2_sbs: f64,
    /// Noise power per sub-carrier at a UE receiver, watts.
    pub sigma2_ue: f64,
}

impl ChannelSet {
    pub fn num_cells(&self) -> usize {
        self.h_bs.len()
    }

    pub fn num_dl_ues(&self) -> usize {
        self.h_dl.first().map_or(0, |per_b| per_b.len())
    }

    pub fn num_ul_ues(&self) -> usize {
        self.h_ul.first().map_or(0, |per_b| per_b.len())
    }

    pub fn num_subcarriers(&self) -> usize {
        self.h_bs[0][0].len()
    }

    /// Rescale every coefficient by its receiver's noise standard deviation so
    /// that both noise powers become exactly 1. SINRs are invariant under this
    /// change of units, and the rescaled problem is far better conditioned for
    /// the interior-point solver.
    pub fn normalized(&self) -> ChannelSet {
        let ue_scale = 1.0 / crate::fmath::sqrt(self.sigma2_ue);
        let sbs_scale = 1.0 / crate::fmath::sqrt(self.sigma2_sbs);
        let scale_vecs = |v: &Vec<Vec<Vec<Vec<Complex64>>>>, s: f64| {
            v.iter()
                .map(|a| {
                    a.iter()
                        .map(|b| {
                            b.iter()
                                .map(|h| h.iter().map(|&z| z * s).collect())
                                .collect()
                        })
                        .collect()
                })
                .collect()
        };
        ChannelSet {
            h_dl: scale_vecs(&self.h_dl, ue_scale),
            h_ul: scale_vecs(&self.h_ul, sbs_scale),
            g: self
                .g
                .iter()
                .map(|a| {
                    a.iter()
                        .map(|b| b.iter().map(|&z| z * ue_scale).collect())
                        .collect()
                })
                .collect(),
            h_bs: self
                .h_bs
                .iter()
                .map(|a| {
                    a.iter()
                        .map(|b| b.iter().map(|m| m.scale(sbs_scale)).collect())
                        .collect()
                })
                .collect(),
            sigma2_sbs: 1.0,
            sigma2_ue: 1.0,
        }
    }
}

/// Draw every channel coefficient for the given topology. Deterministic in
/// `config.seed`; the self-interference mean matrix defaults to all-ones.
pub fn draw_channels(topology: &Topology, config: &ScenarioConfig) -> ChannelSet {
    let ones = CMat::from_fn(config.rx_antennas, config.tx_antennas, |_, _| {
        Complex64::new(1.0, 0.0)
    });
    draw_channels_with_si_mean(topology, config, &ones)
}

/// As [`draw_channels`] with an explicit deterministic self-interference mean
/// matrix (M_R x M_T).
pub fn draw_channels_with_si_mean(
    topology: &Topology,
    config: &ScenarioConfig,
    si_mean: &CMat,
) -> ChannelSet {
    assert_eq!(si_mean.rows, config.rx_antennas);
    assert_eq!(si_mean.cols, config.tx_antennas);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(3u64.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
    let n_sub = config.num_subcarriers;
    let bw_per_sub = config.bandwidth_hz / n_sub as f64;
    let d0 = config.los_ref_distance_m;
    let kd = topology.dl_ue_positions.len();
    let ku = topology.ul_ue_positions.len();
    let b_count = topology.num_cells();

    // amplitude scale for a link = sqrt(10^(-PL/10)), with a Bernoulli LOS
    // state drawn once per geometric link and shared across sub-carriers
    let amp = |rng: &mut ChaCha8Rng, link: LinkClass, from: [f64; 2], to: [f64; 2]| -> f64 {
        let d_m = distance_m(from, to).max(0.1);
        let los = rng.gen::<f64>() < los_probability(d_m, d0);
        let pl = pathloss_db(link, d_m / 1000.0, los).expect("positive distance");
        crate::fmath::powf(10.0, -pl / 20.0)
    };

    let mut h_dl = Vec::with_capacity(b_count);
    for b in 0..b_count {
        let mut per_ue = Vec::with_capacity(kd);
        for i in 0..kd {
            let a = amp(&mut rng, LinkClass::UeToSbs, topology.sbs_positions[b], topology.dl_ue_positions[i]);
            let mut per_n = Vec::with_capacity(n_sub);
            for _ in 0..n_sub {
                per_n.push((0..config.tx_antennas).map(|_| complex_normal(&mut rng) * a).collect());
            }
            per_ue.push(per_n);
        }
        h_dl.push(per_ue);
    }

    let mut h_ul = Vec::with_capacity(b_count);
    for b in 0..b_count {
        let mut per_ue = Vec::with_capacity(ku);
        for j in 0..ku {
            let a = amp(&mut rng, LinkClass::UeToSbs, topology.ul_ue_positions[j], topology.sbs_positions[b]);
            let mut per_n = Vec::with_capacity(n_sub);
            for _ in 0..n_sub {
                per_n.push((0..config.rx_antennas).map(|_| complex_normal(&mut rng) * a).collect());
            }
            per_ue.push(per_n);
        }
        h_ul.push(per_ue);
    }

    let mut g = Vec::with_capacity(ku);
    for j in 0..ku {
        let mut per_dl = Vec::with_capacity(kd);
        for i in 0..kd {
            let a = amp(&mut rng, LinkClass::UeToUe, topology.ul_ue_positions[j], topology.dl_ue_positions[i]);
            per_dl.push((0..n_sub).map(|_| complex_normal(&mut rng) * a).collect());
        }
        g.push(per_dl);
    }

    // Rician self-interference parameters; the K -> infinity limit collapses
    // onto the deterministic mean.
    let si_var = db_to_linear(config.si_variance_db);
    let k = config.rician_k;
    let los_share = if k.is_infinite() { 1.0 } else { k / (1.0 + k) };
    let mean_scale = crate::fmath::sqrt(si_var * los_share);
    let diffuse_std = if k.is_infinite() { 0.0 } else { crate::fmath::sqrt(si_var / (1.0 + k)) };

    let mut h_bs = Vec::with_capacity(b_count);
    for rx in 0..b_count {
        let mut per_tx = Vec::with_capacity(b_count);
        for tx in 0..b_count {
            if rx == tx {
                let mut per_n = Vec::with_capacity(n_sub);
                for _ in 0..n_sub {
                    let mut m = CMat::zeros(config.rx_antennas, config.tx_antennas);
                    for r in 0..config.rx_antennas {
                        for c in 0..config.tx_antennas {
                            m[(r, c)] = si_mean[(r, c)] * mean_scale
                                + complex_normal(&mut rng) * diffuse_std;
                        }
                    }
                    per_n.push(m);
                }
                per_tx.push(per_n);
            } else {
                let a = amp(&mut rng, LinkClass::SbsToSbs, topology.sbs_positions[tx], topology.sbs_positions[rx]);
                let mut per_n = Vec::with_capacity(n_sub);
                for _ in 0..n_sub {
                    per_n.push(CMat::from_fn(config.rx_antennas, config.tx_antennas, |_, _| {
                        complex_normal(&mut rng) * a
                    }));
                }
                per_tx.push(per_n);
            }
        }
        h_bs.push(per_tx);
    }

    ChannelSet {
        h_dl,
        h_ul,
        g,
        h_bs,
        sigma2_sbs: noise_power_from_density(
            config.noise_density_dbm_hz,
            bw_per_sub,
            config.noise_figure_sbs_db,
        ),
        sigma2_ue: noise_power_from_density(
            config.noise_density_dbm_hz,
            bw_per_sub,
            config.noise_figure_ue_db,
        ),
    }
}

// ---------------------------------------------------------------------------
// plain-text dump (regression fixtures)
// ---------------------------------------------------------------------------

fn push_complex_row(out: &mut String, zs: &[Complex64]) {
    for z in zs {
        out.push_str(&format!(" {:e} {:e}", z.re, z.im));
    }
    out.push('\n');
}

impl ChannelSet {
    /// Serialize to the documented plain-text format: a header with the
    /// dimensions followed by one line per coefficient group, real/imag pairs
    /// in row-major order.
    pub fn to_text(&self) -> String {
        let (b, kd, ku, n) = (
            self.num_cells(),
            self.num_dl_ues(),
            self.num_ul_ues(),
            self.num_subcarriers(),
        );
        let mt = self.h_dl[0][0][0].len();
        let mr = self.h_ul[0][0][0].len();
        let mut out = String::new();
        out.push_str("fdcell-channels v1\n");
        out.push_str(&format!("dims {b} {kd} {ku} {n} {mt} {mr}\n"));
        out.push_str(&format!("sigma2 {:e} {:e}\n", self.sigma2_sbs, self.sigma2_ue));
        for bb in 0..b {
            for i in 0..kd {
                for nn in 0..n {
                    out.push_str(&format!("hdl {bb} {i} {nn}"));
                    push_complex_row(&mut out, &self.h_dl[bb][i][nn]);
                }
            }
        }
        for bb in 0..b {
            for j in 0..ku {
                for nn in 0..n {
                    out.push_str(&format!("hul {bb} {j} {nn}"));
                    push_complex_row(&mut out, &self.h_ul[bb][j][nn]);
                }
            }
        }
        for j in 0..ku {
            for i in 0..kd {
                for nn in 0..n {
                    out.push_str(&format!("g {j} {i} {nn}"));
                    push_complex_row(&mut out, &[self.g[j][i][nn]]);
                }
            }
        }
        for rx in 0..b {
            for tx in 0..b {
                for nn in 0..n {
                    out.push_str(&format!("hbs {rx} {tx} {nn}"));
                    let m = &self.h_bs[rx][tx][nn];
                    let row: Vec<Complex64> = (0..mr)
                        .flat_map(|r| (0..mt).map(move |c| (r, c)))
                        .map(|(r, c)| m[(r, c)])
                        .collect();
                    push_complex_row(&mut out, &row);
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<ChannelSet, ChannelError> {
        let bad = |msg: &str| ChannelError::BadDump(String::from(msg));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some("fdcell-channels v1") {
            return Err(bad("missing 'fdcell-channels v1' header"));
        }
        let dims_line = lines.next().ok_or_else(|| bad("missing dims line"))?;
        let mut it = dims_line.split_whitespace();
        if it.next() != Some("dims") {
            return Err(bad("expected dims line"));
        }
        let mut next_usize = |what: &str| -> Result<usize, ChannelError> {
            it.next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| ChannelError::BadDump(format!("bad {what} in dims")))
        };
        let (b, kd, ku, n, mt, mr) = (
            next_usize("B")?,
            next_usize("KD")?,
            next_usize("KU")?,
            next_usize("N")?,
            next_usize("MT")?,
            next_usize("MR")?,
        );
        let sigma_line = lines.next().ok_or_else(|| bad("missing sigma2 line"))?;
        let sig: Vec<&str> = sigma_line.split_whitespace().collect();
        if sig.len() != 3 || sig[0] != "sigma2" {
            return Err(bad("expected 'sigma2 <sbs> <ue>'"));
        }
        let sigma2_sbs: f64 = sig[1].parse().map_err(|_| bad("bad sigma2 value"))?;
        let sigma2_ue: f64 = sig[2].parse().map_err(|_| bad("bad sigma2 value"))?;

        let zero = Complex64::new(0.0, 0.0);
        let mut set = ChannelSet {
            h_dl: alloc::vec![alloc::vec![alloc::vec![alloc::vec![zero; mt]; n]; kd]; b],
            h_ul: alloc::vec![alloc::vec![alloc::vec![alloc::vec![zero; mr]; n]; ku]; b],
            g: alloc::vec![alloc::vec![alloc::vec![zero; n]; kd]; ku],
            h_bs: alloc::vec![alloc::vec![alloc::vec![CMat::zeros(mr, mt); n]; b]; b],
            sigma2_sbs,
            sigma2_ue,
        };
        for line in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < 4 {
                return Err(ChannelError::BadDump(format!("short line: {line}")));
            }
            let idx = |k: usize| -> Result<usize, ChannelError> {
                toks[k]
                    .parse()
                    .map_err(|_| ChannelError::BadDump(format!("bad index in: {line}")))
            };
            let values: Result<Vec<f64>, _> = toks[4..].iter().map(|t| t.parse::<f64>()).collect();
            let values = values.map_err(|_| ChannelError::BadDump(format!("bad float in: {line}")))?;
            if values.len() % 2 != 0 {
                return Err(ChannelError::BadDump(format!("odd value count in: {line}")));
            }
            let zs: Vec<Complex64> = values
                .chunks(2)
                .map(|p| Complex64::new(p[0], p[1]))
                .collect();
            match toks[0] {
                "hdl" => {
                    let (bb, i, nn) = (idx(1)?, idx(2)?, idx(3)?);
                    if zs.len() != mt {
                        return Err(bad("hdl entry count mismatch"));
                    }
                    set.h_dl[bb][i][nn] = zs;
                }
                "hul" => {
                    let (bb, j, nn) = (idx(1)?, idx(2)?, idx(3)?);
                    if zs.len() != mr {
                        return Err(bad("hul entry count mismatch"));
                    }
                    set.h_ul[bb][j][nn] = zs;
                }
                "g" => {
                    let (j, i, nn) = (idx(1)?, idx(2)?, idx(3)?);
                    if zs.len() != 1 {
                        return Err(bad("g entry count mismatch"));
                    }
                    set.g[j][i][nn] = zs[0];
                }
                "hbs" => {
                    let (rx, tx, nn) = (idx(1)?, idx(2)?, idx(3)?);
                    if zs.len() != mr * mt {
                        return Err(bad("hbs entry count mismatch"));
                    }
                    set.h_bs[rx][tx][nn] =
                        CMat::from_fn(mr, mt, |r, c| zs[r * mt + c]);
                }
                other => return Err(ChannelError::BadDump(format!("unknown record '{other}'"))),
            }
        }
        Ok(set)
    }
}
