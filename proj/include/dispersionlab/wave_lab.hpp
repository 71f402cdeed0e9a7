#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <vector>

#include "dispersionlab/time_series.hpp"

namespace dlab {

/// Half-order-6 staggered first-derivative weights (equiripple design).
struct StencilWeights {
    std::array<double, 6> alpha{};

    static StencilWeights table1() {
        return StencilWeights{{1.2508, -0.1203, 0.0321, -0.0101, 0.0030, -0.0007}};
    }
    double abs_sum() const {
        double s = 0.0;
        for (double a : alpha) s += std::abs(a);
        return s;
    }
};

/// Stability bound for the staggered leapfrog update:
///   dt_max = 1 / (vmax * sqrt((sum|alpha|/dx)^2 + (sum|alpha|/dz)^2)).
/// Pass dz = infinity for one-dimensional grids.
double cfl_max_dt(double vmax, double dx, double dz, const StencilWeights& w);

/// Ricker wavelet (1 - 2 pi^2 f^2 (t-d)^2) exp(-pi^2 f^2 (t-d)^2).
double ricker(double fpeak, double delay, double t);
TimeSeries ricker_wavelet(double fpeak, double delay, double dt, Eigen::Index n);

/// Material model on a regular grid (nz == 1 selects the 1D solver).
/// Fields are stored x-fastest. Quality factors may be infinite (elastic);
/// the dissipation levels are tau_p = 2/Qp and tau_s = 2/Qs per standard
/// linear solid, with the n relaxation times shared by all mechanisms.
struct GridModel {
    Eigen::Index nx = 0, nz = 1;
    double dx = 0.0, dz = 0.0;
    Eigen::ArrayXd rho, vp, vs, qp, qs;
    std::vector<double> tau_sigma;

    Eigen::Index n_mechanisms() const { return static_cast<Eigen::Index>(tau_sigma.size()); }
    bool is_1d() const { return nz == 1; }
    Eigen::Index cells() const { return nx * nz; }
    double vmax() const { return vp.maxCoeff(); }

    static GridModel uniform(Eigen::Index nx, Eigen::Index nz, double dx, double dz, double rho,
                             double vp, double vs, double qp, double qs,
                             std::vector<double> tau_sigma = {});
    void validate() const;

    /// Relaxation times 1/(2 pi f_r) with f_r log-spaced over [fpeak/4, 4 fpeak].
    static std::vector<double> log_spaced_relaxation(double fpeak, int n);

    /// Flat little-endian float64 grids plus a JSON descriptor.
    void save(const std::filesystem::path& dir) const;
    static GridModel load(const std::filesystem::path& dir);
};

/// Explosive source: injected equally into the diagonal stress components at
/// stress time levels.
struct SourceSpec {
    Eigen::Index ix = 0, iz = 0;
};

struct Receiver {
    Eigen::Index ix = 0, iz = 0;
};

struct SimOptions {
    bool sponge = true;
    Eigen::Index sponge_cells = 30;
    Eigen::Index nan_check_interval = 128;
    bool allow_unstable = false;  ///< skip the CFL precondition (stability experiments)
};

/// Evolving fields. Velocities live at integer time steps, stresses and
/// memory variables at half steps; spatial staggering follows the usual
/// velocity-stress layout. Arrays are padded with a 6-cell halo.
class SimState {
public:
    explicit SimState(const GridModel& model);

    Eigen::Index step_index() const { return step_; }
    /// Pressure (sxx + szz in 2D, sigma in 1D) at a grid node.
    double pressure_at(Eigen::Index ix, Eigen::Index iz) const;
    double max_abs_field() const;
    bool finite() const;

private:
    friend class Stepper;
    Eigen::Index nx_, nz_, px_, pz_;
    Eigen::ArrayXd vx_, vz_, sxx_, szz_, sxz_;
    std::vector<Eigen::ArrayXd> rxx_, rzz_, rxz_;
    Eigen::Index step_ = 0;
};

/// One leapfrog update: stresses and memory variables advance half a step
/// using the current velocities (memory variables use the implicit-in-average
/// closed form), then velocities advance from the new stresses.
/// wavelet_value is the source sample for this step's stress time level.
class Stepper {
public:
    Stepper(const GridModel& model, const StencilWeights& weights, double dt,
            const SimOptions& options = {});

    void step(SimState& state, const SourceSpec& src, double wavelet_value) const;
    double dt() const { return dt_; }

    /// Strain forcing of the xx memory equation at a node, from current
    /// velocity derivatives (used by the residual scan).
    double strain_forcing_xx(const SimState& state, Eigen::Index ix, Eigen::Index iz) const;
    double memory_xx(const SimState& state, int mechanism, Eigen::Index ix, Eigen::Index iz) const;

private:
    void step_1d(SimState& s, const SourceSpec& src, double w) const;
    void step_2d(SimState& s, const SourceSpec& src, double w) const;
    void apply_sponge(SimState& s) const;

    const GridModel& model_;
    StencilWeights weights_;
    double dt_;
    SimOptions options_;
    Eigen::ArrayXd pi_, mu_, taup_, taus_;       // node parameters
    Eigen::ArrayXd rho_x_, rho_z_;               // staggered densities
    Eigen::ArrayXd mu_xz_, taus_xz_;             // at the shear-stress points
    Eigen::ArrayXd sponge_x_, sponge_z_;         // per-column / per-row damping
};

/// Runs n_steps leapfrog updates driven by the wavelet (dt taken from the
/// wavelet) and records the pressure at each receiver after every stress
/// update; traces carry t0 = dt/2. Throws std::runtime_error with the step
/// index when a non-finite field is detected.
std::vector<TimeSeries> run_simulation(const GridModel& model, const SourceSpec& src,
                                       const TimeSeries& wavelet,
                                       const std::vector<Receiver>& receivers,
                                       Eigen::Index n_steps, const SimOptions& options = {});

/// Dispersion-correction experiment: coarse run with the corrected source and
/// corrected traces versus an identical run at dt/fine_ratio subsampled to
/// the coarse trace times, compared against the uncorrected coarse run.
struct WaveCorrectionResult {
    double rms_uncorrected = 0.0;
    double rms_corrected = 0.0;
    double reduction = 0.0;
    double reference_rms = 0.0;
    double runtime_seconds = 0.0;
    std::vector<TimeSeries> traces_uncorrected, traces_corrected, traces_reference;
};

WaveCorrectionResult run_wave_correction_experiment(const GridModel& model, const SourceSpec& src,
                                                    const std::vector<Receiver>& receivers,
                                                    double fpeak, double delay, double dt,
                                                    Eigen::Index n_steps, Eigen::Index fine_ratio,
                                                    const SimOptions& options = {});

/// Spectral residual of the averaged memory-variable relation against the
/// dispersed strain forcing, evaluated on recorded point traces for each step
/// size; the residual scales as dt^2.
struct MemoryScanResult {
    std::vector<double> dt;
    std::vector<double> max_residual;
};

MemoryScanResult memory_residual_scan(const GridModel& model, const SourceSpec& src,
                                      const Receiver& probe, double fpeak,
                                      const std::vector<double>& dt_list, double t_max,
                                      const SimOptions& options = {});

}  // namespace dlab
