#pragma once

#include <Eigen/Dense>
#include <complex>
#include <filesystem>

namespace dlab {

/// Uniformly sampled signal: values (real or complex), step dt and origin t0.
/// Sample i sits at t0 + i*dt. Construction rejects NaN/Inf samples, lengths
/// below 2 and non-positive dt.
class TimeSeries {
public:
    TimeSeries(Eigen::VectorXcd samples, double dt, double t0 = 0.0);
    TimeSeries(const Eigen::VectorXd& samples, double dt, double t0 = 0.0);

    Eigen::Index size() const { return samples_.size(); }
    double dt() const { return dt_; }
    double t0() const { return t0_; }
    double time(Eigen::Index i) const { return t0_ + static_cast<double>(i) * dt_; }
    double duration() const { return static_cast<double>(samples_.size()) * dt_; }

    const Eigen::VectorXcd& samples() const { return samples_; }
    std::complex<double> operator[](Eigen::Index i) const { return samples_[i]; }

    /// True when every sample has zero imaginary part.
    bool is_real() const;
    Eigen::VectorXd real() const { return samples_.real(); }

    TimeSeries with_samples(Eigen::VectorXcd samples) const;

    /// CSV with header "t,value" for real series or "t,re,im" for complex
    /// ones; 17 significant digits per column.
    void write_csv(const std::filesystem::path& path) const;
    static TimeSeries read_csv(const std::filesystem::path& path);

private:
    Eigen::VectorXcd samples_;
    double dt_;
    double t0_;
};

}  // namespace dlab
