#include "dispersionlab/time_series.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dlab {
namespace {

void validate(const Eigen::VectorXcd& samples, double dt) {
    if (samples.size() < 2) throw std::invalid_argument("TimeSeries: need at least 2 samples");
    if (!(dt > 0.0)) throw std::invalid_argument("TimeSeries: dt must be positive");
    for (Eigen::Index i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i].real()) || !std::isfinite(samples[i].imag()))
            throw std::invalid_argument("TimeSeries: non-finite sample");
    }
}

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace

TimeSeries::TimeSeries(Eigen::VectorXcd samples, double dt, double t0)
    : samples_(std::move(samples)), dt_(dt), t0_(t0) {
    validate(samples_, dt_);
}

TimeSeries::TimeSeries(const Eigen::VectorXd& samples, double dt, double t0)
    : samples_(samples.cast<std::complex<double>>()), dt_(dt), t0_(t0) {
    validate(samples_, dt_);
}

bool TimeSeries::is_real() const {
    for (Eigen::Index i = 0; i < samples_.size(); ++i)
        if (samples_[i].imag() != 0.0) return false;
    return true;
}

TimeSeries TimeSeries::with_samples(Eigen::VectorXcd samples) const {
    return TimeSeries(std::move(samples), dt_, t0_);
}

void TimeSeries::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("TimeSeries: cannot open " + path.string());
    const bool re_only = is_real();
    out << (re_only ? "t,value\n" : "t,re,im\n");
    for (Eigen::Index i = 0; i < samples_.size(); ++i) {
        out << fmt17(time(i)) << ',' << fmt17(samples_[i].real());
        if (!re_only) out << ',' << fmt17(samples_[i].imag());
        out << '\n';
    }
    if (!out) throw std::runtime_error("TimeSeries: write failed for " + path.string());
}

TimeSeries TimeSeries::read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("TimeSeries: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("TimeSeries: empty file " + path.string());
    const bool complex_cols = line.find("re") != std::string::npos;

    std::vector<double> ts;
    std::vector<std::complex<double>> vals;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        double cols[3] = {0.0, 0.0, 0.0};
        int ncol = 0;
        while (std::getline(ss, cell, ',') && ncol < 3) cols[ncol++] = std::stod(cell);
        if (ncol < 2) throw std::runtime_error("TimeSeries: malformed row in " + path.string());
        ts.push_back(cols[0]);
        vals.emplace_back(cols[1], complex_cols && ncol > 2 ? cols[2] : 0.0);
    }
    if (ts.size() < 2) throw std::runtime_error("TimeSeries: too few rows in " + path.string());

    const double t0 = ts.front();
    const double dt = (ts.back() - ts.front()) / static_cast<double>(ts.size() - 1);
    Eigen::VectorXcd samples(static_cast<Eigen::Index>(vals.size()));
    for (size_t i = 0; i < vals.size(); ++i) samples[static_cast<Eigen::Index>(i)] = vals[i];
    return TimeSeries(std::move(samples), dt, t0);
}

}  // namespace dlab
