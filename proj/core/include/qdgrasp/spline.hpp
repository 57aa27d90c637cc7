#pragma once

#include <span>
#include <vector>

namespace qdgrasp {

/// Natural cubic spline (zero second derivative at both ends) through strictly increasing knots.
class NaturalCubicSpline {
public:
    NaturalCubicSpline(std::span<const double> times, std::span<const double> values);

    double operator()(double t) const;
    const std::vector<double>& second_derivatives() const { return m_; }

private:
    std::vector<double> t_, y_, m_;
};

} // namespace qdgrasp
