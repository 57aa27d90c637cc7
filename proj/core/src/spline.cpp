#include "qdgrasp/spline.hpp"

#include <algorithm>
#include <stdexcept>

namespace qdgrasp {

NaturalCubicSpline::NaturalCubicSpline(std::span<const double> times, std::span<const double> values)
    : t_(times.begin(), times.end()), y_(values.begin(), values.end()), m_(times.size(), 0.0)
{
    const std::size_t n = t_.size();
    if (n < 2 || y_.size() != n)
        throw std::invalid_argument("spline needs at least two knots with one value each");
    for (std::size_t i = 1; i < n; ++i) {
        if (!(t_[i] > t_[i - 1]))
            throw std::invalid_argument("spline knot times must be strictly increasing");
    }
    if (n == 2)
        return;

    // Thomas algorithm on the interior second derivatives.
    const std::size_t m = n - 2;
    std::vector<double> diag(m), upper(m), rhs(m);
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t i = k + 1;
        const double h0 = t_[i] - t_[i - 1];
        const double h1 = t_[i + 1] - t_[i];
        diag[k] = 2.0 * (h0 + h1);
        upper[k] = h1;
        rhs[k] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    }
    for (std::size_t k = 1; k < m; ++k) {
        const double lower = t_[k + 1] - t_[k];
        const double w = lower / diag[k - 1];
        diag[k] -= w * upper[k - 1];
        rhs[k] -= w * rhs[k - 1];
    }
    m_[m] = rhs[m - 1] / diag[m - 1];
    for (std::size_t k = m - 1; k-- > 0;)
        m_[k + 1] = (rhs[k] - upper[k] * m_[k + 2]) / diag[k];
}

double NaturalCubicSpline::operator()(double t) const
{
    const auto it = std::upper_bound(t_.begin() + 1, t_.end() - 1, t);
    const std::size_t i = static_cast<std::size_t>(it - t_.begin()) - 1;
    const double h = t_[i + 1] - t_[i];
    const double a = t_[i + 1] - t;
    const double b = t - t_[i];
    return m_[i] * a * a * a / (6.0 * h) + m_[i + 1] * b * b * b / (6.0 * h) + (y_[i] / h - m_[i] * h / 6.0) * a +
           (y_[i + 1] / h - m_[i + 1] * h / 6.0) * b;
}

} // namespace qdgrasp
