#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "tti/errors.hpp"

namespace tti::vec {

inline void check_same_size(std::span<const double> a, std::span<const double> b,
                            const char* where) {
    if (a.size() != b.size()) throw ShapeError(std::string(where) + ": length mismatch");
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    check_same_size(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double l2_norm(std::span<const double> a) {
    double s = 0.0;
    for (double x : a) s += x * x;
    return std::sqrt(s);
}

inline double l1_norm(std::span<const double> a) {
    double s = 0.0;
    for (double x : a) s += std::fabs(x);
    return s;
}

inline double l2_distance(std::span<const double> a, std::span<const double> b) {
    check_same_size(a, b, "l2_distance");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline double l1_distance(std::span<const double> a, std::span<const double> b) {
    check_same_size(a, b, "l1_distance");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
    return s;
}

// Cosine similarity; 0 when either operand has zero norm.
inline double cosine(std::span<const double> a, std::span<const double> b) {
    check_same_size(a, b, "cosine");
    double na = l2_norm(a);
    double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    double c = dot(a, b) / (na * nb);
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return c;
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::vector<double>& y) {
    check_same_size(x, y, "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline std::vector<double> mean_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw InternalError("mean_rows: empty input");
    std::vector<double> m(rows.front().size(), 0.0);
    for (const auto& r : rows) {
        check_same_size(r, m, "mean_rows");
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += r[i];
    }
    double inv = 1.0 / static_cast<double>(rows.size());
    for (auto& v : m) v *= inv;
    return m;
}

}  // namespace tti::vec
