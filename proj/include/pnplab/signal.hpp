#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <initializer_list>
#include <string>

#include "pnplab/errors.hpp"

namespace pnplab {

/// Flat real vector standing for an image or a measurement. 2-D data is
/// flattened row-major before it gets here.
using Signal = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline Signal make_signal(std::initializer_list<double> values) {
    Signal s(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double v : values) s[i++] = v;
    return s;
}

inline bool all_finite(const Signal& s) { return s.allFinite(); }

/// Throws InvalidInput unless `s` is non-empty and finite.
inline void require_valid(const Signal& s, const char* what) {
    if (s.size() < 1) throw InvalidInput(std::string(what) + ": empty signal");
    if (!s.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entry");
}

inline void require_dim(const Signal& s, Eigen::Index dim, const char* what) {
    if (s.size() != dim) {
        throw InvalidInput(std::string(what) + ": dimension mismatch (got " +
                           std::to_string(s.size()) + ", expected " + std::to_string(dim) + ")");
    }
}

}  // namespace pnplab
