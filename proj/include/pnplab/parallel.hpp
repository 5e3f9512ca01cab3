#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <span>
#include <thread>
#include <vector>

namespace pnplab {

/// Runs body(i) for i in [0, count) on at most `workers` threads. Each index
/// is visited exactly once; the first exception thrown is rethrown.
template <class Body>
void parallel_for(std::size_t count, std::size_t workers, Body&& body) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(count, begin + chunk);
            try {
                for (std::size_t i = begin; i < end; ++i) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

/// Pairwise (tree) summation; the reduction tree depends only on the length.
inline double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

struct MeanStderr {
    double mean = 0.0;
    double std_error = 0.0;
    double variance = 0.0;  // sample variance (n - 1 denominator)
};

inline MeanStderr mean_stderr(std::span<const double> values) {
    MeanStderr out;
    const auto n = static_cast<double>(values.size());
    if (values.empty()) return out;
    out.mean = pairwise_sum(values) / n;
    if (values.size() < 2) return out;
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - out.mean;
        sq[i] = d * d;
    }
    out.variance = pairwise_sum(sq) / (n - 1.0);
    out.std_error = std::sqrt(out.variance / n);
    return out;
}

/// Sample covariance of two equally long series.
inline double sample_covariance(std::span<const double> a, std::span<const double> b, double mean_a,
                                double mean_b) {
    if (a.size() < 2) return 0.0;
    std::vector<double> prod(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) prod[i] = (a[i] - mean_a) * (b[i] - mean_b);
    return pairwise_sum(prod) / static_cast<double>(a.size() - 1);
}

}  // namespace pnplab
