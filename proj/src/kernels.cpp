#include "statefusion/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>

#include "statefusion/errors.hpp"

namespace statefusion::kernels {

namespace {

void check_marginalize(const Grid& priors, const Grid& conditional) {
    if (priors.cols() != conditional.cols())
        throw ValidationError("marginalize: prior length " + std::to_string(priors.cols()) +
                              " does not match conditioning dimension " + std::to_string(conditional.cols()));
}

void check_affine(const Grid& inputs, const Grid& weights, const std::vector<double>& bias) {
    if (inputs.cols() != weights.cols() || bias.size() != weights.rows())
        throw ValidationError("affine: dimension mismatch");
}

// Shared per-element bodies so that serial and OpenMP paths stay bit-identical.
inline void marginalize_row(const Grid& priors, const Grid& conditional, Grid& out, std::size_t n) {
    const auto prior = priors.row(n);
    for (std::size_t j = 0; j < conditional.rows(); ++j) {
        const auto column_j = conditional.row(j);
        double acc = 0.0;
        for (std::size_t i = 0; i < prior.size(); ++i) acc += prior[i] * column_j[i];
        out(n, j) = acc;
    }
}

inline void normalize_column(const Grid& raw, double epsilon, Grid& out, std::size_t c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < raw.rows(); ++r) sum += raw(r, c) + epsilon;
    if (sum > 0.0) {
        for (std::size_t r = 0; r < raw.rows(); ++r) out(r, c) = (raw(r, c) + epsilon) / sum;
    } else {
        const double u = 1.0 / static_cast<double>(raw.rows());
        for (std::size_t r = 0; r < raw.rows(); ++r) out(r, c) = u;
    }
}

inline void softmax_row(const Grid& logits, Grid& out, std::size_t n) {
    const auto in = logits.row(n);
    auto dst = out.row(n);
    const double peak = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t k = 0; k < in.size(); ++k) {
        dst[k] = std::exp(in[k] - peak);
        sum += dst[k];
    }
    for (auto& v : dst) v /= sum;
}

inline void affine_row(const Grid& inputs, const Grid& weights, const std::vector<double>& bias, bool relu,
                       Grid& out, std::size_t n) {
    const auto x = inputs.row(n);
    for (std::size_t o = 0; o < weights.rows(); ++o) {
        const auto w = weights.row(o);
        double acc = bias[o];
        for (std::size_t k = 0; k < x.size(); ++k) acc += w[k] * x[k];
        out(n, o) = relu && acc < 0.0 ? 0.0 : acc;
    }
}

}  // namespace

Grid marginalize_serial(const Grid& priors, const Grid& conditional) {
    check_marginalize(priors, conditional);
    Grid out(priors.rows(), conditional.rows());
    for (std::size_t n = 0; n < priors.rows(); ++n) marginalize_row(priors, conditional, out, n);
    return out;
}

Grid marginalize_omp(const Grid& priors, const Grid& conditional) {
    check_marginalize(priors, conditional);
    Grid out(priors.rows(), conditional.rows());
    const auto rows = static_cast<std::int64_t>(priors.rows());
#pragma omp parallel for schedule(static)
    for (std::int64_t n = 0; n < rows; ++n) marginalize_row(priors, conditional, out, static_cast<std::size_t>(n));
    return out;
}

Grid normalize_columns_serial(const Grid& raw, double epsilon) {
    Grid out(raw.rows(), raw.cols());
    for (std::size_t c = 0; c < raw.cols(); ++c) normalize_column(raw, epsilon, out, c);
    return out;
}

Grid normalize_columns_omp(const Grid& raw, double epsilon) {
    Grid out(raw.rows(), raw.cols());
    const auto cols = static_cast<std::int64_t>(raw.cols());
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < cols; ++c) normalize_column(raw, epsilon, out, static_cast<std::size_t>(c));
    return out;
}

Grid softmax_rows_serial(const Grid& logits) {
    Grid out(logits.rows(), logits.cols());
    for (std::size_t n = 0; n < logits.rows(); ++n) softmax_row(logits, out, n);
    return out;
}

Grid softmax_rows_omp(const Grid& logits) {
    Grid out(logits.rows(), logits.cols());
    const auto rows = static_cast<std::int64_t>(logits.rows());
#pragma omp parallel for schedule(static)
    for (std::int64_t n = 0; n < rows; ++n) softmax_row(logits, out, static_cast<std::size_t>(n));
    return out;
}

Grid affine_serial(const Grid& inputs, const Grid& weights, const std::vector<double>& bias, bool relu) {
    check_affine(inputs, weights, bias);
    Grid out(inputs.rows(), weights.rows());
    for (std::size_t n = 0; n < inputs.rows(); ++n) affine_row(inputs, weights, bias, relu, out, n);
    return out;
}

Grid affine_omp(const Grid& inputs, const Grid& weights, const std::vector<double>& bias, bool relu) {
    check_affine(inputs, weights, bias);
    Grid out(inputs.rows(), weights.rows());
    const auto rows = static_cast<std::int64_t>(inputs.rows());
#pragma omp parallel for schedule(static)
    for (std::int64_t n = 0; n < rows; ++n)
        affine_row(inputs, weights, bias, relu, out, static_cast<std::size_t>(n));
    return out;
}

}  // namespace statefusion::kernels
