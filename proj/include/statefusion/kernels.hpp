#pragma once

#include "statefusion/grid.hpp"

// Data-parallel batch kernels. Each kernel has a serial reference version and
// an OpenMP version; both compute every output element with the same
// arithmetic in the same order, so their results are bit-identical.

namespace statefusion::kernels {

/// out(n, j) = sum_i priors(n, i) * conditional(j, i)
/// priors: samples x given, conditional: target x given (column-stochastic).
Grid marginalize_serial(const Grid& priors, const Grid& conditional);
Grid marginalize_omp(const Grid& priors, const Grid& conditional);

/// Each column divided by its sum after adding epsilon to every cell.
Grid normalize_columns_serial(const Grid& raw, double epsilon);
Grid normalize_columns_omp(const Grid& raw, double epsilon);

/// Row-wise numerically stable soft-max.
Grid softmax_rows_serial(const Grid& logits);
Grid softmax_rows_omp(const Grid& logits);

/// out = inputs * weights^T + bias, optionally followed by ReLU.
/// inputs: samples x in, weights: out x in.
Grid affine_serial(const Grid& inputs, const Grid& weights, const std::vector<double>& bias, bool relu);
Grid affine_omp(const Grid& inputs, const Grid& weights, const std::vector<double>& bias, bool relu);

}  // namespace statefusion::kernels
