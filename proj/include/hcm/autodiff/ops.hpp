#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hcm/autodiff/graph.hpp"

namespace hcm::ad {

// Matrix products. Operands are rank-2.
Tensor matmul(Tensor a, Tensor b);
/// a[m×k] · b[n×k]ᵀ without materializing the transpose.
Tensor matmul_nt(Tensor a, Tensor b);
Tensor transpose(Tensor a);

// Same-shape elementwise arithmetic.
Tensor add(Tensor a, Tensor b);
Tensor sub(Tensor a, Tensor b);
Tensor mul(Tensor a, Tensor b);
Tensor scale(Tensor a, double factor);
/// x[m×n] + b broadcast over rows; b has n elements.
Tensor add_row(Tensor x, Tensor b);
/// x·w + b for a row batch x.
Tensor linear(Tensor x, Tensor w, Tensor b);

Tensor tanh(Tensor x);
Tensor sigmoid(Tensor x);
Tensor relu(Tensor x);

/// Softmax along `axis` with max subtraction.
Tensor softmax(Tensor x, std::size_t axis);
Tensor softmax(Tensor x);  // last axis
/// Per-row normalization over the last axis followed by gain and bias.
Tensor layer_norm(Tensor x, Tensor gain, Tensor bias, double eps = 1e-5);

Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis);
/// Columns [begin, end) of the last axis.
Tensor slice_last(Tensor x, std::size_t begin, std::size_t end);

/// Mean over every axis but the last; result is [1×C]. Serves both as
/// spatial pooling of an H×W×C grid and as a mean over query rows.
Tensor mean_pool_spatial(Tensor x);
Tensor mean_rows(Tensor x);

/// Rows of table[V×d] selected by ids, giving [ids.size()×d].
Tensor embed_lookup(Tensor table, std::span<const std::size_t> ids);
Tensor reshape(Tensor x, Shape shape);

Tensor sum(Tensor x);
/// −log p[target] with p clamped below by eps.
Tensor nll(Tensor probs, std::size_t target, double eps = 1e-12);
/// Binary cross-entropy of a probability against a {0,1} (or soft) target.
Tensor bce(Tensor prob, double target, double eps = 1e-7);
/// Σ (pred − target)².
Tensor squared_error(Tensor pred, std::span<const double> target);

}  // namespace hcm::ad
