#pragma once

#include <vector>

#include "hcm/nn/layers.hpp"

namespace hcm::nn {

/// Per-head projections W_i^Q, W_i^K, W_i^V (d_model×d_k) and the output
/// projection W^h ((n_h·d_k)×d_model).
struct MultiHeadAttentionParams {
  std::size_t d_model = 0;
  std::size_t heads = 0;
  std::size_t d_k = 0;
  std::vector<Parameter*> w_query;
  std::vector<Parameter*> w_key;
  std::vector<Parameter*> w_value;
  Parameter* w_out = nullptr;

  MultiHeadAttentionParams() = default;
  /// Throws ConfigError unless d_model is divisible by heads.
  MultiHeadAttentionParams(ParameterStore& store, const std::string& name, std::size_t d_model, std::size_t heads,
                           SplitMix64& rng);
};

/// Queries already projected per head and scaled by 1/√d_k. Lets a caller
/// reuse the query side across many key/value sets.
struct ProjectedQueries {
  std::vector<Tensor> per_head;
};

ProjectedQueries project_queries(Graph& g, Tensor queries, const MultiHeadAttentionParams& p);

/// softmax(q_i k_iᵀ) v_i per head, concatenated and projected by W^h.
/// When `weights` is given it receives one [L_q×L_k] tensor per head.
Tensor attend(Graph& g, const ProjectedQueries& q, Tensor keys, Tensor values, const MultiHeadAttentionParams& p,
              std::vector<Tensor>* weights = nullptr);

Tensor multi_head_attention(Graph& g, Tensor queries, Tensor keys, Tensor values, const MultiHeadAttentionParams& p,
                            std::vector<Tensor>* weights = nullptr);

}  // namespace hcm::nn
