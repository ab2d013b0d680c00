#pragma once

#include <vector>

#include "hcm/nn/attention.hpp"

namespace hcm::nn {

/// Attention sublayer and position-wise feed-forward sublayer, each wrapped as
/// LayerNorm(z + sublayer(z)).
struct TransformerBlockParams {
  MultiHeadAttentionParams attention;
  LayerNormParams norm_attention;
  Linear ff_in;
  Linear ff_out;
  LayerNormParams norm_ff;

  TransformerBlockParams() = default;
  TransformerBlockParams(ParameterStore& store, const std::string& name, std::size_t d_model, std::size_t heads,
                         std::size_t ff_width, SplitMix64& rng);
};

/// A stack of blocks that attend from language queries into one visual grid.
struct CrossModalEncoder {
  std::vector<TransformerBlockParams> blocks;

  CrossModalEncoder() = default;
  CrossModalEncoder(ParameterStore& store, const std::string& name, std::size_t depth, std::size_t d_model,
                    std::size_t heads, std::size_t ff_width, SplitMix64& rng);
};

/// One block: z1 = LN(q + MHA(q, kv, kv)); z2 = LN(z1 + FF(z1)). Returns z2.
/// `projected` may carry the block's precomputed query projection of `query_seq`.
Tensor transformer_block(Graph& g, Tensor query_seq, Tensor kv_grid, const TransformerBlockParams& p,
                         const ProjectedQueries* projected = nullptr);

/// Language queries [k×d] attend into a flattened spatial grid [L×d]; the
/// context is the mean of the final block's rows, shape [1×d].
Tensor transformer_cross_attend(Graph& g, Tensor query_seq, Tensor kv_grid, const CrossModalEncoder& enc,
                                const ProjectedQueries* first_block_queries = nullptr);

/// Sinusoidal table: PE[pos,2i] = sin(pos/10000^(2i/d)), PE[pos,2i+1] = cos(·).
/// Throws ConfigError for odd d.
std::vector<double> positional_encoding(std::size_t length, std::size_t d);

}  // namespace hcm::nn
