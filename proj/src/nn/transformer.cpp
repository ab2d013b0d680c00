#include "hcm/nn/transformer.hpp"

#include <cmath>

namespace hcm::nn {

TransformerBlockParams::TransformerBlockParams(ParameterStore& store, const std::string& name, std::size_t d_model,
                                               std::size_t heads, std::size_t ff_width, SplitMix64& rng)
    : attention(store, name + ".attention", d_model, heads, rng),
      norm_attention(store, name + ".norm_attention", d_model),
      ff_in(store, name + ".ff_in", d_model, ff_width, rng),
      ff_out(store, name + ".ff_out", ff_width, d_model, rng),
      norm_ff(store, name + ".norm_ff", d_model) {}

CrossModalEncoder::CrossModalEncoder(ParameterStore& store, const std::string& name, std::size_t depth,
                                     std::size_t d_model, std::size_t heads, std::size_t ff_width, SplitMix64& rng) {
  if (depth == 0) throw ConfigError("encoder '" + name + "' needs at least one block");
  for (std::size_t i = 0; i < depth; ++i)
    blocks.emplace_back(store, name + ".block" + std::to_string(i), d_model, heads, ff_width, rng);
}

Tensor transformer_block(Graph& g, Tensor query_seq, Tensor kv_grid, const TransformerBlockParams& p,
                         const ProjectedQueries* projected) {
  Tensor attended = projected ? attend(g, *projected, kv_grid, kv_grid, p.attention)
                              : multi_head_attention(g, query_seq, kv_grid, kv_grid, p.attention);
  Tensor z1 = p.norm_attention(g, ad::add(query_seq, attended));
  Tensor ff = p.ff_out(g, ad::relu(p.ff_in(g, z1)));
  return p.norm_ff(g, ad::add(z1, ff));
}

Tensor transformer_cross_attend(Graph& g, Tensor query_seq, Tensor kv_grid, const CrossModalEncoder& enc,
                                const ProjectedQueries* first_block_queries) {
  Tensor z = query_seq;
  for (std::size_t i = 0; i < enc.blocks.size(); ++i)
    z = transformer_block(g, z, kv_grid, enc.blocks[i], i == 0 ? first_block_queries : nullptr);
  return ad::mean_rows(z);
}

std::vector<double> positional_encoding(std::size_t length, std::size_t d) {
  if (d == 0 || d % 2 != 0) throw ConfigError("positional encoding width must be even, got " + std::to_string(d));
  std::vector<double> pe(length * d);
  for (std::size_t pos = 0; pos < length; ++pos)
    for (std::size_t i = 0; i < d / 2; ++i) {
      const double angle =
          static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(d));
      pe[pos * d + 2 * i] = std::sin(angle);
      pe[pos * d + 2 * i + 1] = std::cos(angle);
    }
  return pe;
}

}  // namespace hcm::nn
