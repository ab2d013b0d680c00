#include "hcm/nn/attention.hpp"

#include <cmath>

namespace hcm::nn {

MultiHeadAttentionParams::MultiHeadAttentionParams(ParameterStore& store, const std::string& name,
                                                   std::size_t d_model_, std::size_t heads_, SplitMix64& rng)
    : d_model(d_model_), heads(heads_) {
  if (heads == 0 || d_model % heads != 0)
    throw ConfigError("attention '" + name + "': d_model " + std::to_string(d_model) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  d_k = d_model / heads;
  for (std::size_t h = 0; h < heads; ++h) {
    const std::string prefix = name + ".head" + std::to_string(h);
    w_query.push_back(&store.create_uniform(prefix + ".w_query", {d_model, d_k}, rng));
    w_key.push_back(&store.create_uniform(prefix + ".w_key", {d_model, d_k}, rng));
    w_value.push_back(&store.create_uniform(prefix + ".w_value", {d_model, d_k}, rng));
  }
  w_out = &store.create_uniform(name + ".w_out", {heads * d_k, d_model}, rng);
}

namespace {
void check_width(const char* what, Tensor t, std::size_t d) {
  if (t.shape().size() != 2 || t.shape()[1] != d)
    throw ad::DimensionError(std::string("attention: ") + what + " has shape " + ad::to_string(t.shape()) +
                             ", expected rows of width " + std::to_string(d));
}
}  // namespace

ProjectedQueries project_queries(Graph& g, Tensor queries, const MultiHeadAttentionParams& p) {
  check_width("queries", queries, p.d_model);
  ProjectedQueries out;
  const double inv = 1.0 / std::sqrt(static_cast<double>(p.d_k));
  for (std::size_t h = 0; h < p.heads; ++h)
    out.per_head.push_back(ad::scale(ad::matmul(queries, g.param(*p.w_query[h])), inv));
  return out;
}

Tensor attend(Graph& g, const ProjectedQueries& q, Tensor keys, Tensor values, const MultiHeadAttentionParams& p,
              std::vector<Tensor>* weights) {
  check_width("keys", keys, p.d_model);
  check_width("values", values, p.d_model);
  if (keys.shape()[0] != values.shape()[0])
    throw ad::DimensionError("attention: keys " + ad::to_string(keys.shape()) + " and values " +
                             ad::to_string(values.shape()) + " differ in length");
  std::vector<Tensor> heads;
  heads.reserve(p.heads);
  for (std::size_t h = 0; h < p.heads; ++h) {
    Tensor k = ad::matmul(keys, g.param(*p.w_key[h]));
    Tensor v = ad::matmul(values, g.param(*p.w_value[h]));
    Tensor a = ad::softmax(ad::matmul_nt(q.per_head[h], k));
    if (weights) weights->push_back(a);
    heads.push_back(ad::matmul(a, v));
  }
  Tensor joined = heads.size() == 1 ? heads[0] : ad::concat(heads, 1);
  return ad::matmul(joined, g.param(*p.w_out));
}

Tensor multi_head_attention(Graph& g, Tensor queries, Tensor keys, Tensor values, const MultiHeadAttentionParams& p,
                            std::vector<Tensor>* weights) {
  return attend(g, project_queries(g, queries, p), keys, values, p, weights);
}

}  // namespace hcm::nn
