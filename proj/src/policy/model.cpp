#include "hcm/policy/model.hpp"

#include <algorithm>
#include <stdexcept>

namespace hcm::policy {

namespace {

struct VariantName {
  Variant v;
  const char* name;
};

constexpr VariantName kVariantNames[] = {
    {Variant::Hcm, "hcm"},
    {Variant::Seq2Seq, "seq2seq"},
    {Variant::Pm, "pm"},
    {Variant::Cma, "cma"},
    {Variant::HcmNoVision, "hcm_no_vision"},
    {Variant::HcmEarlyFusion, "hcm_early_fusion"},
    {Variant::HcmFlattened, "hcm_flattened"},
};

bool uses_cross_attention(Variant v) { return v != Variant::Seq2Seq && v != Variant::Pm && v != Variant::HcmFlattened; }

}  // namespace

std::string to_string(Variant v) {
  for (const auto& n : kVariantNames)
    if (n.v == v) return n.name;
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  for (const auto& n : kVariantNames)
    if (name == n.name) return n.v;
  throw nn::ConfigError("unknown variant '" + name + "'");
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> all = [] {
    std::vector<Variant> v;
    for (const auto& n : kVariantNames) v.push_back(n.v);
    return v;
  }();
  return all;
}

bool is_hierarchical(Variant v) {
  return v == Variant::Hcm || v == Variant::HcmNoVision || v == Variant::HcmEarlyFusion;
}

io::Json ModelConfig::to_json() const {
  return {{"d_model", d_model},           {"heads", heads},
          {"ff", ff},                     {"encoder_depth", encoder_depth},
          {"high_hidden", high_hidden},   {"low_hidden", low_hidden},
          {"low_layers", low_layers},     {"action_embed", action_embed},
          {"vocab_size", vocab_size},     {"channels", channels},
          {"v_max", v_max},               {"omega_max", omega_max}};
}

ModelConfig ModelConfig::from_json(const io::Json& j) {
  ModelConfig c;
  c.d_model = j.at("d_model").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.ff = j.at("ff").get<std::size_t>();
  c.encoder_depth = j.at("encoder_depth").get<std::size_t>();
  c.high_hidden = j.at("high_hidden").get<std::size_t>();
  c.low_hidden = j.at("low_hidden").get<std::size_t>();
  c.low_layers = j.at("low_layers").get<std::size_t>();
  c.action_embed = j.at("action_embed").get<std::size_t>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.channels = j.at("channels").get<std::size_t>();
  c.v_max = j.at("v_max").get<double>();
  c.omega_max = j.at("omega_max").get<double>();
  return c;
}

std::array<double, 2> normalize_action(const world::LowAction& a, double v_max, double omega_max) {
  return {2.0 * a.v / v_max - 1.0, a.omega / omega_max};
}

world::LowAction denormalize_action(double v_norm, double omega_norm, double v_max, double omega_max) {
  return {v_max * (v_norm + 1.0) / 2.0, omega_max * omega_norm};
}

std::vector<std::size_t> pad_instruction(const std::vector<int>& tokens, std::size_t vocab_size) {
  std::vector<std::size_t> ids(kMaxTokens, 0);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] < 0 || static_cast<std::size_t>(tokens[i]) >= vocab_size)
      throw std::invalid_argument("instruction token " + std::to_string(tokens[i]) + " at position " +
                                  std::to_string(i) + " is not in the vocabulary");
    if (i < kMaxTokens) ids[i] = static_cast<std::size_t>(tokens[i]);
  }
  return ids;
}

Model::Model(Variant kind, const ModelConfig& c, std::uint64_t seed) : kind_(kind), config_(c) {
  if (c.low_layers == 0) throw nn::ConfigError("low_layers must be at least 1");
  SplitMix64 rng(seed);
  const std::size_t d = c.d_model, e = c.action_embed;
  const std::size_t grid_in = c.channels + 1;
  p_.tokens = nn::Embedding(store_, "tokens", c.vocab_size, d, rng);
  if (uses_cross_attention(kind)) {
    const bool fused = kind == Variant::HcmEarlyFusion;
    p_.rgb_proj = nn::Linear(store_, fused ? "fused_proj" : "rgb_proj", fused ? grid_in : c.channels, d, rng);
    p_.rgb_position = &store_.create_uniform(fused ? "fused_position" : "rgb_position", {world::kGridCells, d}, rng);
    p_.rgb_encoder = nn::CrossModalEncoder(store_, fused ? "fused_encoder" : "rgb_encoder", c.encoder_depth, d,
                                           c.heads, c.ff, rng);
    if (!fused) {
      p_.depth_proj = nn::Linear(store_, "depth_proj", 1, d, rng);
      p_.depth_position = &store_.create_uniform("depth_position", {world::kGridCells, d}, rng);
      p_.depth_encoder = nn::CrossModalEncoder(store_, "depth_encoder", c.encoder_depth, d, c.heads, c.ff, rng);
    }
  }
  p_.visual = nn::Linear(store_, "visual", grid_in, d, rng);
  const std::size_t contexts = kind == Variant::HcmEarlyFusion ? 1 : 2;
  if (is_hierarchical(kind)) {
    p_.prev_action = nn::Embedding(store_, "prev_action", kStartAction + 1, e, rng);
    p_.high_lstm = nn::LstmParams(store_, "high_lstm", contexts * d + d + e, c.high_hidden, rng);
    p_.action_head = nn::Linear(store_, "action_head", c.high_hidden, world::kHighActionCount, rng);
    p_.subgoal = nn::Embedding(store_, "subgoal", world::kHighActionCount, e, rng);
    for (std::size_t l = 0; l < c.low_layers; ++l)
      p_.low_lstm.emplace_back(store_, "low_lstm" + std::to_string(l), l == 0 ? d + e : c.low_hidden, c.low_hidden,
                               rng);
    p_.velocity_head = nn::Linear(store_, "velocity_head", c.low_hidden + 2, 2, rng);
    p_.stop_head = nn::Linear(store_, "stop_head", c.low_hidden + 2, 1, rng);
    return;
  }
  const std::size_t in = kind == Variant::Cma ? 3 * d + 2 : 2 * d + 2;
  if (kind != Variant::Cma) p_.summary = nn::Linear(store_, "summary", d, d, rng);
  p_.flat_lstm = nn::LstmParams(store_, "flat_lstm", in, c.high_hidden, rng);
  p_.velocity_head = nn::Linear(store_, "velocity_head", c.high_hidden + 2, 2, rng);
  p_.stop_head = nn::Linear(store_, "stop_head", c.high_hidden + 2, 1, rng);
  if (kind == Variant::Pm) p_.progress_head = nn::Linear(store_, "progress_head", c.high_hidden, 1, rng);
  if (kind == Variant::HcmFlattened)
    p_.action_head = nn::Linear(store_, "action_head", c.high_hidden, world::kHighActionCount, rng);
}

Tensor Model::encode_instruction(Graph& g, const std::vector<int>& tokens) const {
  const auto ids = pad_instruction(tokens, config_.vocab_size);
  return p_.tokens(g, ids);
}

InstructionContext Model::prepare(Graph& g, const std::vector<int>& tokens) const {
  InstructionContext ctx;
  const Tensor pe = g.constant({kMaxTokens, config_.d_model}, nn::positional_encoding(kMaxTokens, config_.d_model));
  ctx.queries = ad::add(encode_instruction(g, tokens), pe);
  if (uses_cross_attention(kind_)) {
    ctx.rgb_queries = nn::project_queries(g, ctx.queries, p_.rgb_encoder.blocks.front().attention);
    if (kind_ != Variant::HcmEarlyFusion)
      ctx.depth_queries = nn::project_queries(g, ctx.queries, p_.depth_encoder.blocks.front().attention);
  }
  if (p_.summary.weight) ctx.summary = ad::tanh(p_.summary(g, ad::mean_rows(ctx.queries)));
  return ctx;
}

std::vector<ad::Shape> Model::state_shapes() const {
  std::vector<ad::Shape> shapes;
  if (is_hierarchical(kind_)) {
    shapes.push_back({1, config_.high_hidden});
    shapes.push_back({1, config_.high_hidden});
    for (std::size_t l = 0; l < config_.low_layers; ++l) {
      shapes.push_back({1, config_.low_hidden});
      shapes.push_back({1, config_.low_hidden});
    }
  } else {
    shapes.push_back({1, config_.high_hidden});
    shapes.push_back({1, config_.high_hidden});
  }
  return shapes;
}

std::vector<Tensor> Model::initial_state(Graph& g) const {
  std::vector<Tensor> state;
  for (const auto& s : state_shapes()) state.push_back(g.constant(s, std::vector<double>(ad::numel(s), 0.0)));
  return state;
}

Tensor Model::grid_features(Graph& g, const world::Observation& obs, bool rgb) const {
  const std::size_t cells = world::kGridCells;
  const bool no_vision = kind_ == Variant::HcmNoVision;
  Tensor x;
  if (kind_ == Variant::HcmEarlyFusion) {
    const std::size_t ch = config_.channels + 1;
    std::vector<double> fused(cells * ch, 0.0);
    if (!no_vision)
      for (std::size_t i = 0; i < cells; ++i) {
        std::copy_n(obs.rgb_like.begin() + static_cast<std::ptrdiff_t>(i * config_.channels), config_.channels,
                    fused.begin() + static_cast<std::ptrdiff_t>(i * ch));
        fused[i * ch + config_.channels] = obs.depth_like[i];
      }
    x = g.constant({cells, ch}, std::move(fused));
  } else if (rgb) {
    x = no_vision ? g.constant({cells, config_.channels}, std::vector<double>(cells * config_.channels, 0.0))
                  : g.constant({cells, config_.channels}, obs.rgb_like);
  } else {
    x = no_vision ? g.constant({cells, 1}, std::vector<double>(cells, 0.0)) : g.constant({cells, 1}, obs.depth_like);
  }
  const nn::Linear& proj = rgb ? p_.rgb_proj : p_.depth_proj;
  ad::Parameter& pos = rgb ? *p_.rgb_position : *p_.depth_position;
  return ad::add(ad::relu(proj(g, x)), g.param(pos));
}

Tensor Model::pooled_visual(Graph& g, const world::Observation& obs) const {
  // v̂ = W_i · meanpool([f_r, f_d]) + b_i
  const std::size_t ch = config_.channels;
  std::vector<double> pooled(ch + 1, 0.0);
  if (kind_ != Variant::HcmNoVision) {
    for (std::size_t i = 0; i < world::kGridCells; ++i) {
      for (std::size_t c = 0; c < ch; ++c) pooled[c] += obs.rgb_like[i * ch + c];
      pooled[ch] += obs.depth_like[i];
    }
    for (double& v : pooled) v /= static_cast<double>(world::kGridCells);
  }
  return p_.visual(g, g.constant({1, ch + 1}, std::move(pooled)));
}

StepOutput Model::step(Graph& g, const InstructionContext& ctx, const world::Observation& obs, const StepInput& in,
                       std::vector<Tensor>& state) const {
  if (state.size() != state_shapes().size())
    throw ad::ContractError("policy state has " + std::to_string(state.size()) + " tensors, expected " +
                            std::to_string(state_shapes().size()));
  if (obs.channels != config_.channels)
    throw ad::DimensionError("observation has " + std::to_string(obs.channels) + " channels, model expects " +
                             std::to_string(config_.channels));
  return is_hierarchical(kind_) ? hierarchical_step(g, ctx, obs, in, state) : flat_step(g, ctx, obs, in, state);
}

StepOutput Model::hierarchical_step(Graph& g, const InstructionContext& ctx, const world::Observation& obs,
                                    const StepInput& in, std::vector<Tensor>& state) const {
  StepOutput out;
  const Tensor v_hat = pooled_visual(g, obs);
  std::vector<Tensor> high_in;
  high_in.push_back(nn::transformer_cross_attend(g, ctx.queries, grid_features(g, obs, true), p_.rgb_encoder,
                                                 &ctx.rgb_queries));
  if (kind_ != Variant::HcmEarlyFusion)
    high_in.push_back(nn::transformer_cross_attend(g, ctx.queries, grid_features(g, obs, false), p_.depth_encoder,
                                                   &ctx.depth_queries));
  high_in.push_back(v_hat);
  high_in.push_back(p_.prev_action.row(g, in.prev_high));
  nn::LstmState high = nn::lstm_step(g, ad::concat(high_in, 1), {state[0], state[1]}, p_.high_lstm);
  state[0] = high.hidden;
  state[1] = high.cell;
  out.high_probs = ad::softmax(p_.action_head(g, high.hidden));

  if (in.subgoal) {
    out.subgoal = *in.subgoal;
  } else {
    const auto probs = out.high_probs.data();
    out.subgoal = static_cast<world::HighAction>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  }
  Tensor x = ad::concat({v_hat, p_.subgoal.row(g, static_cast<std::size_t>(out.subgoal))}, 1);
  for (std::size_t l = 0; l < p_.low_lstm.size(); ++l) {
    nn::LstmState s = nn::lstm_step(g, x, {state[2 + 2 * l], state[3 + 2 * l]}, p_.low_lstm[l]);
    state[2 + 2 * l] = s.hidden;
    state[3 + 2 * l] = s.cell;
    x = s.hidden;
  }
  const Tensor head_in = ad::concat({x, g.constant({1, 2}, std::vector<double>{in.prev_low[0], in.prev_low[1]})}, 1);
  out.velocity = ad::tanh(p_.velocity_head(g, head_in));
  out.stop = ad::sigmoid(p_.stop_head(g, head_in));
  return out;
}

StepOutput Model::flat_step(Graph& g, const InstructionContext& ctx, const world::Observation& obs,
                            const StepInput& in, std::vector<Tensor>& state) const {
  StepOutput out;
  const Tensor prev_low = g.constant({1, 2}, std::vector<double>{in.prev_low[0], in.prev_low[1]});
  std::vector<Tensor> parts;
  if (kind_ == Variant::Cma) {
    parts.push_back(nn::transformer_cross_attend(g, ctx.queries, grid_features(g, obs, true), p_.rgb_encoder,
                                                 &ctx.rgb_queries));
    parts.push_back(nn::transformer_cross_attend(g, ctx.queries, grid_features(g, obs, false), p_.depth_encoder,
                                                 &ctx.depth_queries));
  } else {
    parts.push_back(ctx.summary);
  }
  parts.push_back(pooled_visual(g, obs));
  parts.push_back(prev_low);
  nn::LstmState s = nn::lstm_step(g, ad::concat(parts, 1), {state[0], state[1]}, p_.flat_lstm);
  state[0] = s.hidden;
  state[1] = s.cell;
  const Tensor head_in = ad::concat({s.hidden, prev_low}, 1);
  out.velocity = ad::tanh(p_.velocity_head(g, head_in));
  out.stop = ad::sigmoid(p_.stop_head(g, head_in));
  if (kind_ == Variant::Pm) out.progress = ad::sigmoid(p_.progress_head(g, s.hidden));
  if (kind_ == Variant::HcmFlattened) {
    out.high_probs = ad::softmax(p_.action_head(g, s.hidden));
    const auto probs = out.high_probs.data();
    out.subgoal = static_cast<world::HighAction>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  }
  return out;
}

}  // namespace hcm::policy
