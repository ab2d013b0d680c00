#include "hcm/policy/train.hpp"

#include <chrono>
#include <cmath>

#include "hcm/nn/tbptt.hpp"
#include "hcm/oracle/instruction.hpp"

namespace hcm::policy {

io::Json TrainConfig::to_json() const {
  return {{"epochs", epochs},           {"truncation", truncation}, {"lambda", lambda},
          {"lr", lr},                   {"clip_norm", clip_norm},   {"seed", seed},
          {"patience", patience},       {"val_limit", val_limit},   {"eval_max_steps", eval_max_steps},
          {"rotate_paraphrases", rotate_paraphrases}, {"prev_action_dropout", prev_action_dropout}};
}

TrainConfig TrainConfig::from_json(const io::Json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<std::size_t>();
  c.truncation = j.at("truncation").get<std::size_t>();
  c.lambda = j.at("lambda").get<double>();
  c.lr = j.at("lr").get<double>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.patience = j.at("patience").get<std::size_t>();
  c.val_limit = j.at("val_limit").get<std::size_t>();
  c.eval_max_steps = j.at("eval_max_steps").get<std::size_t>();
  c.rotate_paraphrases = j.at("rotate_paraphrases").get<bool>();
  c.prev_action_dropout = j.value("prev_action_dropout", 0.0);
  return c;
}

StepInput teacher_input(const oracle::Episode& e, std::size_t t, const ModelConfig& c) {
  StepInput in;
  in.prev_high = t == 0 ? kStartAction : static_cast<std::size_t>(e.high_actions[t - 1]);
  in.subgoal = e.high_actions[t];
  in.prev_low = t == 0 ? normalize_action({0.0, 0.0}, c.v_max, c.omega_max)
                       : normalize_action(e.low_actions[t - 1], c.v_max, c.omega_max);
  return in;
}

StepTarget teacher_target(const oracle::Episode& e, std::size_t t, const ModelConfig& c) {
  StepTarget y;
  y.high = e.high_actions[t];
  y.velocity = normalize_action(e.low_actions[t], c.v_max, c.omega_max);
  y.stop = static_cast<double>(e.stop_labels[t]);
  y.progress = e.progress(t);
  return y;
}

namespace {

const std::vector<int>& paraphrase_tokens(const oracle::Episode& e, std::size_t paraphrase) {
  return e.instructions.at(paraphrase % e.instructions.size()).tokens;
}

}  // namespace

Tensor episode_loss(Graph& g, const Model& model, const world::World& w, const oracle::Episode& e, double lambda,
                    std::size_t steps, std::size_t paraphrase) {
  const std::size_t n = steps == 0 ? e.steps() : std::min(steps, e.steps());
  const InstructionContext ctx = model.prepare(g, paraphrase_tokens(e, paraphrase));
  std::vector<Tensor> state = model.initial_state(g);
  std::vector<StepOutput> outs;
  std::vector<StepTarget> targets;
  for (std::size_t t = 0; t < n; ++t) {
    outs.push_back(model.step(g, ctx, world::render_observation(w, e.poses[t]), teacher_input(e, t, model.config()),
                              state));
    targets.push_back(teacher_target(e, t, model.config()));
  }
  return joint_loss(outs, targets, lambda);
}

double train_epoch(Model& model, nn::Adam& adam, const oracle::Dataset& data,
                   const std::vector<const oracle::Episode*>& episodes, const TrainConfig& config,
                   std::size_t paraphrase, std::size_t epoch) {
  if (config.prev_action_dropout < 0.0 || config.prev_action_dropout > 1.0)
    throw nn::ConfigError("prev_action_dropout must lie in [0, 1]");
  SplitMix64 noise(mix_seed(mix_seed(config.seed, 0x64726f70ULL), epoch));
  double total = 0.0;
  std::size_t steps = 0;
  nn::CarriedState initial;
  initial.shapes = model.state_shapes();
  for (const auto& s : initial.shapes) initial.values.emplace_back(ad::numel(s), 0.0);
  for (const oracle::Episode* e : episodes) {
    const world::World& w = data.world_for(*e);
    const auto& tokens = paraphrase_tokens(*e, paraphrase);
    InstructionContext ctx;
    nn::TbpttHooks hooks;
    hooks.begin_window = [&](Graph& g, std::size_t) { ctx = model.prepare(g, tokens); };
    hooks.step = [&](Graph& g, std::size_t t, std::vector<Tensor>& state) {
      StepInput in = teacher_input(*e, t, model.config());
      if (config.prev_action_dropout > 0.0 && noise.bernoulli(config.prev_action_dropout)) {
        in.prev_high = kStartAction;
        in.prev_low = normalize_action({0.0, 0.0}, model.config().v_max, model.config().omega_max);
      }
      const StepOutput out = model.step(g, ctx, world::render_observation(w, e->poses[t]), in, state);
      return step_loss(out, teacher_target(*e, t, model.config()), config.lambda);
    };
    hooks.end_window = [&](Graph&, const nn::TbpttWindow& win) {
      if (!std::isfinite(win.loss))
        throw TrainingDiverged("non-finite loss in episode " + e->id + " at steps [" + std::to_string(win.begin) +
                               ", " + std::to_string(win.end) + ")");
      try {
        nn::check_finite_gradients(model.store());
      } catch (const nn::NonFiniteGradient& err) {
        throw TrainingDiverged(std::string(err.what()) + " in episode " + e->id + " at steps [" +
                               std::to_string(win.begin) + ", " + std::to_string(win.end) + ")");
      }
      adam.step(model.store());
      total += win.loss;
    };
    nn::tbptt_train(e->steps(), config.truncation, initial, hooks);
    steps += e->steps();
  }
  return steps == 0 ? 0.0 : total / static_cast<double>(steps);
}

TrainResult train_variant(Variant kind, const ModelConfig& model_config, const TrainConfig& config,
                          const oracle::Dataset& data, const EpochCallback& on_epoch) {
  if (!(config.lambda >= 0.0 && config.lambda <= 1.0))
    throw nn::ConfigError("lambda must lie in [0, 1], got " + std::to_string(config.lambda));
  TrainResult result;
  result.model = std::make_unique<Model>(kind, model_config, mix_seed(config.seed, 0x6d6f64656cULL));
  Model& model = *result.model;
  nn::Adam adam({config.lr, 0.9, 0.999, 1e-8, config.clip_norm});
  SplitMix64 order_rng(mix_seed(config.seed, 0x6f72646572ULL));
  std::vector<const oracle::Episode*> train = data.split("train");
  if (train.empty()) throw oracle::DatasetError("dataset has no training episodes");

  eval::EvalOptions eval_options;
  eval_options.max_steps = config.eval_max_steps;
  eval_options.seed = config.seed;
  eval_options.limit = config.val_limit;
  const bool has_val = !data.split("val_seen").empty();

  std::vector<std::vector<double>> best;
  double best_spl = -1.0;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    // Fisher-Yates with the run's own generator
    for (std::size_t i = train.size(); i > 1; --i) std::swap(train[i - 1], train[order_rng.below(i)]);
    const std::size_t paraphrase = config.rotate_paraphrases ? (epoch - 1) % oracle::kParaphrases : 0;
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_epoch(model, adam, data, train, config, paraphrase, epoch);
    if (has_val) {
      ModelPolicy policy(model);
      const eval::MetricsReport r = eval::evaluate(data, "val_seen", policy, eval_options);
      rec.val_seen_sr = r.sr;
      rec.val_seen_spl = r.spl;
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.curve.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rec.val_seen_spl >= best_spl) {
      best_spl = rec.val_seen_spl;
      result.best_epoch = epoch;
      best.clear();
      for (const ad::Parameter* p : model.store().all()) best.push_back(p->value());
      since_best = 0;
    } else if (config.patience != 0 && ++since_best >= config.patience) {
      break;
    }
  }
  auto params = model.store().all();
  for (std::size_t i = 0; i < params.size() && i < best.size(); ++i) params[i]->value() = best[i];
  return result;
}

std::uint64_t CheckpointInfo::config_hash() const {
  io::Json j = {{"variant", to_string(kind)}, {"model", model.to_json()}, {"train", train.to_json()}};
  return io::fnv1a(io::dump_exact(j));
}

io::Json CheckpointInfo::to_json() const {
  io::Json c = io::Json::array();
  for (const auto& r : curve)
    c.push_back({{"epoch", r.epoch},
                 {"train_loss", r.train_loss},
                 {"val_seen_sr", r.val_seen_sr},
                 {"val_seen_spl", r.val_seen_spl},
                 {"seconds", r.seconds}});
  return {{"variant", to_string(kind)},
          {"model", model.to_json()},
          {"train", train.to_json()},
          {"config_hash", io::hex64(config_hash())},
          {"dataset_hash", io::hex64(dataset_hash)},
          {"vocab_hash", io::hex64(vocab_hash)},
          {"best_epoch", best_epoch},
          {"curve", std::move(c)}};
}

CheckpointInfo CheckpointInfo::from_json(const io::Json& j) {
  CheckpointInfo info;
  info.kind = parse_variant(j.at("variant").get<std::string>());
  info.model = ModelConfig::from_json(j.at("model"));
  info.train = TrainConfig::from_json(j.at("train"));
  info.dataset_hash = std::stoull(j.at("dataset_hash").get<std::string>(), nullptr, 16);
  info.vocab_hash = std::stoull(j.at("vocab_hash").get<std::string>(), nullptr, 16);
  info.best_epoch = j.at("best_epoch").get<std::size_t>();
  for (const auto& r : j.at("curve"))
    info.curve.push_back({r.at("epoch").get<std::size_t>(), r.at("train_loss").get<double>(),
                          r.at("val_seen_sr").get<double>(), r.at("val_seen_spl").get<double>(),
                          r.at("seconds").get<double>()});
  return info;
}

void save_model(const Model& model, const CheckpointInfo& info, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  ad::save_checkpoint(model.store(), dir / "checkpoint.json");
  io::write_text(dir / "model.json", io::dump_exact_pretty(info.to_json()) + "\n");
}

LoadedModel load_model(const std::filesystem::path& dir) {
  LoadedModel out;
  out.info = CheckpointInfo::from_json(io::read_json(dir / "model.json"));
  out.model = std::make_unique<Model>(out.info.kind, out.info.model, 0);
  ad::load_checkpoint(out.model->store(), dir / "checkpoint.json");
  return out;
}

void ModelPolicy::reset(const world::EpisodeContext& ctx) {
  tokens_ = ctx.instruction ? *ctx.instruction : std::vector<int>{};
  state_.clear();
  for (const auto& s : model_.state_shapes()) state_.emplace_back(ad::numel(s), 0.0);
  prev_high_ = kStartAction;
  prev_low_ = normalize_action({0.0, 0.0}, model_.config().v_max, model_.config().omega_max);
}

world::PolicyOutput ModelPolicy::act(const world::Observation& obs, std::size_t) {
  Graph g;
  const InstructionContext ctx = model_.prepare(g, tokens_);
  const auto shapes = model_.state_shapes();
  std::vector<Tensor> state;
  for (std::size_t i = 0; i < shapes.size(); ++i) state.push_back(g.constant(shapes[i], state_[i]));
  StepInput in;
  in.prev_high = prev_high_;
  in.prev_low = prev_low_;
  const StepOutput out = model_.step(g, ctx, obs, in, state);
  for (std::size_t i = 0; i < state.size(); ++i) state_[i].assign(state[i].data().begin(), state[i].data().end());

  const double v_norm = out.velocity[0], w_norm = out.velocity[1];
  last_stop_ = out.stop.item();
  last_high_.clear();
  if (out.high_probs.valid()) last_high_.assign(out.high_probs.data().begin(), out.high_probs.data().end());
  prev_high_ = static_cast<std::size_t>(out.subgoal);
  prev_low_ = {v_norm, w_norm};
  const bool stop = is_hierarchical(model_.kind()) ? out.subgoal == world::HighAction::Stop && last_stop_ > 0.5
                                                   : last_stop_ > 0.5;
  return {denormalize_action(v_norm, w_norm, model_.config().v_max, model_.config().omega_max), stop};
}

}  // namespace hcm::policy
