#include "hcm/autodiff/parameters.hpp"

#include <cmath>
#include <stdexcept>

#include "hcm/io/json.hpp"

namespace hcm::ad {

Parameter& ParameterStore::create(const std::string& name, Shape shape) {
  if (index_.contains(name)) throw ContractError("duplicate parameter name '" + name + "'");
  index_.emplace(name, params_.size());
  params_.push_back(std::make_unique<Parameter>(name, std::move(shape)));
  return *params_.back();
}

Parameter& ParameterStore::create_uniform(const std::string& name, Shape shape, SplitMix64& rng) {
  const double fan_in = shape.empty() ? 1.0 : static_cast<double>(shape[0]);
  const double bound = 1.0 / std::sqrt(fan_in);
  Parameter& p = create(name, std::move(shape));
  for (double& v : p.value()) v = rng.uniform(-bound, bound);
  return p;
}

Parameter& ParameterStore::create_constant(const std::string& name, Shape shape, double value) {
  Parameter& p = create(name, std::move(shape));
  for (double& v : p.value()) v = value;
  return p;
}

Parameter& ParameterStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
  return *params_[it->second];
}

const Parameter& ParameterStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
  return *params_[it->second];
}

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  for (const auto& p : params_) out.push_back(p->name());
  return out;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

void save_checkpoint(const ParameterStore& store, const std::filesystem::path& path) {
  io::Json doc;
  doc["format"] = "hcm-checkpoint";
  doc["version"] = kCheckpointVersion;
  io::Json list = io::Json::array();
  for (const Parameter* p : store.all()) {
    io::Json entry;
    entry["name"] = p->name();
    entry["shape"] = p->shape();
    entry["data"] = p->value();
    list.push_back(std::move(entry));
  }
  doc["parameters"] = std::move(list);
  io::write_text(path, io::dump_exact(doc));
}

void load_checkpoint(ParameterStore& store, const std::filesystem::path& path) {
  const io::Json doc = io::read_json(path);
  if (doc.value("format", "") != "hcm-checkpoint") throw std::runtime_error(path.string() + ": not a checkpoint");
  if (doc.value("version", 0) != kCheckpointVersion)
    throw std::runtime_error(path.string() + ": unsupported checkpoint version");
  for (const auto& entry : doc.at("parameters")) {
    const auto name = entry.at("name").get<std::string>();
    Parameter& p = store.at(name);
    const auto shape = entry.at("shape").get<Shape>();
    if (shape != p.shape())
      throw DimensionError("checkpoint parameter '" + name + "' has shape " + to_string(shape) + ", model expects " +
                           to_string(p.shape()));
    p.value() = entry.at("data").get<std::vector<double>>();
  }
}

}  // namespace hcm::ad
