#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "hcm/autodiff/graph.hpp"
#include "hcm/autodiff/rng.hpp"

namespace hcm::ad {

/// Ordered registry of named parameters. Registration order defines the
/// initialization draw order and the checkpoint layout.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;

  /// New zero-filled parameter. Names must be unique.
  Parameter& create(const std::string& name, Shape shape);
  /// uniform(−1/√fan_in, 1/√fan_in), fan_in = shape[0].
  Parameter& create_uniform(const std::string& name, Shape shape, SplitMix64& rng);
  Parameter& create_constant(const std::string& name, Shape shape, double value);

  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.contains(name); }

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::vector<std::string> names() const;
  std::size_t scalar_count() const;

  void zero_grad();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr int kCheckpointVersion = 1;

/// Writes {format, version, parameters:[{name, shape, data}]} as JSON.
void save_checkpoint(const ParameterStore& store, const std::filesystem::path& path);
/// Loads values by name; every stored parameter must exist with equal shape.
void load_checkpoint(ParameterStore& store, const std::filesystem::path& path);

}  // namespace hcm::ad
