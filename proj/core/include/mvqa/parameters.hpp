#pragma once

#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mvqa/graph.hpp"

namespace mvqa {

// Owns learnable tensors by name. Addresses stay stable for the lifetime
// of the set, so structured views may hold Parameter pointers.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;
  ParameterSet(ParameterSet&&) = default;
  ParameterSet& operator=(ParameterSet&&) = default;

  // Throws ConfigError on a duplicate name.
  Parameter& add(std::string name, Tensor value, bool regularized = true);
  // Uniform [-range, range] initialization.
  Parameter& uniform(std::string name, Shape shape, double range,
                     std::mt19937_64& rng, bool regularized = true);

  Parameter& get(std::string_view name);  // LookupError
  const Parameter& get(std::string_view name) const;
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;

  std::size_t size() const { return params_.size(); }
  // Total scalar count.
  std::size_t scalar_count() const;
  // Insertion order.
  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;

  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& values);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, Parameter*> index_;
};

}  // namespace mvqa
