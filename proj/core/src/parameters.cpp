#include "mvqa/parameters.hpp"

#include "mvqa/errors.hpp"

namespace mvqa {

Parameter& ParameterSet::add(std::string name, Tensor value, bool regularized) {
  if (index_.count(name)) throw ConfigError("duplicate parameter '" + name + "'");
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = std::move(value);
  p->regularized = regularized;
  Parameter& ref = *p;
  index_.emplace(std::move(name), &ref);
  params_.push_back(std::move(p));
  return ref;
}

Parameter& ParameterSet::uniform(std::string name, Shape shape, double range,
                                 std::mt19937_64& rng, bool regularized) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> unif(-range, range);
  for (auto& x : t.data()) x = unif(rng);
  return add(std::move(name), std::move(t), regularized);
}

Parameter* ParameterSet::find(std::string_view name) {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : it->second;
}

const Parameter* ParameterSet::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : it->second;
}

Parameter& ParameterSet::get(std::string_view name) {
  if (Parameter* p = find(name)) return *p;
  throw LookupError("unknown parameter '" + std::string(name) + "'");
}

const Parameter& ParameterSet::get(std::string_view name) const {
  if (const Parameter* p = find(name)) return *p;
  throw LookupError("unknown parameter '" + std::string(name) + "'");
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

std::vector<Parameter*> ParameterSet::all() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterSet::all() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<Tensor> ParameterSet::snapshot() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p->value);
  return out;
}

void ParameterSet::restore(const std::vector<Tensor>& values) {
  if (values.size() != params_.size())
    throw ContractViolation("snapshot does not match parameter set");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].shape() != params_[i]->value.shape())
      throw DimensionError("snapshot shape mismatch for " + params_[i]->name);
    params_[i]->value = values[i];
  }
}

}  // namespace mvqa
