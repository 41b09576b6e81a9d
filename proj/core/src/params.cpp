#include "mcn/params.hpp"

#include "mcn/errors.hpp"

namespace mcn {

GradTable::GradTable(const ParamRefs& params) {
  for (const auto& p : params) {
    grads_.emplace(p.name, Tensor2(p.tensor->rows(), p.tensor->cols()));
  }
}

Tensor2& GradTable::operator[](const std::string& name) { return grads_[name]; }

const Tensor2& GradTable::at(const std::string& name) const {
  auto it = grads_.find(name);
  if (it == grads_.end()) throw DimensionError("no gradient entry named " + name);
  return it->second;
}

bool GradTable::contains(const std::string& name) const { return grads_.count(name) != 0; }

void GradTable::zero() {
  for (auto& [name, g] : grads_) g.fill(0.0);
}

void GradTable::add_scaled(const GradTable& other, double scale) {
  for (const auto& [name, g] : other.grads_) {
    auto it = grads_.find(name);
    if (it == grads_.end()) {
      Tensor2 scaled(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.size(); ++i) scaled.raw()[i] = scale * g.raw()[i];
      grads_.emplace(name, std::move(scaled));
      continue;
    }
    if (!it->second.same_shape(g)) {
      throw DimensionError("gradient shape mismatch for " + name + ": " +
                           it->second.shape_str() + " vs " + g.shape_str());
    }
    for (std::size_t i = 0; i < g.size(); ++i) it->second.raw()[i] += scale * g.raw()[i];
  }
}

bool GradTable::all_finite() const {
  for (const auto& [name, g] : grads_) {
    if (!g.all_finite()) return false;
  }
  return true;
}

void sgd_step(const ParamRefs& params, const GradTable& grads, double learning_rate) {
  if (learning_rate < 0.0) throw ConfigError("learning rate must be non-negative");
  if (!grads.all_finite()) throw DivergenceError("non-finite gradient in sgd_step");
  if (learning_rate == 0.0) return;
  for (const auto& p : params) {
    if (!grads.contains(p.name)) continue;
    const Tensor2& g = grads.at(p.name);
    if (!p.tensor->same_shape(g)) {
      throw DimensionError("sgd_step shape mismatch for " + p.name + ": " +
                           p.tensor->shape_str() + " vs " + g.shape_str());
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      p.tensor->raw()[i] -= learning_rate * g.raw()[i];
    }
  }
}

}  // namespace mcn
