#pragma once

#include <map>
#include <string>
#include <vector>

#include "mcn/tensor.hpp"

namespace mcn {

struct NamedParam {
  std::string name;
  Tensor2* tensor;
};

using ParamRefs = std::vector<NamedParam>;

/// Gradients keyed by parameter name, shapes mirroring the parameters.
class GradTable {
 public:
  GradTable() = default;
  explicit GradTable(const ParamRefs& params);

  Tensor2& operator[](const std::string& name);
  const Tensor2& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  void zero();
  void add_scaled(const GradTable& other, double scale);
  bool all_finite() const;

  std::map<std::string, Tensor2>& entries() { return grads_; }
  const std::map<std::string, Tensor2>& entries() const { return grads_; }

 private:
  std::map<std::string, Tensor2> grads_;
};

/// p <- p - lr * g for every named parameter present in grads.
/// lr == 0 is the identity; lr < 0 is a ConfigError; a non-finite gradient
/// is a DivergenceError.
void sgd_step(const ParamRefs& params, const GradTable& grads, double learning_rate);

}  // namespace mcn
