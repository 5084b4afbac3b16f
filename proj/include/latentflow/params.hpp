#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "latentflow/tensor.hpp"

namespace latentflow {

struct ParamGroup {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return rows * cols; }
  friend bool operator==(const ParamGroup&, const ParamGroup&) = default;
};

/// Named parameter groups over one contiguous flat buffer. The named views
/// and the flat view alias the same storage; group order is the order of
/// `add` calls.
class PredictorParams {
 public:
  std::size_t add(std::string name, std::size_t rows, std::size_t cols);

  std::size_t size() const { return flat_.size(); }
  const std::vector<ParamGroup>& groups() const { return groups_; }
  const ParamGroup& group(std::size_t index) const { return groups_.at(index); }
  std::size_t index_of(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::span<double> values(std::size_t index);
  std::span<const double> values(std::size_t index) const;
  std::span<double> values(std::string_view name) { return values(index_of(name)); }
  std::span<const double> values(std::string_view name) const { return values(index_of(name)); }
  Tensor2 tensor(std::size_t index) const;
  Tensor2 tensor(std::string_view name) const { return tensor(index_of(name)); }

  std::span<double> flat() { return flat_; }
  std::span<const double> flat() const { return flat_; }

  friend bool operator==(const PredictorParams&, const PredictorParams&) = default;

 private:
  std::vector<ParamGroup> groups_;
  std::vector<double> flat_;
};

/// Gradient buffer laid out exactly like PredictorParams::flat().
struct Gradients {
  std::vector<double> values;

  Gradients& operator+=(const Gradients& other);
  void scale(double s);
};

}  // namespace latentflow
