#include "latentflow/params.hpp"

#include "latentflow/error.hpp"

namespace latentflow {

std::size_t PredictorParams::add(std::string name, std::size_t rows, std::size_t cols) {
  if (contains(name)) throw ConfigError("duplicate parameter group " + name);
  groups_.push_back({std::move(name), rows, cols, flat_.size()});
  flat_.resize(flat_.size() + rows * cols, 0.0);
  return groups_.size() - 1;
}

std::size_t PredictorParams::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    if (groups_[i].name == name) return i;
  }
  throw ConfigError("no parameter group named " + std::string(name));
}

bool PredictorParams::contains(std::string_view name) const {
  for (const auto& g : groups_) {
    if (g.name == name) return true;
  }
  return false;
}

std::span<double> PredictorParams::values(std::size_t index) {
  const auto& g = groups_.at(index);
  return std::span<double>(flat_).subspan(g.offset, g.size());
}

std::span<const double> PredictorParams::values(std::size_t index) const {
  const auto& g = groups_.at(index);
  return std::span<const double>(flat_).subspan(g.offset, g.size());
}

Tensor2 PredictorParams::tensor(std::size_t index) const {
  const auto& g = groups_.at(index);
  const auto v = values(index);
  return Tensor2(g.rows, g.cols, std::vector<double>(v.begin(), v.end()));
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (values.empty()) values.assign(other.values.size(), 0.0);
  if (values.size() != other.values.size()) throw ShapeError("gradient buffers differ in length");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += other.values[i];
  return *this;
}

void Gradients::scale(double s) {
  for (double& v : values) v *= s;
}

}  // namespace latentflow
