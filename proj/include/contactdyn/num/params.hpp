#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "contactdyn/num/tensor.hpp"

namespace contactdyn::num {

//! Named collection of parameter tensors with matching gradient buffers.
//! Non-trainable entries (e.g. normalization statistics) travel with the
//! parameters but never receive optimizer updates.
class ParameterSet {
 public:
  std::size_t add(std::string name, Tensor value, bool trainable = true);

  std::size_t size() const { return entries_.size(); }
  bool contains(std::string_view name) const;
  std::size_t index(std::string_view name) const;

  const std::string& name(std::size_t i) const { return entries_.at(i).name; }
  bool trainable(std::size_t i) const { return entries_.at(i).trainable; }
  Tensor& value(std::size_t i) { return entries_.at(i).value; }
  const Tensor& value(std::size_t i) const { return entries_.at(i).value; }
  Tensor& value(std::string_view name) { return value(index(name)); }
  const Tensor& value(std::string_view name) const { return value(index(name)); }
  Tensor& grad(std::size_t i) { return entries_.at(i).grad; }
  const Tensor& grad(std::size_t i) const { return entries_.at(i).grad; }

  void zero_grad();
  std::size_t trainable_count() const;

  bool operator==(const ParameterSet& other) const;

 private:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
    bool trainable = true;
  };
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

}  // namespace contactdyn::num
