#include "owl/label_set.hpp"

#include "owl/error.hpp"

namespace owl {

LabelSet::LabelSet(const std::vector<std::string>& names) {
  for (const auto& n : names) append_new(n);
}

std::size_t LabelSet::add(const std::string& name) {
  if (auto i = find(name)) return *i;
  return append_new(name);
}

std::size_t LabelSet::append_new(const std::string& name) {
  if (name.empty()) throw ParameterError("class name must be non-empty");
  if (index_.count(name)) throw ParameterError("class '" + name + "' already registered");
  index_.emplace(name, names_.size());
  names_.push_back(name);
  return names_.size() - 1;
}

std::optional<std::size_t> LabelSet::find(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t LabelSet::index(const std::string& name) const {
  if (auto i = find(name)) return *i;
  throw ParameterError("unknown class '" + name + "'");
}

const std::string& LabelSet::name(std::size_t index) const {
  if (index >= names_.size()) {
    throw ParameterError("label id " + std::to_string(index) + " outside " + std::to_string(names_.size()) +
                         " classes");
  }
  return names_[index];
}

}  // namespace owl
