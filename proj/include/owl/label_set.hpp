#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace owl {

// Ordered, append-only registry of class names. An index, once handed out,
// names the same class for the registry's lifetime.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(const std::vector<std::string>& names);

  // Returns the index of `name`, appending it if absent.
  std::size_t add(const std::string& name);
  // Throws ParameterError if `name` is already present.
  std::size_t append_new(const std::string& name);

  std::optional<std::size_t> find(const std::string& name) const;
  std::size_t index(const std::string& name) const;  // throws ParameterError
  bool contains(const std::string& name) const { return find(name).has_value(); }
  const std::string& name(std::size_t index) const;

  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }
  const std::vector<std::string>& names() const { return names_; }

  friend bool operator==(const LabelSet& a, const LabelSet& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace owl
