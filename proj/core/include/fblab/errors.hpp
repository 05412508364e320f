#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fblab {

// Bad inputs: wrong dimensions, out-of-range parameters, violated preconditions.
class argument_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation that started from valid inputs failed to converge or lost
// too much accuracy to honor its contract.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration files: parse or validation failures.  Carries every problem
// found so the caller can report them all at once.
class config_error : public std::runtime_error {
 public:
  explicit config_error(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& ps) {
    std::string all;
    for (const auto& p : ps) {
      if (!all.empty()) all += "\n";
      all += p;
    }
    return all;
  }
  std::vector<std::string> problems_;
};

}  // namespace fblab
