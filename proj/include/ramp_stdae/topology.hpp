#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace ramp_stdae {

/// Raised when a file cannot be parsed; the message names the offending field.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when parsed data violates a structural invariant. Carries every
/// violation found, not just the first.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Raised for inconsistent or incompatible configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct MovementDef {
  std::string id;
  std::string upstream;
  std::string downstream;
  std::string label;

  bool operator==(const MovementDef&) const = default;
};

/// Static interchange structure: mainline gantries (directions) and the ramp
/// movements connecting them. Immutable after construction.
struct InterchangeSpec {
  std::string name;
  std::vector<std::string> directions;
  std::vector<MovementDef> movements;
  std::int64_t interval_sec = 300;

  std::int64_t num_directions() const { return static_cast<std::int64_t>(directions.size()); }
  std::int64_t num_movements() const { return static_cast<std::int64_t>(movements.size()); }

  /// Index of a direction identifier, throws LookupError if absent.
  std::int64_t direction_index(const std::string& id) const;
  std::int64_t movement_index(const std::string& id) const;

  /// Returns the list of invariant violations (empty when valid).
  std::vector<std::string> violations() const;
  void validate() const;

  bool operator==(const InterchangeSpec&) const = default;
};

/// M x M binary relation between ramps, stored row-major.
class Adjacency {
 public:
  explicit Adjacency(std::int64_t size) : size_(size), cells_(size * size, 0) {}

  std::int64_t size() const { return size_; }
  std::uint8_t operator()(std::int64_t i, std::int64_t j) const { return cells_[i * size_ + j]; }
  std::uint8_t& operator()(std::int64_t i, std::int64_t j) { return cells_[i * size_ + j]; }
  const std::vector<std::uint8_t>& cells() const { return cells_; }

 private:
  std::int64_t size_;
  std::vector<std::uint8_t> cells_;
};

InterchangeSpec interchange_from_json(const nlohmann::json& doc);
nlohmann::json interchange_to_json(const InterchangeSpec& spec);

InterchangeSpec load_interchange(const std::filesystem::path& path);
void save_interchange(const InterchangeSpec& spec, const std::filesystem::path& path);

/// Fully connected ramp graph: ones off the diagonal, zeros on it. Self-loops
/// are added by the graph convolution at normalization time.
Adjacency full_adjacency(const InterchangeSpec& spec);

std::pair<std::string, std::string> movement_endpoints(const InterchangeSpec& spec,
                                                       const std::string& movement_id);

/// Double-cross interchange: four approaches (E, W, S, N), each with an
/// upstream and a downstream gantry, and the 12 turning movements between them.
InterchangeSpec default_interchange(std::int64_t interval_sec = 300);

}  // namespace ramp_stdae
